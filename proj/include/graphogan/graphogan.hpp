// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphogan/align.hpp"
#include "graphogan/checkpoint.hpp"
#include "graphogan/codec.hpp"
#include "graphogan/corpus.hpp"
#include "graphogan/error.hpp"
#include "graphogan/gan.hpp"
#include "graphogan/halluc.hpp"
#include "graphogan/metrics.hpp"
#include "graphogan/neural.hpp"
#include "graphogan/trigram.hpp"
#include "graphogan/utf8.hpp"
