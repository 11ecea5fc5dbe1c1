// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace graphogan {

enum class Errc {
  io,
  malformed_row,
  invalid_utf8,
  pad_collision,
  empty_candidates,
  overlong_stem,
  unknown_symbol,
  shape_mismatch,
  invalid_argument,
  numeric_fault,
  stale_tape,
  empty_batch,
  empty_training_set,
  history_too_short,
  generation_exhausted,
  no_alignable,
  length_mismatch,
  missing_model,
  bad_checkpoint,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::io: return "io";
    case Errc::malformed_row: return "malformed-row";
    case Errc::invalid_utf8: return "invalid-utf8";
    case Errc::pad_collision: return "pad-collision";
    case Errc::empty_candidates: return "empty-candidates";
    case Errc::overlong_stem: return "overlong-stem";
    case Errc::unknown_symbol: return "unknown-symbol";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::numeric_fault: return "numeric-fault";
    case Errc::stale_tape: return "stale-tape";
    case Errc::empty_batch: return "empty-batch";
    case Errc::empty_training_set: return "empty-training-set";
    case Errc::history_too_short: return "history-too-short";
    case Errc::generation_exhausted: return "generation-exhausted";
    case Errc::no_alignable: return "no-alignable";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::missing_model: return "missing-model";
    case Errc::bad_checkpoint: return "bad-checkpoint";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Non-fatal diagnostics. When no collector is given they go to stderr.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink) {
    sink->push_back(std::move(message));
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace graphogan
