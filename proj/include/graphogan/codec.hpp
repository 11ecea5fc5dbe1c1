// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <iomanip>
#include <ostream>
#include <string>

#include "graphogan/corpus.hpp"
#include "graphogan/error.hpp"

namespace graphogan {

/// Timesteps in every encoded stem.
inline constexpr Eigen::Index kFrameLength = 10;

/// T x V matrix: one row per timestep, one column per alphabet index.
using SequenceTensor = Eigen::MatrixXd;

inline SequenceTensor encode_stem(std::u32string_view stem, const Alphabet& a) {
  if (static_cast<Eigen::Index>(stem.size()) > kFrameLength) {
    throw Error(Errc::overlong_stem, "stem '" + utf8::encode(stem) + "' longer than " +
                                         std::to_string(kFrameLength));
  }
  SequenceTensor seq = SequenceTensor::Zero(kFrameLength, static_cast<Eigen::Index>(a.size()));
  Eigen::Index t = 0;
  for (char32_t c : stem) seq(t++, static_cast<Eigen::Index>(a.index_of(c))) = 1.0;
  for (; t < kFrameLength; ++t) seq(t, 0) = 1.0;
  return seq;
}

/// Argmax per row (lowest index wins ties). Pads come out as the pad glyph.
inline std::u32string decode(const SequenceTensor& seq, const Alphabet& a) {
  if (seq.rows() != kFrameLength || seq.cols() != static_cast<Eigen::Index>(a.size())) {
    throw Error(Errc::shape_mismatch, "expected " + std::to_string(kFrameLength) + "x" +
                                          std::to_string(a.size()) + ", got " +
                                          std::to_string(seq.rows()) + "x" + std::to_string(seq.cols()));
  }
  std::u32string out;
  out.reserve(kFrameLength);
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index v = 1; v < seq.cols(); ++v) {
      if (seq(t, v) > seq(t, best)) best = v;
    }
    out.push_back(a.symbol(static_cast<std::size_t>(best)));
  }
  return out;
}

/// Drops the trailing run of pad glyphs.
inline std::u32string strip_pad(std::u32string_view raw, char32_t pad = kDefaultPadGlyph) {
  auto end = raw.size();
  while (end > 0 && raw[end - 1] == pad) --end;
  return std::u32string(raw.substr(0, end));
}

/// Debug dump: header of symbols, then one CSV row per timestep.
inline void write_tensor_csv(std::ostream& out, const SequenceTensor& seq, const Alphabet& a) {
  for (std::size_t v = 0; v < a.size(); ++v) {
    if (v) out << ',';
    std::string s;
    utf8::append(s, a.symbol(v));
    out << s;
  }
  out << '\n' << std::setprecision(17);
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    for (Eigen::Index v = 0; v < seq.cols(); ++v) {
      if (v) out << ',';
      out << seq(t, v);
    }
    out << '\n';
  }
}

}  // namespace graphogan
