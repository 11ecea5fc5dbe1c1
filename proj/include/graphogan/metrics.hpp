// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "graphogan/error.hpp"
#include "graphogan/trigram.hpp"

namespace graphogan {

/// Unit-cost edit distance over code points (insert, delete, substitute).
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

struct EvalReport {
  double accuracy = 0.0;
  double avg_levenshtein = 0.0;
  std::size_t count = 0;
};

inline EvalReport evaluate(const std::vector<std::u32string>& preds, const std::vector<std::u32string>& golds) {
  if (preds.size() != golds.size()) {
    throw Error(Errc::length_mismatch, std::to_string(preds.size()) + " predictions vs " +
                                           std::to_string(golds.size()) + " gold items");
  }
  if (preds.empty()) throw Error(Errc::empty_batch, "nothing to evaluate");
  std::size_t hits = 0, dist = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    hits += preds[i] == golds[i] ? 1 : 0;
    dist += levenshtein(preds[i], golds[i]);
  }
  const auto n = static_cast<double>(preds.size());
  return {static_cast<double>(hits) / n, static_cast<double>(dist) / n, preds.size()};
}

/// Human-readable block followed by machine-readable key=value lines.
inline void write_eval_report(std::ostream& out, const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "Accuracy:             %.4f\nAverage Levenshtein:  %.4f\nItems:                %zu\n",
                r.accuracy, r.avg_levenshtein, r.count);
  out << buf;
  std::snprintf(buf, sizeof buf, "accuracy=%.17g\navg_levenshtein=%.17g\ncount=%zu\n", r.accuracy,
                r.avg_levenshtein, r.count);
  out << buf;
}

struct QualityReport {
  double cross_entropy = 0.0;  // bits per predicted symbol
  double uniqueness = 0.0;
  std::map<std::size_t, std::size_t> length_histogram;
};

/// Scores `samples` under a trigram model (smoothing 0.1) fit on `reference`.
/// The model's vocabulary covers the characters of both lists so every
/// sample has non-zero probability.
inline QualityReport sample_quality(const std::vector<std::u32string>& samples,
                                    const std::vector<std::u32string>& reference, double smoothing = 0.1) {
  if (samples.empty() || reference.empty()) throw Error(Errc::invalid_argument, "empty sample or reference list");
  std::set<char32_t> extra;
  for (const auto& s : samples) extra.insert(s.begin(), s.end());
  const auto model = TrigramModel::fit(reference, smoothing, {extra.begin(), extra.end()});

  QualityReport q;
  double bits = 0.0;
  std::size_t symbols = 0;
  for (const auto& s : samples) {
    const auto [b, n] = model.bits(s);
    bits += b;
    symbols += n;
    ++q.length_histogram[s.size()];
  }
  q.cross_entropy = bits / static_cast<double>(symbols);
  q.uniqueness = static_cast<double>(std::set<std::u32string>(samples.begin(), samples.end()).size()) /
                 static_cast<double>(samples.size());
  return q;
}

}  // namespace graphogan
