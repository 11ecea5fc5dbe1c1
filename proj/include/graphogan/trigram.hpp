// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "graphogan/error.hpp"
#include "graphogan/utf8.hpp"

namespace graphogan {

/// Character trigram model with add-k smoothing.
///
/// Every stem is scored as if framed by two begin markers and one end
/// marker, so the outcome space for any context is the vocabulary plus end.
class TrigramModel {
 public:
  /// `extra_symbols` widens the vocabulary beyond the characters of `stems`.
  static TrigramModel fit(const std::vector<std::u32string>& stems, double smoothing,
                          const std::vector<char32_t>& extra_symbols = {}) {
    if (stems.empty()) throw Error(Errc::invalid_argument, "trigram model needs at least one stem");
    if (!(smoothing >= 0.0)) throw Error(Errc::invalid_argument, "smoothing must be non-negative");
    std::set<char32_t> vocab(extra_symbols.begin(), extra_symbols.end());
    for (const auto& s : stems) vocab.insert(s.begin(), s.end());

    TrigramModel m;
    m.vocab_.assign(vocab.begin(), vocab.end());
    m.smoothing_ = smoothing;
    for (const auto& s : stems) {
      int c2 = m.begin(), c1 = m.begin();
      for (char32_t ch : s) {
        const int c = m.id(ch);
        m.add(c2, c1, c);
        c2 = c1;
        c1 = c;
      }
      m.add(c2, c1, m.end());
    }
    return m;
  }

  double smoothing() const { return smoothing_; }
  const std::vector<char32_t>& vocabulary() const { return vocab_; }

  /// Outcome ids 0..vocab-1 are characters, vocab is the end marker.
  int end() const { return static_cast<int>(vocab_.size()); }
  int begin() const { return end() + 1; }

  int id(char32_t c) const {
    auto it = std::lower_bound(vocab_.begin(), vocab_.end(), c);
    if (it == vocab_.end() || *it != c) {
      std::string s;
      utf8::append(s, c);
      throw Error(Errc::unknown_symbol, "'" + s + "' not in trigram vocabulary");
    }
    return static_cast<int>(it - vocab_.begin());
  }

  /// P(next | c2 c1). Contexts never observed fall back to uniform.
  double probability(int c2, int c1, int next) const {
    const auto outcomes = static_cast<double>(vocab_.size() + 1);
    auto it = counts_.find(key(c2, c1));
    if (it == counts_.end()) return 1.0 / outcomes;
    const auto& row = it->second;
    return (row.counts[static_cast<std::size_t>(next)] + smoothing_) / (row.total + smoothing_ * outcomes);
  }

  /// Total -log2 probability of `s` followed by the end marker, and the
  /// number of predicted symbols (|s| + 1).
  std::pair<double, std::size_t> bits(std::u32string_view s) const {
    double total = 0.0;
    int c2 = begin(), c1 = begin();
    for (char32_t ch : s) {
      const int c = id(ch);
      total -= std::log2(probability(c2, c1, c));
      c2 = c1;
      c1 = c;
    }
    total -= std::log2(probability(c2, c1, end()));
    return {total, s.size() + 1};
  }

  /// Ancestral sampling until the end marker or `max_len` characters.
  std::u32string sample(std::size_t max_len, std::mt19937_64& rng) const {
    std::u32string out;
    int c2 = begin(), c1 = begin();
    std::vector<double> weights(vocab_.size() + 1);
    while (out.size() < max_len) {
      for (int c = 0; c <= end(); ++c) weights[static_cast<std::size_t>(c)] = probability(c2, c1, c);
      std::discrete_distribution<int> pick(weights.begin(), weights.end());
      const int c = pick(rng);
      if (c == end()) break;
      out.push_back(vocab_[static_cast<std::size_t>(c)]);
      c2 = c1;
      c1 = c;
    }
    return out;
  }

  /// True when the transition was seen during fitting.
  bool observed(int c2, int c1, int next) const {
    auto it = counts_.find(key(c2, c1));
    return it != counts_.end() && it->second.counts[static_cast<std::size_t>(next)] > 0.0;
  }

 private:
  struct Row {
    std::vector<double> counts;
    double total = 0.0;
  };

  std::uint64_t key(int c2, int c1) const {
    return static_cast<std::uint64_t>(c2) * static_cast<std::uint64_t>(begin() + 1) +
           static_cast<std::uint64_t>(c1);
  }

  void add(int c2, int c1, int next) {
    auto& row = counts_[key(c2, c1)];
    if (row.counts.empty()) row.counts.assign(vocab_.size() + 1, 0.0);
    row.counts[static_cast<std::size_t>(next)] += 1.0;
    row.total += 1.0;
  }

  std::vector<char32_t> vocab_;
  double smoothing_ = 0.0;
  std::map<std::uint64_t, Row> counts_;
};

inline TrigramModel trigram_fit(const std::vector<std::u32string>& stems, double smoothing) {
  return TrigramModel::fit(stems, smoothing);
}

inline std::u32string trigram_sample(const TrigramModel& m, std::mt19937_64& rng, std::size_t max_len = 10) {
  return m.sample(max_len, rng);
}

}  // namespace graphogan
