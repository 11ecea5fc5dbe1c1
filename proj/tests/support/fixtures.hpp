// SPDX-License-Identifier: Apache-2.0
//
// Shared test fixtures and independent reference implementations.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "graphogan/corpus.hpp"

namespace graphogan::testing {

inline const std::u32string kConsonants = U"bdkmt";
inline const std::u32string kVowels = U"aeiou";

inline bool is_consonant(char32_t c) { return kConsonants.find(c) != std::u32string::npos; }
inline bool is_vowel(char32_t c) { return kVowels.find(c) != std::u32string::npos; }

/// Stems of the synthetic language: consonant first, strictly alternating,
/// 3 to 6 characters.
inline bool matches_cv_pattern(std::u32string_view s) {
  if (s.size() < 3 || s.size() > 6) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i % 2 == 0 ? !is_consonant(s[i]) : !is_vowel(s[i])) return false;
  }
  return true;
}

inline std::vector<std::u32string> cv_stems(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(3, 6);
  std::uniform_int_distribution<std::size_t> pick(0, 4);
  std::vector<std::u32string> out;
  for (std::size_t k = 0; k < n; ++k) {
    std::u32string s;
    const int L = len(rng);
    for (int i = 0; i < L; ++i) s.push_back(i % 2 == 0 ? kConsonants[pick(rng)] : kVowels[pick(rng)]);
    out.push_back(std::move(s));
  }
  return out;
}

/// Triples whose form is the stem plus one of two suffixes.
inline Dataset cv_dataset(const std::vector<std::u32string>& stems) {
  Dataset ds{"cv", {}};
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (i % 2 == 0) {
      ds.triples.push_back({stems[i], stems[i] + U"ka", {"V", "PST"}});
    } else {
      ds.triples.push_back({stems[i], U"mi" + stems[i], {"N", "PL"}});
    }
  }
  return ds;
}

/// Probability that a uniform random stem matches the pattern, averaged over
/// the length distribution of `stems` (half the alphabet is consonants).
inline double uniform_cv_match_rate(const std::vector<std::u32string>& stems) {
  double p = 0.0;
  for (const auto& s : stems) p += std::pow(0.5, static_cast<double>(s.size()));
  return p / static_cast<double>(stems.size());
}

/// Exponential-time edit distance straight from the recursive definition.
inline std::size_t levenshtein_recursive(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::size_t sub = levenshtein_recursive(a.substr(1), b.substr(1)) + (a[0] == b[0] ? 0 : 1);
  const std::size_t del = levenshtein_recursive(a.substr(1), b) + 1;
  const std::size_t ins = levenshtein_recursive(a, b.substr(1)) + 1;
  return std::min({sub, del, ins});
}

/// Longest common substring by enumeration: longest first, then leftmost in
/// `form`, then leftmost in `lemma`. Returns (lemma_pos, form_pos, len).
struct BruteStem {
  std::size_t lemma_pos = 0, form_pos = 0, len = 0;
};

inline BruteStem brute_force_stem(std::u32string_view lemma, std::u32string_view form) {
  BruteStem best;
  for (std::size_t len = std::min(lemma.size(), form.size()); len > 0; --len) {
    for (std::size_t j = 0; j + len <= form.size(); ++j) {
      for (std::size_t i = 0; i + len <= lemma.size(); ++i) {
        if (lemma.substr(i, len) == form.substr(j, len)) return {i, j, len};
      }
    }
  }
  return best;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("graphogan_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace graphogan::testing
