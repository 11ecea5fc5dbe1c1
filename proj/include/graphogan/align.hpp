// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include "graphogan/corpus.hpp"
#include "graphogan/error.hpp"

namespace graphogan {

/// lemma = lemma_prefix + stem + lemma_suffix, form = form_prefix + stem + form_suffix.
struct StemDecomposition {
  std::u32string lemma_prefix;
  std::u32string stem;
  std::u32string lemma_suffix;
  std::u32string form_prefix;
  std::u32string form_suffix;

  std::u32string lemma() const { return lemma_prefix + stem + lemma_suffix; }
  std::u32string form() const { return form_prefix + stem + form_suffix; }

  friend bool operator==(const StemDecomposition&, const StemDecomposition&) = default;
};

using StemCandidateList = std::vector<StemDecomposition>;

/// Candidate stems ranked longest first, then leftmost in the form, then
/// leftmost in the lemma.
///
/// A candidate is a maximal matching run: a pair of positions where lemma and
/// form agree and the agreement can be extended neither left nor right. When
/// the same substring is matched at several places only its best-ranked
/// placement is kept. An empty list means the pair shares no character.
inline StemCandidateList stem_candidates(std::u32string_view lemma, std::u32string_view form) {
  if (lemma.empty() || form.empty()) {
    throw Error(Errc::invalid_argument, "stem_candidates needs non-empty strings");
  }
  struct Run {
    std::size_t len, form_pos, lemma_pos;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < lemma.size(); ++i) {
    for (std::size_t j = 0; j < form.size(); ++j) {
      if (lemma[i] != form[j]) continue;
      if (i > 0 && j > 0 && lemma[i - 1] == form[j - 1]) continue;
      std::size_t len = 0;
      while (i + len < lemma.size() && j + len < form.size() && lemma[i + len] == form[j + len]) ++len;
      runs.push_back({len, j, i});
    }
  }
  std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) {
    return std::tie(b.len, a.form_pos, a.lemma_pos) < std::tie(a.len, b.form_pos, b.lemma_pos);
  });

  StemCandidateList out;
  for (const auto& r : runs) {
    std::u32string stem(lemma.substr(r.lemma_pos, r.len));
    bool seen = std::any_of(out.begin(), out.end(),
                            [&](const StemDecomposition& d) { return d.stem == stem; });
    if (seen) continue;
    out.push_back({std::u32string(lemma.substr(0, r.lemma_pos)), std::move(stem),
                   std::u32string(lemma.substr(r.lemma_pos + r.len)),
                   std::u32string(form.substr(0, r.form_pos)),
                   std::u32string(form.substr(r.form_pos + r.len))});
  }
  return out;
}

inline StemDecomposition best_stem(std::u32string_view lemma, std::u32string_view form) {
  auto candidates = stem_candidates(lemma, form);
  if (candidates.empty()) {
    throw Error(Errc::empty_candidates,
                "'" + utf8::encode(lemma) + "' and '" + utf8::encode(form) + "' share no character");
  }
  return std::move(candidates.front());
}

/// Best stem of every alignable triple, in dataset order, duplicates kept.
inline std::vector<std::u32string> training_stems(const Dataset& ds, Warnings* warnings = nullptr) {
  std::vector<std::u32string> stems;
  stems.reserve(ds.triples.size());
  for (std::size_t i = 0; i < ds.triples.size(); ++i) {
    const auto& t = ds.triples[i];
    auto candidates = stem_candidates(t.lemma, t.form);
    if (candidates.empty()) {
      warn(warnings, "row " + std::to_string(i + 1) + " ('" + utf8::encode(t.lemma) + "', '" +
                         utf8::encode(t.form) + "') has no common substring; skipped");
      continue;
    }
    stems.push_back(std::move(candidates.front().stem));
  }
  return stems;
}

}  // namespace graphogan
