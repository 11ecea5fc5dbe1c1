// SPDX-License-Identifier: Apache-2.0
//
// Stem generators, output cleaning and the splice-based hallucination pipeline.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "graphogan/align.hpp"
#include "graphogan/corpus.hpp"
#include "graphogan/gan.hpp"
#include "graphogan/trigram.hpp"

namespace graphogan {

inline constexpr double kDefaultTrigramSmoothing = 0.1;
inline constexpr int kMaxProposalRetries = 50;
inline constexpr std::size_t kDefaultHallucinations = 10000;

/// Cleans a raw generator string:
///   1. cut at the first pad glyph,
///   2. collapse any run of more than two equal characters to two,
///   3. truncate to `target_len`.
inline std::u32string clean(std::u32string_view raw, std::size_t target_len,
                            char32_t pad = kDefaultPadGlyph) {
  raw = raw.substr(0, raw.find(pad));
  std::u32string out;
  out.reserve(raw.size());
  for (char32_t c : raw) {
    const auto n = out.size();
    if (n >= 2 && out[n - 1] == c && out[n - 2] == c) continue;
    out.push_back(c);
  }
  if (out.size() > target_len) out.resize(target_len);
  return out;
}

inline std::u32string random_stem(const Alphabet& a, std::size_t length, Rng& rng) {
  if (length == 0) throw Error(Errc::invalid_argument, "random stem length must be positive");
  const auto& symbols = a.real_symbols();
  if (symbols.empty()) throw Error(Errc::invalid_argument, "alphabet has no real symbols");
  std::uniform_int_distribution<std::size_t> pick(0, symbols.size() - 1);
  std::u32string out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) out.push_back(symbols[pick(rng)]);
  return out;
}

enum class Method { random, trigram, gan };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::random: return "random";
    case Method::trigram: return "trigram";
    case Method::gan: return "gan";
  }
  return "?";
}

/// Produces pad-free stems of an exact requested length. Implementations are
/// immutable once built, so one instance may serve several threads as long
/// as each brings its own Rng.
class StemGenerator {
 public:
  virtual ~StemGenerator() = default;
  virtual Method method() const = 0;
  virtual std::u32string propose(std::size_t target_len, Rng& rng) const = 0;
};

namespace detail {

/// Draws until one sample reaches `target_len`, then truncates. After the
/// retry budget, stitches the non-empty draws together instead.
inline std::u32string fill_to_length(std::size_t target_len,
                                     const std::function<std::u32string()>& draw) {
  std::vector<std::u32string> partial;
  for (int attempt = 0; attempt < kMaxProposalRetries; ++attempt) {
    auto s = draw();
    if (s.size() >= target_len) return s.substr(0, target_len);
    if (!s.empty()) partial.push_back(std::move(s));
  }
  if (partial.empty()) {
    throw Error(Errc::generation_exhausted,
                "no non-empty sample after " + std::to_string(kMaxProposalRetries) + " attempts");
  }
  std::u32string out;
  for (std::size_t k = 0; out.size() < target_len; k = (k + 1) % partial.size()) out += partial[k];
  out.resize(target_len);
  return out;
}

}  // namespace detail

class RandomStemGenerator final : public StemGenerator {
 public:
  explicit RandomStemGenerator(Alphabet a) : alphabet_(std::move(a)) {}
  Method method() const override { return Method::random; }
  std::u32string propose(std::size_t target_len, Rng& rng) const override {
    return random_stem(alphabet_, target_len, rng);
  }

 private:
  Alphabet alphabet_;
};

class TrigramStemGenerator final : public StemGenerator {
 public:
  explicit TrigramStemGenerator(TrigramModel m) : model_(std::move(m)) {}
  Method method() const override { return Method::trigram; }
  const TrigramModel& model() const { return model_; }

  std::u32string propose(std::size_t target_len, Rng& rng) const override {
    if (target_len == 0) throw Error(Errc::invalid_argument, "target length must be positive");
    const auto max_len = std::max<std::size_t>(static_cast<std::size_t>(kFrameLength), target_len);
    return detail::fill_to_length(target_len, [&] { return model_.sample(max_len, rng); });
  }

 private:
  TrigramModel model_;
};

class GanStemGenerator final : public StemGenerator {
 public:
  explicit GanStemGenerator(GanModel m) : model_(std::move(m)) {}
  Method method() const override { return Method::gan; }
  const GanModel& model() const { return model_; }

  std::u32string propose(std::size_t target_len, Rng& rng) const override {
    if (target_len == 0) throw Error(Errc::invalid_argument, "target length must be positive");
    // Raw samples come in small batches; one forward pass serves several attempts.
    constexpr std::size_t kBatch = 10;
    std::vector<std::u32string> raw;
    std::size_t next = 0;
    return detail::fill_to_length(target_len, [&] {
      if (next == raw.size()) {
        raw = sample_raw(model_, kBatch, rng);
        next = 0;
      }
      return clean(raw[next++], target_len, model_.alphabet.pad_glyph());
    });
  }

 private:
  GanModel model_;
};

inline std::u32string propose_stem(const StemGenerator& g, std::size_t target_len, Rng& rng) {
  return g.propose(target_len, rng);
}

/// Replaces the stem in both lemma and form, keeping affixes and tags.
inline Triple splice(const Triple& base, const StemDecomposition& d, std::u32string_view new_stem) {
  Triple t;
  t.lemma = d.lemma_prefix + std::u32string(new_stem) + d.lemma_suffix;
  t.form = d.form_prefix + std::u32string(new_stem) + d.form_suffix;
  t.tags = base.tags;
  return t;
}

struct HallucinateOptions {
  std::size_t count = kDefaultHallucinations;
  std::uint64_t seed = 0;
  unsigned shards = 1;  // output depends on the shard count, not on thread scheduling
};

/// `count` artificial triples. Base rows are drawn uniformly with replacement
/// from the alignable rows of `ds`. Shard s uses an Rng seeded from (seed, s)
/// and the output is ordered by shard, then by draw.
inline Dataset hallucinate(const Dataset& ds, const StemGenerator& g, const HallucinateOptions& opt,
                           Warnings* warnings = nullptr) {
  if (opt.shards == 0) throw Error(Errc::invalid_argument, "shard count must be positive");
  struct Base {
    std::size_t row;
    StemDecomposition d;
  };
  std::vector<Base> bases;
  for (std::size_t i = 0; i < ds.triples.size(); ++i) {
    const auto& t = ds.triples[i];
    auto c = stem_candidates(t.lemma, t.form);
    if (c.empty()) {
      warn(warnings, "row " + std::to_string(i + 1) + " is not alignable; not used as a base");
      continue;
    }
    bases.push_back({i, std::move(c.front())});
  }
  if (bases.empty()) throw Error(Errc::no_alignable, "dataset '" + ds.language + "' has no alignable row");

  std::vector<std::vector<Triple>> shards(opt.shards);
  std::vector<std::exception_ptr> errors(opt.shards);
  auto work = [&](unsigned s) {
    try {
      const std::size_t n = opt.count / opt.shards + (s < opt.count % opt.shards ? 1 : 0);
      std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(s)};
      Rng rng(seq);
      std::uniform_int_distribution<std::size_t> pick(0, bases.size() - 1);
      auto& out = shards[s];
      out.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        const Base& b = bases[pick(rng)];
        out.push_back(splice(ds.triples[b.row], b.d, g.propose(b.d.stem.size(), rng)));
      }
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  if (opt.shards == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned s = 0; s < opt.shards; ++s) threads.emplace_back(work, s);
    for (auto& th : threads) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Dataset out{ds.language, {}};
  out.triples.reserve(opt.count);
  for (auto& s : shards) {
    for (auto& t : s) out.triples.push_back(std::move(t));
  }
  return out;
}

}  // namespace graphogan
