// SPDX-License-Identifier: Apache-2.0
//
// Walks the library end to end on a toy language whose stems alternate
// consonant and vowel: align, fit a trigram model, train a small GAN, and
// hallucinate a few triples with each stem generator.
#include <iostream>
#include <random>

#include "graphogan/graphogan.hpp"

using namespace graphogan;

namespace {

Dataset toy_dataset(std::size_t n, std::uint64_t seed) {
  const std::u32string consonants = U"bdkmt", vowels = U"aeiou";
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> len(3, 6), pick(0, 4);
  Dataset ds{"toy", {}};
  for (std::size_t k = 0; k < n; ++k) {
    std::u32string stem;
    for (std::size_t i = 0, L = len(rng); i < L; ++i) stem.push_back(i % 2 ? vowels[pick(rng)] : consonants[pick(rng)]);
    if (k % 2) {
      ds.triples.push_back({stem, U"mi" + stem, {"N", "PL"}});
    } else {
      ds.triples.push_back({stem, stem + U"ka", {"V", "PST"}});
    }
  }
  return ds;
}

}  // namespace

int main() {
  const Dataset ds = toy_dataset(100, 7);
  const Alphabet alphabet = build_alphabet(ds);
  const auto stems = training_stems(ds);

  std::cout << "alignment of the first rows\n";
  for (std::size_t i = 0; i < 4; ++i) {
    const auto d = best_stem(ds.triples[i].lemma, ds.triples[i].form);
    std::cout << "  " << utf8::encode(d.lemma()) << " -> " << utf8::encode(d.form()) << "  stem "
              << utf8::encode(d.stem) << '\n';
  }

  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.generator_hidden = 32;
  cfg.discriminator_hidden = 32;
  cfg.seed = 1;
  cfg.sample_every = 20;
  const TrainResult trained = train(stems, alphabet, cfg);
  std::cout << "\ngan: " << trained.history.steps() << " steps, last L_D "
            << trained.history.discriminator.back() << ", L_G " << trained.history.generator.back() << '\n';
  for (const auto& s : trained.history.samples) std::cout << "  epoch " << s.epoch << "  " << utf8::encode(s.raw) << '\n';

  const RandomStemGenerator random_gen(alphabet);
  const TrigramStemGenerator trigram_gen(trigram_fit(stems, kDefaultTrigramSmoothing));
  const GanStemGenerator gan_gen(trained.model);
  for (const StemGenerator* g : std::initializer_list<const StemGenerator*>{&random_gen, &trigram_gen, &gan_gen}) {
    HallucinateOptions opt;
    opt.count = 4;
    opt.seed = 2;
    std::cout << '\n' << method_name(g->method()) << '\n';
    for (const auto& t : hallucinate(ds, *g, opt).triples) std::cout << "  " << serialize_row(t) << '\n';
  }
}
