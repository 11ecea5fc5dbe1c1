// SPDX-License-Identifier: Apache-2.0
//
// Recurrent GAN over one-hot stem sequences.
//
// Generator: noise (T x V) -> LSTM(H, sequences) -> dropout(0.2)
//            -> LSTM(H, sequences) -> per-timestep dense(V) + softmax.
// Discriminator: sequence (T x V) -> LSTM(H, last state) -> dense(1) + sigmoid.
//
// Losses are the sigmoid-bounded Wasserstein form:
//   L_D = mean(D(fake)) - mean(D(real))   in [-1, 1]
//   L_G = 1 - mean(D(fake))               in [0, 1]
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "graphogan/checkpoint.hpp"
#include "graphogan/codec.hpp"
#include "graphogan/corpus.hpp"
#include "graphogan/neural.hpp"

namespace graphogan {

inline constexpr double kGeneratorDropout = 0.2;
inline constexpr Index kDefaultHidden = 100;

// ---------------------------------------------------------------- parameters

struct GeneratorParams {
  LstmParams first;
  LstmParams second;
  DenseParams out;

  static GeneratorParams init(Index vocab, Index hidden, Rng& rng) {
    GeneratorParams p;
    p.first = LstmParams::init(vocab, hidden, rng);
    p.second = LstmParams::init(hidden, hidden, rng);
    p.out = DenseParams::init(hidden, vocab, rng);
    return p;
  }

  Index vocab() const { return first.input(); }
  Index hidden() const { return first.hidden(); }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    first.visit(prefix + "generator.lstm1.", f);
    second.visit(prefix + "generator.lstm2.", f);
    out.visit(prefix + "generator.dense.", f);
  }
  void bump() {
    first.bump();
    second.bump();
  }
};

struct DiscriminatorParams {
  LstmParams lstm;
  DenseParams out;

  static DiscriminatorParams init(Index vocab, Index hidden, Rng& rng) {
    return {LstmParams::init(vocab, hidden, rng), DenseParams::init(hidden, 1, rng)};
  }

  Index vocab() const { return lstm.input(); }
  Index hidden() const { return lstm.hidden(); }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    lstm.visit(prefix + "discriminator.lstm.", f);
    out.visit(prefix + "discriminator.dense.", f);
  }
  void bump() { lstm.bump(); }
};

// ---------------------------------------------------------------- generator

struct GeneratorTape {
  LstmTape first;
  Sequence masks;
  LstmTape second;
  Sequence hidden;  // second LSTM outputs
  Sequence probs;
};

namespace detail {

/// The parameters themselves at double precision, a converted copy otherwise.
template <class S, class P>
decltype(auto) at_precision(const P& p) {
  if constexpr (std::is_same_v<S, double>) {
    return (p);
  } else {
    return p.template cast<S>();
  }
}

}  // namespace detail

/// `dropout_rng == nullptr` disables dropout (sampling mode). Tapes are
/// recorded only at double precision.
template <class S>
SequenceT<S> generator_forward(const GeneratorParams& p, const SequenceT<S>& noise, Rng* dropout_rng,
                               GeneratorTape* tape = nullptr) {
  const Dropout dropout(kGeneratorDropout);
  const auto& first = detail::at_precision<S>(p.first);
  const auto& second = detail::at_precision<S>(p.second);
  const auto& out = detail::at_precision<S>(p.out);
  if constexpr (!std::is_same_v<S, double>) tape = nullptr;
  SequenceT<S> h1 = recurrent_forward(first, noise, true, tape ? &tape->first : nullptr);
  SequenceT<S> masks(h1.size());
  for (std::size_t t = 0; t < h1.size(); ++t) h1[t] = dropout.forward(h1[t], dropout_rng, &masks[t]);
  SequenceT<S> h2 = recurrent_forward(second, h1, true, tape ? &tape->second : nullptr);
  SequenceT<S> probs(h2.size());
  for (std::size_t t = 0; t < h2.size(); ++t) probs[t] = softmax_columns(dense_forward(out, h2[t]));
  if constexpr (std::is_same_v<S, double>) {
    if (tape) {
      tape->masks = std::move(masks);
      tape->hidden = std::move(h2);
      tape->probs = probs;
    }
  }
  return probs;
}

/// Parameter gradients given the gradient of a scalar w.r.t. the softmax outputs.
inline GeneratorParams generator_backward(const GeneratorParams& p, const GeneratorTape& tape,
                                          const Sequence& dprobs) {
  if (dprobs.size() != tape.probs.size()) throw Error(Errc::shape_mismatch, "generator upstream length");
  GeneratorParams g = zeros_like(p);
  Sequence dh2(dprobs.size());
  for (std::size_t t = 0; t < dprobs.size(); ++t) {
    detail::require_shape(dprobs[t], tape.probs[t].rows(), tape.probs[t].cols(), "generator upstream");
    const Matrix dlogits = softmax_columns_backward(tape.probs[t], dprobs[t]);
    dh2[t] = dense_backward(p.out, tape.hidden[t], dlogits, g.out);
  }
  auto g2 = recurrent_backward(p.second, tape.second, dh2);
  Sequence dh1(g2.inputs.size());
  for (std::size_t t = 0; t < dh1.size(); ++t) dh1[t] = Dropout::backward(g2.inputs[t], tape.masks[t]);
  auto g1 = recurrent_backward(p.first, tape.first, dh1);
  g.first = std::move(g1.params);
  g.second = std::move(g2.params);
  return g;
}

// ---------------------------------------------------------------- discriminator

struct DiscriminatorTape {
  LstmTape lstm;
  Matrix last_hidden;
  Matrix scores;
};

/// Scores in (0,1), one column per example.
template <class S>
MatrixT<S> discriminator_forward(const DiscriminatorParams& p, const SequenceT<S>& x,
                                 DiscriminatorTape* tape = nullptr) {
  const auto& lstm = detail::at_precision<S>(p.lstm);
  const auto& out = detail::at_precision<S>(p.out);
  if constexpr (!std::is_same_v<S, double>) tape = nullptr;
  SequenceT<S> h = recurrent_forward(lstm, x, false, tape ? &tape->lstm : nullptr);
  MatrixT<S> scores = sigmoid(dense_forward(out, h.front()));
  if constexpr (std::is_same_v<S, double>) {
    if (tape) {
      tape->last_hidden = std::move(h.front());
      tape->scores = scores;
    }
  }
  return scores;
}

struct DiscriminatorGrads {
  DiscriminatorParams params;
  Sequence inputs;
};

inline DiscriminatorGrads discriminator_backward(const DiscriminatorParams& p, const DiscriminatorTape& tape,
                                                 const Matrix& dscores) {
  detail::require_shape(dscores, 1, tape.scores.cols(), "discriminator upstream");
  DiscriminatorGrads g{zeros_like(p), {}};
  const Matrix dlogit = dscores.cwiseProduct(tape.scores.cwiseProduct((1.0 - tape.scores.array()).matrix()));
  Matrix dh = dense_backward(p.out, tape.last_hidden, dlogit, g.params.out);
  auto gl = recurrent_backward(p.lstm, tape.lstm, Sequence{std::move(dh)});
  g.params.lstm = std::move(gl.params);
  g.inputs = std::move(gl.inputs);
  return g;
}

// ---------------------------------------------------------------- losses

namespace detail {

inline double checked_mean(std::span<const double> scores, const char* what) {
  if (scores.empty()) throw Error(Errc::empty_batch, std::string("empty ") + what + " batch");
  double sum = 0.0;
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(Errc::invalid_argument, std::string(what) + " score outside [0,1]");
    sum += s;
  }
  return sum / static_cast<double>(scores.size());
}

}  // namespace detail

inline double discriminator_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  return detail::checked_mean(fake_scores, "fake") - detail::checked_mean(real_scores, "real");
}

inline double generator_loss(std::span<const double> fake_scores) {
  return 1.0 - detail::checked_mean(fake_scores, "fake");
}

// ---------------------------------------------------------------- model

struct GanModel {
  Alphabet alphabet;
  GeneratorParams generator;
  DiscriminatorParams discriminator;
  std::uint64_t seed = 0;

  static GanModel init(const Alphabet& a, Index generator_hidden, Index discriminator_hidden,
                       std::uint64_t seed) {
    Rng rng(seed);
    GanModel m;
    m.alphabet = a;
    const auto V = static_cast<Index>(a.size());
    m.generator = GeneratorParams::init(V, generator_hidden, rng);
    m.discriminator = DiscriminatorParams::init(V, discriminator_hidden, rng);
    m.seed = seed;
    return m;
  }
};

inline Checkpoint to_checkpoint(GanModel& m) {
  Checkpoint ck;
  ck.alphabet = m.alphabet;
  ck.dims = {static_cast<std::uint32_t>(kFrameLength), static_cast<std::uint32_t>(m.generator.hidden()),
             static_cast<std::uint32_t>(m.discriminator.hidden())};
  ck.seed = m.seed;
  append_arrays(ck, m.generator, "");
  append_arrays(ck, m.discriminator, "");
  return ck;
}

inline GanModel from_checkpoint(const Checkpoint& ck) {
  if (ck.dims.size() != 3 || ck.dims[0] != kFrameLength) {
    throw Error(Errc::bad_checkpoint, "checkpoint dims do not describe a GAN");
  }
  const auto V = static_cast<Index>(ck.alphabet.size());
  GanModel m;
  m.alphabet = ck.alphabet;
  m.seed = ck.seed;
  m.generator = {LstmParams::zeros(V, ck.dims[1]), LstmParams::zeros(ck.dims[1], ck.dims[1]),
                 DenseParams::zeros(ck.dims[1], V)};
  m.discriminator = {LstmParams::zeros(V, ck.dims[2]), DenseParams::zeros(ck.dims[2], 1)};
  restore_arrays(ck, m.generator, "");
  restore_arrays(ck, m.discriminator, "");
  return m;
}

// ---------------------------------------------------------------- sampling

/// T x V independent uniform(0,1) draws.
inline SequenceTensor sample_noise(Rng& rng, Index vocab) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SequenceTensor m(kFrameLength, vocab);
  for (Index t = 0; t < kFrameLength; ++t)
    for (Index v = 0; v < vocab; ++v) m(t, v) = u(rng);
  return m;
}

inline Sequence noise_batch(Rng& rng, Index vocab, Index batch) {
  std::vector<Matrix> examples;
  examples.reserve(static_cast<std::size_t>(batch));
  for (Index b = 0; b < batch; ++b) examples.push_back(sample_noise(rng, vocab));
  return to_batch(examples);
}

/// Decoded generator outputs, each exactly kFrameLength symbols long.
inline std::vector<std::u32string> sample_raw(const GanModel& m, std::size_t n, Rng& rng) {
  constexpr std::size_t kChunk = 256;
  std::vector<std::u32string> out;
  out.reserve(n);
  const auto V = static_cast<Index>(m.alphabet.size());
  while (out.size() < n) {
    const auto b = static_cast<Index>(std::min(kChunk, n - out.size()));
    const Sequence probs = generator_forward(m.generator, noise_batch(rng, V, b), nullptr);
    for (Index j = 0; j < b; ++j) out.push_back(decode(example_from_batch(probs, j), m.alphabet));
  }
  return out;
}

// ---------------------------------------------------------------- training

struct TrainConfig {
  int epochs = 500;
  int batch_size = 32;
  double generator_lr = 1e-3;
  double discriminator_lr = 1e-3;
  std::uint64_t seed = 0;
  int sample_every = 50;  // epochs between logged samples; 0 disables
  Index generator_hidden = kDefaultHidden;
  Index discriminator_hidden = kDefaultHidden;

  void validate() const {
    if (epochs < 1 || batch_size < 1 || sample_every < 0 || generator_hidden < 1 ||
        discriminator_hidden < 1 || !(generator_lr >= 0.0) || !(discriminator_lr >= 0.0)) {
      throw Error(Errc::invalid_argument, "invalid training configuration");
    }
  }
};

struct SampleLogEntry {
  int epoch;
  std::u32string raw;
};

struct LossHistory {
  std::vector<double> discriminator;
  std::vector<double> generator;
  std::vector<SampleLogEntry> samples;

  std::size_t steps() const { return discriminator.size(); }
};

struct TrainResult {
  GanModel model;
  LossHistory history;
};

/// One discriminator update on a batch mixing real and fake columns.
/// Returns L_D before the update.
inline double discriminator_step(GanModel& m, const Sequence& real, Rng& rng, RmsProp& opt) {
  const Index n_real = real.front().cols();
  const auto V = static_cast<Index>(m.alphabet.size());
  const Sequence fake = generator_forward(m.generator, noise_batch(rng, V, n_real), &rng);
  Sequence mixed(real.size());
  for (std::size_t t = 0; t < real.size(); ++t) {
    mixed[t].resize(V, 2 * n_real);
    mixed[t] << real[t], fake[t];
  }
  DiscriminatorTape tape;
  const Matrix scores = discriminator_forward(m.discriminator, mixed, &tape);
  const std::span<const double> all(scores.data(), static_cast<std::size_t>(scores.size()));
  const double loss = discriminator_loss(all.first(static_cast<std::size_t>(n_real)),
                                         all.last(static_cast<std::size_t>(n_real)));
  Matrix dscores(1, 2 * n_real);
  dscores.leftCols(n_real).setConstant(-1.0 / static_cast<double>(n_real));
  dscores.rightCols(n_real).setConstant(1.0 / static_cast<double>(n_real));
  auto grads = discriminator_backward(m.discriminator, tape, dscores);
  optimizer_step(m.discriminator, grads.params, opt);
  return loss;
}

/// One generator update through the frozen discriminator. Returns L_G before the update.
inline double generator_step(GanModel& m, Index batch, Rng& rng, RmsProp& opt) {
  const auto V = static_cast<Index>(m.alphabet.size());
  GeneratorTape gtape;
  const Sequence fake = generator_forward(m.generator, noise_batch(rng, V, batch), &rng, &gtape);
  DiscriminatorTape dtape;
  const Matrix scores = discriminator_forward(m.discriminator, fake, &dtape);
  const double loss =
      generator_loss(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
  const Matrix dscores = Matrix::Constant(1, batch, -1.0 / static_cast<double>(batch));
  auto dgrads = discriminator_backward(m.discriminator, dtape, dscores);
  auto ggrads = generator_backward(m.generator, gtape, dgrads.inputs);
  optimizer_step(m.generator, ggrads, opt);
  return loss;
}

/// Alternating 1:1 adversarial training. Stems longer than the frame are
/// dropped with a warning.
inline TrainResult train(const std::vector<std::u32string>& stems, const Alphabet& a, const TrainConfig& cfg,
                         Warnings* warnings = nullptr) {
  cfg.validate();
  std::vector<Matrix> real;
  for (const auto& s : stems) {
    if (static_cast<Index>(s.size()) > kFrameLength) {
      warn(warnings, "stem '" + utf8::encode(s) + "' longer than " + std::to_string(kFrameLength) +
                         "; excluded from training");
      continue;
    }
    real.push_back(encode_stem(s, a));
  }
  if (real.empty()) throw Error(Errc::empty_training_set, "no stem fits the frame");

  TrainResult result{GanModel::init(a, cfg.generator_hidden, cfg.discriminator_hidden, cfg.seed), {}};
  GanModel& m = result.model;
  std::seed_seq seq{cfg.seed, std::uint64_t{0x747261696e}};
  Rng rng(seq);
  std::seed_seq sample_seq{cfg.seed, std::uint64_t{0x73616d706c65}};
  Rng sample_rng(sample_seq);
  RmsProp d_opt;
  d_opt.learning_rate = cfg.discriminator_lr;
  RmsProp g_opt;
  g_opt.learning_rate = cfg.generator_lr;

  std::vector<std::size_t> order(real.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<Matrix> chunk;
      for (std::size_t k = start; k < end; ++k) chunk.push_back(real[order[k]]);
      try {
        const double ld = discriminator_step(m, to_batch(chunk), rng, d_opt);
        const double lg = generator_step(m, static_cast<Index>(chunk.size()), rng, g_opt);
        result.history.discriminator.push_back(ld);
        result.history.generator.push_back(lg);
      } catch (const Error& e) {
        if (e.code() != Errc::numeric_fault) throw;
        throw Error(Errc::numeric_fault,
                    "training diverged at step " + std::to_string(result.history.steps() + 1) + ": " + e.what());
      }
    }
    if (cfg.sample_every > 0 && (epoch % cfg.sample_every == 0 || epoch == 1)) {
      result.history.samples.push_back({epoch, sample_raw(m, 1, sample_rng).front()});
    }
  }
  return result;
}

// ---------------------------------------------------------------- diagnostics

enum class Regime { saturated, oscillating };

inline const char* regime_name(Regime r) { return r == Regime::saturated ? "saturated" : "oscillating"; }

/// "saturated" when the last 20% of steps average L_G > 0.95 and L_D < -0.95.
inline Regime classify_regime(const LossHistory& h) {
  constexpr std::size_t kMinSteps = 100;
  if (h.steps() < kMinSteps || h.generator.size() != h.steps()) {
    throw Error(Errc::history_too_short, "need at least " + std::to_string(kMinSteps) + " steps");
  }
  const std::size_t tail = h.steps() / 5;
  const std::size_t from = h.steps() - tail;
  double ld = 0.0, lg = 0.0;
  for (std::size_t i = from; i < h.steps(); ++i) {
    ld += h.discriminator[i];
    lg += h.generator[i];
  }
  ld /= static_cast<double>(tail);
  lg /= static_cast<double>(tail);
  return (lg > 0.95 && ld < -0.95) ? Regime::saturated : Regime::oscillating;
}

inline void write_loss_csv(std::ostream& out, const LossHistory& h) {
  out << "step,discriminator_loss,generator_loss\n";
  char buf[96];
  for (std::size_t i = 0; i < h.steps(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i + 1, h.discriminator[i], h.generator[i]);
    out << buf;
  }
}

/// One line per logged sample: "<epoch>\t<raw string>".
inline void write_sample_log(std::ostream& out, const LossHistory& h) {
  for (const auto& s : h.samples) out << s.epoch << '\t' << utf8::encode(s.raw) << '\n';
}

// ---------------------------------------------------------------- gradient checks

namespace detail {

template <class P>
void randomize(P& params, double range, Rng& rng) {
  std::uniform_real_distribution<double> u(-range, range);
  params.visit("", [&](const std::string&, Matrix& m) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  });
  params.bump();
}

}  // namespace detail

/// Finite-difference checks of the three backward paths on a small random
/// network. Parameters are drawn from [-0.5, 0.5] so that gradients are well
/// above the finite-difference noise floor.
struct GanGradientCheck {
  GradientReport generator;
  GradientReport discriminator;
  GradientReport adversarial;  // L_G w.r.t. generator params through the discriminator

  bool passed() const { return generator.passed() && discriminator.passed() && adversarial.passed(); }
};

inline GanGradientCheck check_gan_gradients(Index vocab, Index hidden, Index batch, std::uint64_t seed,
                                            double tolerance, double step = 1e-5) {
  Rng rng(seed);
  auto gen = GeneratorParams::init(vocab, hidden, rng);
  auto disc = DiscriminatorParams::init(vocab, hidden, rng);
  detail::randomize(gen, 0.5, rng);
  detail::randomize(disc, 0.5, rng);
  const Sequence noise = noise_batch(rng, vocab, batch);
  const std::uint64_t dropout_seed = rng();
  Sequence coef(static_cast<std::size_t>(kFrameLength));
  for (auto& c : coef) c = detail::uniform_matrix(vocab, batch, 1.0, rng);
  std::vector<Matrix> examples;
  for (Index b = 0; b < batch; ++b) examples.push_back(sample_noise(rng, vocab));
  const Sequence disc_input = to_batch(examples);
  const Matrix score_coef = detail::uniform_matrix(1, batch, 1.0, rng);

  GanGradientCheck out;
  using Wide = long double;
  const SequenceT<Wide> wide_noise = detail::cast_sequence<Wide>(noise);
  const SequenceT<Wide> wide_disc_input = detail::cast_sequence<Wide>(disc_input);
  const SequenceT<Wide> wide_coef = detail::cast_sequence<Wide>(coef);
  const MatrixT<Wide> wide_score_coef = score_coef.cast<Wide>();

  // Losses are evaluated in extended precision and reported relative to the
  // unperturbed value, so central differences stay above the rounding floor.
  auto relative_to_base = [](auto eval) {
    const Wide base = eval();
    return [eval, base] { return static_cast<double>(eval() - base); };
  };

  // Generator: weighted sum of softmax outputs, fixed dropout mask.
  auto gen_loss = relative_to_base([&] {
    Rng drop(dropout_seed);
    const SequenceT<Wide> probs = generator_forward(gen, wide_noise, &drop);
    Wide s = 0;
    for (std::size_t t = 0; t < probs.size(); ++t) s += probs[t].cwiseProduct(wide_coef[t]).sum();
    return s;
  });
  {
    Rng drop(dropout_seed);
    GeneratorTape tape;
    generator_forward(gen, noise, &drop, &tape);
    auto g = generator_backward(gen, tape, coef);
    out.generator = check_gradients(gen, g, gen_loss, tolerance, step);
  }

  // Discriminator: weighted sum of scores on a fixed input.
  auto disc_loss = relative_to_base(
      [&] { return discriminator_forward(disc, wide_disc_input).cwiseProduct(wide_score_coef).sum(); });
  {
    DiscriminatorTape tape;
    discriminator_forward(disc, disc_input, &tape);
    auto g = discriminator_backward(disc, tape, score_coef);
    out.discriminator = check_gradients(disc, g.params, disc_loss, tolerance, step);
  }

  // Generator loss 1 - mean(D(G(z))) through the frozen discriminator.
  auto adv_loss = relative_to_base([&] {
    Rng drop(dropout_seed);
    const MatrixT<Wide> scores = discriminator_forward(disc, generator_forward(gen, wide_noise, &drop));
    return Wide(1) - scores.mean();
  });
  {
    Rng drop(dropout_seed);
    GeneratorTape gtape;
    const Sequence fake = generator_forward(gen, noise, &drop, &gtape);
    DiscriminatorTape dtape;
    discriminator_forward(disc, fake, &dtape);
    auto dg = discriminator_backward(disc, dtape, Matrix::Constant(1, batch, -1.0 / static_cast<double>(batch)));
    auto g = generator_backward(gen, gtape, dg.inputs);
    out.adversarial = check_gradients(gen, g, adv_loss, tolerance, step);
  }
  return out;
}

}  // namespace graphogan
