// SPDX-License-Identifier: Apache-2.0
//
// Minimal differentiable layers with hand-written backward passes.
//
// Batched tensors are laid out feature-major: a Sequence is one
// (features x batch) matrix per timestep, so every example is a column.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <concepts>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "graphogan/error.hpp"

namespace graphogan {

template <class S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using SequenceT = std::vector<MatrixT<S>>;

using Matrix = MatrixT<double>;
using Sequence = SequenceT<double>;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

inline constexpr double kInitRange = 0.08;
inline constexpr double kForgetBias = 1.0;

namespace detail {

template <class D>
void require_finite(const Eigen::MatrixBase<D>& m, const char* what) {
  if (!m.allFinite()) throw Error(Errc::numeric_fault, std::string("non-finite values in ") + what);
}

template <class D>
void require_shape(const Eigen::MatrixBase<D>& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(Errc::shape_mismatch, std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                          std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                          "x" + std::to_string(m.cols()));
  }
}

inline Matrix uniform_matrix(Index rows, Index cols, double range, Rng& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  Matrix m(rows, cols);
  // Column-major fill order keeps draws reproducible across Eigen versions.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

template <class To, class S>
SequenceT<To> cast_sequence(const SequenceT<S>& seq) {
  SequenceT<To> out;
  out.reserve(seq.size());
  for (const auto& m : seq) out.push_back(m.template cast<To>());
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- activations

template <std::floating_point S>
S sigmoid(S x) {
  if (x >= 0) return S(1) / (S(1) + std::exp(-x));
  const S e = std::exp(x);
  return e / (S(1) + e);
}

template <class D>
MatrixT<typename D::Scalar> sigmoid(const Eigen::MatrixBase<D>& m) {
  using S = typename D::Scalar;
  return m.unaryExpr([](S x) { return sigmoid(x); });
}

/// Column-wise softmax, shifted by the column max.
template <class D>
MatrixT<typename D::Scalar> softmax_columns(const Eigen::MatrixBase<D>& z) {
  MatrixT<typename D::Scalar> out(z.rows(), z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    const auto m = z.col(j).maxCoeff();
    out.col(j) = (z.col(j).array() - m).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

/// Row-wise softmax for T x V tensors.
inline Matrix softmax_rows(const Matrix& z) { return softmax_columns(z.transpose()).transpose(); }

/// Gradient of a column softmax given its output `s` and upstream `ds`.
inline Matrix softmax_columns_backward(const Matrix& s, const Matrix& ds) {
  Matrix out = s.cwiseProduct(ds);
  const Eigen::RowVectorXd dots = out.colwise().sum();
  out -= s * dots.asDiagonal();
  return out;
}

// ---------------------------------------------------------------- parameters

/// Named reference to one parameter matrix, produced by `visit`.
struct NamedParam {
  std::string name;
  Matrix* value;
};

template <class P>
std::vector<NamedParam> collect_params(P& params) {
  std::vector<NamedParam> out;
  params.visit("", [&](const std::string& name, Matrix& m) { out.push_back({name, &m}); });
  return out;
}

/// Same structure with every matrix zeroed.
template <class P>
P zeros_like(const P& params) {
  P out = params;
  out.visit("", [](const std::string&, auto& m) { m.setZero(); });
  return out;
}

/// Gate blocks are stacked input, forget, candidate, output (H rows each).
template <class S>
struct BasicLstmParams {
  MatrixT<S> w_input;      // 4H x I
  MatrixT<S> w_recurrent;  // 4H x H
  MatrixT<S> bias;         // 4H x 1
  std::uint64_t generation = 0;

  Index hidden() const { return w_recurrent.cols(); }
  Index input() const { return w_input.cols(); }

  static BasicLstmParams zeros(Index input, Index hidden) {
    return {MatrixT<S>::Zero(4 * hidden, input), MatrixT<S>::Zero(4 * hidden, hidden),
            MatrixT<S>::Zero(4 * hidden, 1)};
  }

  static BasicLstmParams init(Index input, Index hidden, Rng& rng) {
    BasicLstmParams p;
    p.w_input = detail::uniform_matrix(4 * hidden, input, kInitRange, rng).template cast<S>();
    p.w_recurrent = detail::uniform_matrix(4 * hidden, hidden, kInitRange, rng).template cast<S>();
    p.bias = MatrixT<S>::Zero(4 * hidden, 1);
    p.bias.block(hidden, 0, hidden, 1).setConstant(S(kForgetBias));
    return p;
  }

  template <class To>
  BasicLstmParams<To> cast() const {
    return {w_input.template cast<To>(), w_recurrent.template cast<To>(), bias.template cast<To>()};
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "w_input", w_input);
    f(prefix + "w_recurrent", w_recurrent);
    f(prefix + "bias", bias);
  }
  void bump() { ++generation; }
};

template <class S>
struct BasicDenseParams {
  MatrixT<S> weight;  // O x I
  MatrixT<S> bias;    // O x 1

  static BasicDenseParams zeros(Index input, Index output) {
    return {MatrixT<S>::Zero(output, input), MatrixT<S>::Zero(output, 1)};
  }
  static BasicDenseParams init(Index input, Index output, Rng& rng) {
    return {detail::uniform_matrix(output, input, kInitRange, rng).template cast<S>(),
            MatrixT<S>::Zero(output, 1)};
  }

  template <class To>
  BasicDenseParams<To> cast() const {
    return {weight.template cast<To>(), bias.template cast<To>()};
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    f(prefix + "bias", bias);
  }
  void bump() {}
};

using LstmParams = BasicLstmParams<double>;
using DenseParams = BasicDenseParams<double>;

// ---------------------------------------------------------------- recurrent

/// Forward intermediates for backpropagation through time.
struct LstmTape {
  const LstmParams* params = nullptr;
  std::uint64_t generation = 0;
  Sequence inputs;
  Sequence gates;     // 4H x B, post-activation
  Sequence cells;     // H x B
  Sequence cell_act;  // tanh(cells)
  Sequence hidden;    // H x B
  bool return_sequences = true;
};

namespace detail {

inline void record(LstmTape* tape, Matrix act, const Matrix& c, Matrix tc, const Matrix& h) {
  tape->gates.push_back(std::move(act));
  tape->cells.push_back(c);
  tape->cell_act.push_back(std::move(tc));
  tape->hidden.push_back(h);
}

}  // namespace detail

/// Runs the recurrence from zero state. Returns every hidden state when
/// `return_sequences`, else a one-element sequence holding the last one.
/// Only double-precision runs can record a tape.
template <class S>
SequenceT<S> recurrent_forward(const BasicLstmParams<S>& p, const SequenceT<S>& inputs, bool return_sequences,
                               LstmTape* tape = nullptr) {
  if (inputs.empty()) throw Error(Errc::shape_mismatch, "empty input sequence");
  const Index H = p.hidden();
  const Index B = inputs.front().cols();
  MatrixT<S> h = MatrixT<S>::Zero(H, B);
  MatrixT<S> c = MatrixT<S>::Zero(H, B);
  SequenceT<S> out;
  if constexpr (std::is_same_v<S, double>) {
    if (tape) *tape = LstmTape{&p, p.generation, inputs, {}, {}, {}, {}, return_sequences};
  }
  for (const auto& x : inputs) {
    detail::require_shape(x, p.input(), B, "recurrent input");
    MatrixT<S> z = p.w_input * x + p.w_recurrent * h;
    z.colwise() += p.bias.col(0);
    MatrixT<S> act(4 * H, B);
    act.topRows(2 * H) = sigmoid(z.topRows(2 * H));
    act.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
    act.bottomRows(H) = sigmoid(z.bottomRows(H));
    c = act.middleRows(H, H).cwiseProduct(c) + act.topRows(H).cwiseProduct(act.middleRows(2 * H, H));
    MatrixT<S> tc = c.array().tanh().matrix();
    h = act.bottomRows(H).cwiseProduct(tc);
    detail::require_finite(h, "recurrent hidden state");
    if constexpr (std::is_same_v<S, double>) {
      if (tape) detail::record(tape, std::move(act), c, std::move(tc), h);
    }
    if (return_sequences) out.push_back(h);
  }
  if (!return_sequences) out.push_back(std::move(h));
  return out;
}

struct LstmGrads {
  LstmParams params;
  Sequence inputs;
};

/// Exact gradients of the forward recorded in `tape`. `upstream` has one
/// matrix per output of the forward (T when it returned sequences, else 1).
inline LstmGrads recurrent_backward(const LstmParams& p, const LstmTape& tape, const Sequence& upstream) {
  if (tape.params != &p || tape.generation != p.generation || tape.hidden.empty()) {
    throw Error(Errc::stale_tape, "tape does not match the current parameters");
  }
  const auto T = tape.hidden.size();
  const Index H = p.hidden();
  const Index B = tape.hidden.front().cols();
  if (upstream.size() != (tape.return_sequences ? T : 1)) {
    throw Error(Errc::shape_mismatch, "upstream gradient has wrong number of timesteps");
  }
  for (const auto& u : upstream) detail::require_shape(u, H, B, "upstream gradient");

  LstmGrads g{LstmParams::zeros(p.input(), H), Sequence(T)};
  Matrix dh_next = Matrix::Zero(H, B);
  Matrix dc_next = Matrix::Zero(H, B);
  Matrix dz(4 * H, B);
  for (std::size_t step = T; step-- > 0;) {
    Matrix dh = dh_next;
    if (tape.return_sequences) {
      dh += upstream[step];
    } else if (step == T - 1) {
      dh += upstream[0];
    }
    const Matrix& act = tape.gates[step];
    const auto i = act.topRows(H).array();
    const auto f = act.middleRows(H, H).array();
    const auto cand = act.middleRows(2 * H, H).array();
    const auto o = act.bottomRows(H).array();
    const auto tc = tape.cell_act[step].array();

    Eigen::ArrayXXd dc = dh.array() * o * (1.0 - tc.square()) + dc_next.array();
    Eigen::ArrayXXd c_prev = Eigen::ArrayXXd::Zero(H, B);
    if (step > 0) c_prev = tape.cells[step - 1].array();
    dz.topRows(H) = (dc * cand * i * (1.0 - i)).matrix();
    dz.middleRows(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.middleRows(2 * H, H) = (dc * i * (1.0 - cand.square())).matrix();
    dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();

    g.params.w_input.noalias() += dz * tape.inputs[step].transpose();
    if (step > 0) g.params.w_recurrent.noalias() += dz * tape.hidden[step - 1].transpose();
    g.params.bias += dz.rowwise().sum();
    g.inputs[step].noalias() = p.w_input.transpose() * dz;
    dh_next.noalias() = p.w_recurrent.transpose() * dz;
  }
  return g;
}

// ---------------------------------------------------------------- dense

template <class S>
MatrixT<S> dense_forward(const BasicDenseParams<S>& p, const MatrixT<S>& x) {
  detail::require_shape(x, p.weight.cols(), x.cols(), "dense input");
  MatrixT<S> y = p.weight * x;
  y.colwise() += p.bias.col(0);
  detail::require_finite(y, "dense output");
  return y;
}

/// Accumulates into `grads` and returns the input gradient.
inline Matrix dense_backward(const DenseParams& p, const Matrix& x, const Matrix& dy, DenseParams& grads) {
  grads.weight.noalias() += dy * x.transpose();
  grads.bias += dy.rowwise().sum();
  return p.weight.transpose() * dy;
}

// ---------------------------------------------------------------- dropout

/// Inverted dropout: survivors are scaled by 1/(1-rate) at train time.
class Dropout {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw Error(Errc::invalid_argument, "dropout rate must lie in [0,1)");
    }
  }

  double rate() const { return rate_; }

  /// `rng == nullptr` means sampling mode: identity, no mask recorded.
  /// The mask is drawn in double, so equal seeds give equal masks at any precision.
  template <class S>
  MatrixT<S> forward(const MatrixT<S>& x, Rng* rng, MatrixT<S>* mask_out = nullptr) const {
    if (!rng || rate_ == 0.0) {
      if (mask_out) *mask_out = MatrixT<S>::Ones(x.rows(), x.cols());
      return x;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 / (1.0 - rate_);
    MatrixT<S> mask(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i) mask(i, j) = S(u(*rng) < rate_ ? 0.0 : keep);
    MatrixT<S> y = x.cwiseProduct(mask);
    if (mask_out) *mask_out = std::move(mask);
    return y;
  }

  Matrix forward(const Matrix& x, Rng* rng, Matrix* mask_out = nullptr) const {
    return forward<double>(x, rng, mask_out);
  }

  static Matrix backward(const Matrix& dy, const Matrix& mask) { return dy.cwiseProduct(mask); }

 private:
  double rate_;
};

// ---------------------------------------------------------------- optimizer

/// RMSProp: s <- decay*s + (1-decay)*g^2, w <- w - lr*g/(sqrt(s)+eps).
struct RmsProp {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
  std::vector<Matrix> mean_square;
};

template <class P>
void optimizer_step(P& params, P& grads, RmsProp& state) {
  auto values = collect_params(params);
  auto gs = collect_params(grads);
  if (values.size() != gs.size()) throw Error(Errc::shape_mismatch, "gradient structure mismatch");
  for (std::size_t k = 0; k < values.size(); ++k) {
    detail::require_shape(*gs[k].value, values[k].value->rows(), values[k].value->cols(),
                          values[k].name.c_str());
    detail::require_finite(*gs[k].value, "gradient");
  }
  if (state.mean_square.empty()) {
    for (auto& v : values) state.mean_square.push_back(Matrix::Zero(v.value->rows(), v.value->cols()));
  }
  if (state.mean_square.size() != values.size()) {
    throw Error(Errc::shape_mismatch, "optimizer state does not match parameters");
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    const Matrix& g = *gs[k].value;
    Matrix& s = state.mean_square[k];
    s = state.decay * s + (1.0 - state.decay) * g.cwiseAbs2();
    values[k].value->array() -=
        state.learning_rate * g.array() / (s.array().sqrt() + state.epsilon);
  }
  params.bump();
}

// ---------------------------------------------------------------- gradient check

struct GradientReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::vector<std::string> failures;  // "name[i,j]: analytic vs numeric"

  bool passed() const { return failures.empty(); }
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// Compares `analytic` against central differences of `loss` for every
/// entry of every parameter in `params`. `loss` must re-run the forward pass
/// from the current parameter values (and reuse any dropout masks).
template <class P>
GradientReport check_gradients(P& params, P& analytic, const std::function<double()>& loss,
                               double tolerance, double step = 1e-5) {
  GradientReport report;
  auto values = collect_params(params);
  auto grads = collect_params(analytic);
  for (std::size_t k = 0; k < values.size(); ++k) {
    Matrix& w = *values[k].value;
    for (Index j = 0; j < w.cols(); ++j) {
      for (Index i = 0; i < w.rows(); ++i) {
        const double saved = w(i, j);
        w(i, j) = saved + step;
        const double up = loss();
        w(i, j) = saved - step;
        const double down = loss();
        w(i, j) = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = (*grads[k].value)(i, j);
        const double err = relative_error(a, numeric);
        ++report.checked;
        report.max_relative_error = std::max(report.max_relative_error, err);
        if (!(err <= tolerance)) {
          char buf[96];
          std::snprintf(buf, sizeof buf, "]: analytic %.9e vs numeric %.9e", a, numeric);
          report.failures.push_back(values[k].name + "[" + std::to_string(i) + "," + std::to_string(j) + buf);
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------- batching

/// Stacks T x V example tensors into a T-long sequence of V x B matrices.
inline Sequence to_batch(const std::vector<Matrix>& examples) {
  if (examples.empty()) throw Error(Errc::empty_batch, "no examples to batch");
  const Index T = examples.front().rows();
  const Index V = examples.front().cols();
  const Index B = static_cast<Index>(examples.size());
  Sequence seq(static_cast<std::size_t>(T), Matrix(V, B));
  for (Index b = 0; b < B; ++b) {
    detail::require_shape(examples[static_cast<std::size_t>(b)], T, V, "batched example");
    for (Index t = 0; t < T; ++t) seq[static_cast<std::size_t>(t)].col(b) = examples[static_cast<std::size_t>(b)].row(t).transpose();
  }
  return seq;
}

inline Matrix example_from_batch(const Sequence& seq, Index b) {
  Matrix out(static_cast<Index>(seq.size()), seq.front().rows());
  for (std::size_t t = 0; t < seq.size(); ++t) out.row(static_cast<Index>(t)) = seq[t].col(b).transpose();
  return out;
}

}  // namespace graphogan
