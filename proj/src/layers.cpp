// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "layers.hpp"

#include <cmath>

namespace skws {

namespace {

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

double positional_code(std::size_t pos, std::size_t dim, std::size_t d_model) {
  const double pair = static_cast<double>(dim - dim % 2);
  const double angle =
      static_cast<double>(pos) / std::pow(10000.0, pair / static_cast<double>(d_model));
  return dim % 2 == 0 ? std::sin(angle) : std::cos(angle);
}

template <typename Real>
Matrix<Real> pos_encode(const Matrix<Real>& x, std::size_t start_pos) {
  Matrix<Real> out = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(r, c) += static_cast<Real>(positional_code(start_pos + r, c, x.cols()));
  return out;
}

template <typename Real>
DenseParams<Real> DenseParams<Real>::zeros(std::size_t in, std::size_t out) {
  return {Matrix<Real>(in, out), Matrix<Real>(1, out)};
}

template <typename Real>
DenseParams<Real> DenseParams<Real>::xavier(std::size_t in, std::size_t out, Rng& rng) {
  DenseParams p = zeros(in, out);
  const double a = xavier_bound(in, out);
  fill_uniform(p.weight, rng, -a, a);
  return p;
}

template <typename Real>
Matrix<Real> dense(const Matrix<Real>& x, const DenseParams<Real>& p) {
  Matrix<Real> y = matmul(x, p.weight);
  add_row_vector(y, p.bias);
  return y;
}

template <typename Real>
Matrix<Real> dense_backward(const Matrix<Real>& x, const DenseParams<Real>& p,
                            const Matrix<Real>& dy, DenseParams<Real>& grads) {
  add_inplace(grads.weight, matmul_tn(x, dy));
  add_inplace(grads.bias, column_sums(dy));
  return matmul_nt(dy, p.weight);
}

template <typename Real>
LayerNormParams<Real> LayerNormParams<Real>::identity(std::size_t d) {
  return {Matrix<Real>(1, d, Real(1)), Matrix<Real>(1, d)};
}

template <typename Real>
LayerNormParams<Real> LayerNormParams<Real>::zeros(std::size_t d) {
  return {Matrix<Real>(1, d), Matrix<Real>(1, d)};
}

template <typename Real>
Matrix<Real> layer_norm(const Matrix<Real>& x, const LayerNormParams<Real>& p) {
  require(p.gain.cols() == x.cols() && p.bias.cols() == x.cols(), ErrorKind::Shape,
          "layer_norm params do not match input " + x.shape_str());
  const std::size_t d = x.cols();
  Matrix<Real> y(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Real mean = 0;
    for (std::size_t c = 0; c < d; ++c) mean += x(r, c);
    mean /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= static_cast<Real>(d);
    const Real inv = Real(1) / std::sqrt(var + static_cast<Real>(kLayerNormEps));
    for (std::size_t c = 0; c < d; ++c)
      y(r, c) = p.gain(0, c) * (x(r, c) - mean) * inv + p.bias(0, c);
  }
  return y;
}

template <typename Real>
Matrix<Real> layer_norm_backward(const Matrix<Real>& x, const LayerNormParams<Real>& p,
                                 const Matrix<Real>& dy, LayerNormParams<Real>& grads) {
  const std::size_t d = x.cols();
  const Real n = static_cast<Real>(d);
  Matrix<Real> dx(x.rows(), d);
  std::vector<Real> xhat(d), dxhat(d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Real mean = 0;
    for (std::size_t c = 0; c < d; ++c) mean += x(r, c);
    mean /= n;
    Real var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= n;
    const Real inv = Real(1) / std::sqrt(var + static_cast<Real>(kLayerNormEps));
    Real sum_dxhat = 0, sum_dxhat_xhat = 0;
    for (std::size_t c = 0; c < d; ++c) {
      xhat[c] = (x(r, c) - mean) * inv;
      dxhat[c] = dy(r, c) * p.gain(0, c);
      grads.gain(0, c) += dy(r, c) * xhat[c];
      grads.bias(0, c) += dy(r, c);
      sum_dxhat += dxhat[c];
      sum_dxhat_xhat += dxhat[c] * xhat[c];
    }
    for (std::size_t c = 0; c < d; ++c)
      dx(r, c) = inv * (dxhat[c] - sum_dxhat / n - xhat[c] * sum_dxhat_xhat / n);
  }
  return dx;
}

template <typename Real>
FeedForwardParams<Real> FeedForwardParams<Real>::zeros(std::size_t d, std::size_t ffn) {
  return {DenseParams<Real>::zeros(d, ffn), DenseParams<Real>::zeros(ffn, d)};
}

template <typename Real>
FeedForwardParams<Real> FeedForwardParams<Real>::xavier(std::size_t d, std::size_t ffn,
                                                        Rng& rng) {
  FeedForwardParams p;
  p.inner = DenseParams<Real>::xavier(d, ffn, rng);
  p.outer = DenseParams<Real>::xavier(ffn, d, rng);
  return p;
}

template <typename Real>
Matrix<Real> feed_forward(const Matrix<Real>& x, const FeedForwardParams<Real>& p,
                          FeedForwardTrace<Real>* trace) {
  Matrix<Real> pre = dense(x, p.inner);
  Matrix<Real> hidden = pre;
  for (Real& v : hidden.values()) v = v > Real(0) ? v : Real(0);
  Matrix<Real> y = dense(hidden, p.outer);
  if (trace) {
    trace->input = x;
    trace->pre_activation = std::move(pre);
    trace->hidden = std::move(hidden);
  }
  return y;
}

template <typename Real>
Matrix<Real> feed_forward_backward(const FeedForwardTrace<Real>& trace,
                                   const FeedForwardParams<Real>& p, const Matrix<Real>& dy,
                                   FeedForwardParams<Real>& grads) {
  Matrix<Real> dh = dense_backward(trace.hidden, p.outer, dy, grads.outer);
  for (std::size_t i = 0; i < dh.size(); ++i)
    if (!(trace.pre_activation.data()[i] > Real(0))) dh.data()[i] = Real(0);
  return dense_backward(trace.input, p.inner, dh, grads.inner);
}

template <typename Real>
void LstmParams<Real>::validate() const {
  const std::size_t h = w_recurrent.rows();
  require(w_recurrent.cols() == 4 * h && w_input.cols() == 4 * h && bias.rows() == 1 &&
              bias.cols() == 4 * h,
          ErrorKind::Shape, "inconsistent LSTM parameter shapes");
}

template <typename Real>
LstmParams<Real> LstmParams<Real>::zeros(std::size_t in, std::size_t hidden) {
  return {Matrix<Real>(in, 4 * hidden), Matrix<Real>(hidden, 4 * hidden),
          Matrix<Real>(1, 4 * hidden)};
}

template <typename Real>
LstmParams<Real> LstmParams<Real>::xavier(std::size_t in, std::size_t hidden, Rng& rng) {
  LstmParams p = zeros(in, hidden);
  fill_uniform(p.w_input, rng, -xavier_bound(in, hidden), xavier_bound(in, hidden));
  fill_uniform(p.w_recurrent, rng, -xavier_bound(hidden, hidden), xavier_bound(hidden, hidden));
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias(0, j) = Real(1);
  return p;
}

namespace {

// Computes post-activation gates (i, f, g, o) for one frame into `gates`.
template <typename Real>
void lstm_gates(std::span<const Real> x, std::span<const Real> h, const LstmParams<Real>& p,
                std::span<Real> gates) {
  const std::size_t four_h = gates.size();
  const std::size_t hd = four_h / 4;
  for (std::size_t j = 0; j < four_h; ++j) gates[j] = p.bias(0, j);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Real xk = x[k];
    const Real* w = p.w_input.data() + k * four_h;
    for (std::size_t j = 0; j < four_h; ++j) gates[j] += xk * w[j];
  }
  for (std::size_t k = 0; k < h.size(); ++k) {
    const Real hk = h[k];
    const Real* w = p.w_recurrent.data() + k * four_h;
    for (std::size_t j = 0; j < four_h; ++j) gates[j] += hk * w[j];
  }
  for (std::size_t j = 0; j < four_h; ++j)
    gates[j] = (j >= 2 * hd && j < 3 * hd) ? std::tanh(gates[j]) : sigmoid(gates[j]);
}

}  // namespace

template <typename Real>
LstmState<Real> lstm_step(std::span<const Real> x, const LstmState<Real>& state,
                          const LstmParams<Real>& p) {
  p.validate();
  const std::size_t hd = p.hidden_dim();
  require(x.size() == p.input_dim(), ErrorKind::Shape,
          "LSTM input has " + std::to_string(x.size()) + " features, expected " +
              std::to_string(p.input_dim()));
  require(state.hidden.size() == hd && state.cell.size() == hd, ErrorKind::Shape,
          "LSTM state width does not match hidden_dim " + std::to_string(hd));
  std::vector<Real> gates(4 * hd);
  lstm_gates<Real>(x, state.hidden, p, gates);
  LstmState<Real> next = LstmState<Real>::zeros(hd);
  for (std::size_t j = 0; j < hd; ++j) {
    next.cell[j] = gates[hd + j] * state.cell[j] + gates[j] * gates[2 * hd + j];
    next.hidden[j] = gates[3 * hd + j] * std::tanh(next.cell[j]);
  }
  return next;
}

template <typename Real>
LstmOutput<Real> lstm_forward(const Matrix<Real>& x, const LstmState<Real>& initial,
                              const LstmParams<Real>& p, LstmTrace<Real>* trace) {
  p.validate();
  const std::size_t hd = p.hidden_dim();
  require(x.rows() == 0 || x.cols() == p.input_dim(), ErrorKind::Shape,
          "LSTM input " + x.shape_str() + " does not match input_dim " +
              std::to_string(p.input_dim()));
  require(initial.hidden.size() == hd && initial.cell.size() == hd, ErrorKind::Shape,
          "LSTM state width does not match hidden_dim");
  const std::size_t t_len = x.rows();
  LstmOutput<Real> out{Matrix<Real>(t_len, hd), initial};
  Matrix<Real> gates(t_len, 4 * hd), cells(t_len, hd);
  LstmState<Real>& s = out.final_state;
  for (std::size_t t = 0; t < t_len; ++t) {
    std::span<Real> g = gates.row(t);
    lstm_gates<Real>(x.row(t), s.hidden, p, g);
    for (std::size_t j = 0; j < hd; ++j) {
      s.cell[j] = g[hd + j] * s.cell[j] + g[j] * g[2 * hd + j];
      s.hidden[j] = g[3 * hd + j] * std::tanh(s.cell[j]);
      cells(t, j) = s.cell[j];
      out.hidden(t, j) = s.hidden[j];
    }
  }
  if (trace) {
    trace->input = x;
    trace->initial = initial;
    trace->gates = std::move(gates);
    trace->cells = std::move(cells);
    trace->hidden = out.hidden;
  }
  return out;
}

template <typename Real>
Matrix<Real> lstm_backward(const LstmTrace<Real>& trace, const LstmParams<Real>& p,
                           const Matrix<Real>& d_hidden, LstmParams<Real>& grads) {
  const std::size_t hd = p.hidden_dim();
  const std::size_t t_len = trace.input.rows();
  if (t_len == 0) return Matrix<Real>(0, p.input_dim());
  Matrix<Real> dz(t_len, 4 * hd);
  std::vector<Real> dh_next(hd), dc_next(hd);
  for (std::size_t step = t_len; step-- > 0;) {
    const auto g = trace.gates.row(step);
    for (std::size_t j = 0; j < hd; ++j) {
      const Real c = trace.cells(step, j);
      const Real c_prev = step > 0 ? trace.cells(step - 1, j) : trace.initial.cell[j];
      const Real tc = std::tanh(c);
      const Real i = g[j], f = g[hd + j], gg = g[2 * hd + j], o = g[3 * hd + j];
      const Real dh = d_hidden(step, j) + dh_next[j];
      const Real dc = dh * o * (Real(1) - tc * tc) + dc_next[j];
      dz(step, j) = dc * gg * i * (Real(1) - i);
      dz(step, hd + j) = dc * c_prev * f * (Real(1) - f);
      dz(step, 2 * hd + j) = dc * i * (Real(1) - gg * gg);
      dz(step, 3 * hd + j) = dh * tc * o * (Real(1) - o);
      dc_next[j] = dc * f;
    }
    // dh_prev = dz_t W_h^T
    const Real* dzt = dz.data() + step * 4 * hd;
    for (std::size_t k = 0; k < hd; ++k) {
      const Real* w = p.w_recurrent.data() + k * 4 * hd;
      Real acc = 0;
      for (std::size_t j = 0; j < 4 * hd; ++j) acc += dzt[j] * w[j];
      dh_next[k] = acc;
    }
  }
  // Previous hidden states, row t = h_{t-1}.
  Matrix<Real> h_prev(t_len, hd);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < hd; ++j)
      h_prev(t, j) = t > 0 ? trace.hidden(t - 1, j) : trace.initial.hidden[j];
  add_inplace(grads.w_input, matmul_tn(trace.input, dz));
  add_inplace(grads.w_recurrent, matmul_tn(h_prev, dz));
  add_inplace(grads.bias, column_sums(dz));
  return matmul_nt(dz, p.w_input);
}

#define SKWS_INSTANTIATE(Real)                                                                \
  template Matrix<Real> pos_encode(const Matrix<Real>&, std::size_t);                         \
  template struct DenseParams<Real>;                                                          \
  template Matrix<Real> dense(const Matrix<Real>&, const DenseParams<Real>&);                 \
  template Matrix<Real> dense_backward(const Matrix<Real>&, const DenseParams<Real>&,         \
                                       const Matrix<Real>&, DenseParams<Real>&);              \
  template struct LayerNormParams<Real>;                                                      \
  template Matrix<Real> layer_norm(const Matrix<Real>&, const LayerNormParams<Real>&);        \
  template Matrix<Real> layer_norm_backward(const Matrix<Real>&, const LayerNormParams<Real>&, \
                                            const Matrix<Real>&, LayerNormParams<Real>&);     \
  template struct FeedForwardParams<Real>;                                                    \
  template Matrix<Real> feed_forward(const Matrix<Real>&, const FeedForwardParams<Real>&,     \
                                     FeedForwardTrace<Real>*);                                \
  template Matrix<Real> feed_forward_backward(const FeedForwardTrace<Real>&,                  \
                                              const FeedForwardParams<Real>&,                 \
                                              const Matrix<Real>&, FeedForwardParams<Real>&); \
  template struct LstmParams<Real>;                                                           \
  template LstmState<Real> lstm_step(std::span<const Real>, const LstmState<Real>&,           \
                                     const LstmParams<Real>&);                                \
  template LstmOutput<Real> lstm_forward(const Matrix<Real>&, const LstmState<Real>&,         \
                                         const LstmParams<Real>&, LstmTrace<Real>*);          \
  template Matrix<Real> lstm_backward(const LstmTrace<Real>&, const LstmParams<Real>&,        \
                                      const Matrix<Real>&, LstmParams<Real>&);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
