// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#pragma once

#include <cstddef>
#include <vector>

#include "tensor.hpp"

namespace skws {

inline constexpr double kLayerNormEps = 1e-5;

// Adds the sinusoidal absolute position code for positions
// start_pos .. start_pos + rows - 1.
template <typename Real>
Matrix<Real> pos_encode(const Matrix<Real>& x, std::size_t start_pos);

// PE(pos, 2i) = sin(pos / 10000^(2i/d)), PE(pos, 2i+1) = cos(same angle).
double positional_code(std::size_t pos, std::size_t dim, std::size_t d_model);

template <typename Real>
struct DenseParams {
  Matrix<Real> weight;  // in x out
  Matrix<Real> bias;    // 1 x out

  static DenseParams zeros(std::size_t in, std::size_t out);
  static DenseParams xavier(std::size_t in, std::size_t out, Rng& rng);
};

template <typename Real>
Matrix<Real> dense(const Matrix<Real>& x, const DenseParams<Real>& p);
template <typename Real>
Matrix<Real> dense_backward(const Matrix<Real>& x, const DenseParams<Real>& p,
                            const Matrix<Real>& dy, DenseParams<Real>& grads);

template <typename Real>
struct LayerNormParams {
  Matrix<Real> gain;  // 1 x D
  Matrix<Real> bias;  // 1 x D

  static LayerNormParams identity(std::size_t d);
  static LayerNormParams zeros(std::size_t d);
};

template <typename Real>
Matrix<Real> layer_norm(const Matrix<Real>& x, const LayerNormParams<Real>& p);
template <typename Real>
Matrix<Real> layer_norm_backward(const Matrix<Real>& x, const LayerNormParams<Real>& p,
                                 const Matrix<Real>& dy, LayerNormParams<Real>& grads);

template <typename Real>
struct FeedForwardParams {
  DenseParams<Real> inner;  // D x ffn
  DenseParams<Real> outer;  // ffn x D

  static FeedForwardParams zeros(std::size_t d, std::size_t ffn);
  static FeedForwardParams xavier(std::size_t d, std::size_t ffn, Rng& rng);
};

template <typename Real>
struct FeedForwardTrace {
  Matrix<Real> input;
  Matrix<Real> pre_activation;
  Matrix<Real> hidden;  // relu(pre_activation)
};

// relu(x W1 + b1) W2 + b2
template <typename Real>
Matrix<Real> feed_forward(const Matrix<Real>& x, const FeedForwardParams<Real>& p,
                          FeedForwardTrace<Real>* trace = nullptr);
template <typename Real>
Matrix<Real> feed_forward_backward(const FeedForwardTrace<Real>& trace,
                                   const FeedForwardParams<Real>& p, const Matrix<Real>& dy,
                                   FeedForwardParams<Real>& grads);

// Gate blocks inside the 4H-wide matrices are ordered input, forget, cell, output.
template <typename Real>
struct LstmParams {
  Matrix<Real> w_input;      // D_in x 4H
  Matrix<Real> w_recurrent;  // H x 4H
  Matrix<Real> bias;         // 1 x 4H

  std::size_t input_dim() const noexcept { return w_input.rows(); }
  std::size_t hidden_dim() const noexcept { return w_recurrent.rows(); }
  void validate() const;

  static LstmParams zeros(std::size_t in, std::size_t hidden);
  // Xavier-uniform weights, zero biases except forget gate = 1.
  static LstmParams xavier(std::size_t in, std::size_t hidden, Rng& rng);
};

template <typename Real>
struct LstmState {
  std::vector<Real> hidden;
  std::vector<Real> cell;

  static LstmState zeros(std::size_t h) { return {std::vector<Real>(h), std::vector<Real>(h)}; }
  bool operator==(const LstmState&) const = default;
};

template <typename Real>
LstmState<Real> lstm_step(std::span<const Real> x, const LstmState<Real>& state,
                          const LstmParams<Real>& p);

template <typename Real>
struct LstmTrace {
  Matrix<Real> input;
  LstmState<Real> initial;
  Matrix<Real> gates;   // T x 4H, post-activation (i, f, g, o)
  Matrix<Real> cells;   // T x H
  Matrix<Real> hidden;  // T x H
};

template <typename Real>
struct LstmOutput {
  Matrix<Real> hidden;  // T x H
  LstmState<Real> final_state;
};

template <typename Real>
LstmOutput<Real> lstm_forward(const Matrix<Real>& x, const LstmState<Real>& initial,
                              const LstmParams<Real>& p, LstmTrace<Real>* trace = nullptr);

// Backprop through time from d loss / d hidden outputs. Returns d loss / d x.
template <typename Real>
Matrix<Real> lstm_backward(const LstmTrace<Real>& trace, const LstmParams<Real>& p,
                           const Matrix<Real>& d_hidden, LstmParams<Real>& grads);

}  // namespace skws
