// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Multi-head self-attention in three interchangeable forms:
//   * attend_full without a mask: every frame attends to the whole sequence;
//   * attend_full with a block mask: one pass that reproduces block streaming;
//   * attend_streaming: one block at a time against a per-layer input cache.
//
// Block geometry uses shift S and block size 2S. Block 1 holds frames 1..2S;
// block i >= 2 holds frames iS+1..(i+1)S and also sees the S frames before
// them as keys and values.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tensor.hpp"

namespace skws {

struct BlockSpec {
  std::size_t shift = 1;

  std::size_t block_size() const noexcept { return 2 * shift; }
  void validate() const;
};

// 1-based block index of 1-based frame t.
std::size_t block_of(std::size_t t, const BlockSpec& spec);

// Inclusive 1-based key range visible to query frame t, clipped to `frames`.
struct KeyWindow {
  std::size_t first;
  std::size_t last;
};
KeyWindow key_window(std::size_t t, const BlockSpec& spec, std::size_t frames);

struct AttentionMask {
  std::size_t frames = 0;
  BlockSpec spec;
  Mask allowed;  // frames x frames, row = query, column = key (0-based)
};

AttentionMask build_mask(std::size_t frames, const BlockSpec& spec);

// Renders the mask as lines of '#' (allowed) and '.' (blocked).
std::string render_mask(const AttentionMask& mask);

template <typename Real>
struct AttentionProjections {
  Matrix<Real> wq, wk, wv, wo;  // D x D each
  std::size_t n_heads = 1;

  std::size_t d_model() const noexcept { return wq.rows(); }
  std::size_t head_dim() const noexcept { return d_model() / n_heads; }
  void validate() const;

  // Zero-filled projections of the right shape (used for gradients).
  static AttentionProjections zeros(std::size_t d_model, std::size_t n_heads);
  // Xavier-uniform initialisation.
  static AttentionProjections xavier(std::size_t d_model, std::size_t n_heads, Rng& rng);
};

// Intermediates kept by attend_full for the backward pass.
template <typename Real>
struct AttentionTrace {
  Matrix<Real> input;
  Matrix<Real> q, k, v;
  Matrix<Real> context;             // concatenated per-head outputs, before W_o
  std::vector<Matrix<Real>> probs;  // per head, T x T
};

// Scaled dot-product attention on explicit Q/K/V (rows are frames). Returns
// the concatenated head outputs. `probs_out`, when given, receives per-head
// attention weights.
template <typename Real>
Matrix<Real> attention_core(const Matrix<Real>& q, const Matrix<Real>& k,
                            const Matrix<Real>& v, std::size_t n_heads,
                            const Mask* mask,
                            std::vector<Matrix<Real>>* probs_out = nullptr);

template <typename Real>
struct AttentionCoreGrads {
  Matrix<Real> dq, dk, dv;
};

template <typename Real>
AttentionCoreGrads<Real> attention_core_backward(const Matrix<Real>& q,
                                                 const Matrix<Real>& k,
                                                 const Matrix<Real>& v,
                                                 std::span<const Matrix<Real>> probs,
                                                 std::size_t n_heads,
                                                 const Matrix<Real>& d_context);

template <typename Real>
Matrix<Real> attend_full(const Matrix<Real>& x, const AttentionProjections<Real>& proj,
                         const AttentionMask* mask = nullptr,
                         AttentionTrace<Real>* trace = nullptr);

// Accumulates parameter gradients into `grads` and returns d loss / d input.
template <typename Real>
Matrix<Real> attention_backward(const AttentionTrace<Real>& trace,
                                const AttentionProjections<Real>& proj,
                                const Matrix<Real>& d_out,
                                AttentionProjections<Real>& grads);

// Inputs of the most recent block shift for one attention layer.
template <typename Real>
struct LayerCache {
  BlockSpec spec;
  Matrix<Real> inputs;  // valid_len x D

  explicit LayerCache(BlockSpec s = {}) : spec(s) {}
  std::size_t valid_len() const noexcept { return inputs.rows(); }
  std::size_t bytes(std::size_t d_model) const noexcept {
    return spec.shift * d_model * sizeof(Real);
  }
};

// Processes one block. The first call (empty cache) takes up to 2S frames,
// later calls up to S frames; fewer frames are only valid for the final
// block of a stream. Returns one output row per new frame.
template <typename Real>
Matrix<Real> attend_streaming(const Matrix<Real>& new_frames, LayerCache<Real>& cache,
                              const AttentionProjections<Real>& proj);

// Splits `frames` into the streaming block sizes: 2S, S, S, ..., remainder.
std::vector<std::size_t> block_lengths(std::size_t frames, const BlockSpec& spec);

// Max |masked full pass - streamed pass| over a stack of attention layers
// (output of layer l feeds layer l+1).
template <typename Real>
Real equivalence_report(const Matrix<Real>& x,
                        std::span<const AttentionProjections<Real>> layers,
                        const BlockSpec& spec);

template <typename Real>
Real equivalence_report(const Matrix<Real>& x, const AttentionProjections<Real>& proj,
                        const BlockSpec& spec) {
  return equivalence_report<Real>(x, std::span<const AttentionProjections<Real>>(&proj, 1),
                                  spec);
}

}  // namespace skws
