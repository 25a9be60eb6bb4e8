// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace skws {

// Labels in [0, V). The blank symbol is class V, i.e. the last column of the
// log-probability matrix.
struct CtcTarget {
  std::vector<std::int32_t> labels;
};

template <typename Real>
struct LossResult {
  Real loss = 0;
  Matrix<Real> grad;  // same shape as the scored input
  bool finite() const;
};

// Minimum number of frames that can emit `labels` (one extra frame per
// adjacent repeat, which needs a blank in between).
std::size_t ctc_min_frames(const std::vector<std::int32_t>& labels);

// Negative log-likelihood summed over every alignment of the target, computed
// in log space. `grad` is d loss / d log_probs. When no alignment fits into
// the available frames the loss is +infinity and the gradient is zero.
template <typename Real>
LossResult<Real> ctc_loss(const Matrix<Real>& log_probs, const CtcTarget& target);

// Per-frame argmax (ties resolve to the lower index), merge repeats, drop blanks.
template <typename Real>
std::vector<std::int32_t> ctc_greedy_decode(const Matrix<Real>& log_probs);

struct FrameCeTarget {
  std::int32_t label = 0;  // 0 = false trigger, 1 = true trigger
};

// Mean over frames of class-weighted cross-entropy of softmax(logits)
// against the utterance label replicated to every frame. logits is T x 2.
template <typename Real>
LossResult<Real> frame_ce_loss(const Matrix<Real>& logits, const FrameCeTarget& target,
                               std::array<double, 2> class_weights = {1.0, 1.0});

}  // namespace skws
