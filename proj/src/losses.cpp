// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "losses.hpp"

#include <cmath>
#include <limits>

namespace skws {

namespace {

template <typename Real>
Real lse2(Real a, Real b) {
  if (a == -std::numeric_limits<Real>::infinity()) return b;
  if (b == -std::numeric_limits<Real>::infinity()) return a;
  const Real m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

template <typename Real>
bool LossResult<Real>::finite() const {
  return std::isfinite(loss);
}

std::size_t ctc_min_frames(const std::vector<std::int32_t>& labels) {
  std::size_t n = labels.size();
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++n;
  return n;
}

template <typename Real>
LossResult<Real> ctc_loss(const Matrix<Real>& log_probs, const CtcTarget& target) {
  constexpr Real kNegInf = -std::numeric_limits<Real>::infinity();
  const std::size_t frames = log_probs.rows();
  require(frames >= 1 && log_probs.cols() >= 1, ErrorKind::Shape,
          "CTC needs at least one frame and one class, got " + log_probs.shape_str());
  const auto blank = static_cast<std::int32_t>(log_probs.cols() - 1);
  for (std::int32_t l : target.labels)
    require(l >= 0 && l < blank, ErrorKind::Usage,
            "CTC label " + std::to_string(l) + " outside vocabulary [0, " +
                std::to_string(blank) + ")");

  LossResult<Real> res{Real(0), Matrix<Real>(frames, log_probs.cols())};
  if (ctc_min_frames(target.labels) > frames) {
    res.loss = std::numeric_limits<Real>::infinity();
    return res;
  }

  // Extended label sequence: blank, l1, blank, l2, ..., blank.
  const std::size_t states = 2 * target.labels.size() + 1;
  std::vector<std::int32_t> ext(states, blank);
  for (std::size_t i = 0; i < target.labels.size(); ++i) ext[2 * i + 1] = target.labels[i];
  auto can_skip = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

  Matrix<Real> alpha(frames, states, kNegInf);
  alpha(0, 0) = log_probs(0, blank);
  if (states > 1) alpha(0, 1) = log_probs(0, ext[1]);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      Real a = alpha(t - 1, s);
      if (s >= 1) a = lse2(a, alpha(t - 1, s - 1));
      if (can_skip(s)) a = lse2(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + log_probs(t, ext[s]);
    }
  }
  Real log_z = alpha(frames - 1, states - 1);
  if (states > 1) log_z = lse2(log_z, alpha(frames - 1, states - 2));
  if (log_z == kNegInf) {
    res.loss = std::numeric_limits<Real>::infinity();
    return res;
  }

  // beta(t, s): log-probability of finishing from state s at t, excluding frame t.
  Matrix<Real> beta(frames, states, kNegInf);
  beta(frames - 1, states - 1) = 0;
  if (states > 1) beta(frames - 1, states - 2) = 0;
  for (std::size_t t = frames - 1; t-- > 0;) {
    for (std::size_t s = 0; s < states; ++s) {
      Real b = beta(t + 1, s) + log_probs(t + 1, ext[s]);
      if (s + 1 < states) b = lse2(b, beta(t + 1, s + 1) + log_probs(t + 1, ext[s + 1]));
      if (s + 2 < states && can_skip(s + 2))
        b = lse2(b, beta(t + 1, s + 2) + log_probs(t + 1, ext[s + 2]));
      beta(t, s) = b;
    }
  }

  res.loss = -log_z;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t s = 0; s < states; ++s) {
      const Real lg = alpha(t, s) + beta(t, s);
      if (lg == kNegInf) continue;
      res.grad(t, ext[s]) -= std::exp(lg - log_z);
    }
  }
  return res;
}

template <typename Real>
std::vector<std::int32_t> ctc_greedy_decode(const Matrix<Real>& log_probs) {
  std::vector<std::int32_t> out;
  if (log_probs.cols() == 0) return out;
  const auto blank = static_cast<std::int32_t>(log_probs.cols() - 1);
  std::int32_t prev = -1;
  for (std::size_t t = 0; t < log_probs.rows(); ++t) {
    std::int32_t best = 0;
    for (std::size_t c = 1; c < log_probs.cols(); ++c)
      if (log_probs(t, c) > log_probs(t, static_cast<std::size_t>(best)))
        best = static_cast<std::int32_t>(c);
    if (best != prev && best != blank) out.push_back(best);
    prev = best;
  }
  return out;
}

template <typename Real>
LossResult<Real> frame_ce_loss(const Matrix<Real>& logits, const FrameCeTarget& target,
                               std::array<double, 2> class_weights) {
  require(logits.rows() >= 1 && logits.cols() == 2, ErrorKind::Shape,
          "frame CE expects T x 2 logits with T >= 1, got " + logits.shape_str());
  require(target.label == 0 || target.label == 1, ErrorKind::Usage,
          "frame CE label must be 0 or 1");
  const auto y = static_cast<std::size_t>(target.label);
  const Real w = static_cast<Real>(class_weights[y]);
  const Real inv_t = Real(1) / static_cast<Real>(logits.rows());
  LossResult<Real> res{Real(0), Matrix<Real>(logits.rows(), 2)};
  const Matrix<Real> logp = row_log_softmax(logits);
  for (std::size_t t = 0; t < logits.rows(); ++t) {
    res.loss -= w * logp(t, y);
    for (std::size_t c = 0; c < 2; ++c) {
      const Real p = std::exp(logp(t, c));
      res.grad(t, c) = w * (p - (c == y ? Real(1) : Real(0))) * inv_t;
    }
  }
  res.loss *= inv_t;
  return res;
}

#define SKWS_INSTANTIATE(Real)                                                            \
  template struct LossResult<Real>;                                                       \
  template LossResult<Real> ctc_loss(const Matrix<Real>&, const CtcTarget&);              \
  template std::vector<std::int32_t> ctc_greedy_decode(const Matrix<Real>&);              \
  template LossResult<Real> frame_ce_loss(const Matrix<Real>&, const FrameCeTarget&,      \
                                          std::array<double, 2>);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
