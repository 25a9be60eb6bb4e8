// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "attention.hpp"

#include <algorithm>
#include <cmath>

namespace skws {

void BlockSpec::validate() const {
  require(shift >= 1, ErrorKind::Usage, "block shift must be >= 1");
}

std::size_t block_of(std::size_t t, const BlockSpec& spec) {
  require(t >= 1, ErrorKind::Usage, "frame index is 1-based");
  spec.validate();
  if (t <= 2 * spec.shift) return 1;
  return (t + spec.shift - 1) / spec.shift - 1;
}

KeyWindow key_window(std::size_t t, const BlockSpec& spec, std::size_t frames) {
  const std::size_t i = block_of(t, spec);
  KeyWindow w{};
  if (i == 1) {
    w.first = 1;
    w.last = 2 * spec.shift;
  } else {
    w.first = (i - 1) * spec.shift + 1;
    w.last = (i + 1) * spec.shift;
  }
  w.last = std::min(w.last, frames);
  return w;
}

AttentionMask build_mask(std::size_t frames, const BlockSpec& spec) {
  require(frames >= 1, ErrorKind::Usage, "mask needs at least one frame");
  spec.validate();
  AttentionMask m{frames, spec, Mask(frames, frames)};
  for (std::size_t t = 1; t <= frames; ++t) {
    const KeyWindow w = key_window(t, spec, frames);
    for (std::size_t u = w.first; u <= w.last; ++u) m.allowed.set(t - 1, u - 1, true);
  }
  return m;
}

std::string render_mask(const AttentionMask& mask) {
  std::string out;
  out.reserve(mask.frames * (mask.frames + 1));
  for (std::size_t r = 0; r < mask.frames; ++r) {
    for (std::size_t c = 0; c < mask.frames; ++c) out += mask.allowed(r, c) ? '#' : '.';
    out += '\n';
  }
  return out;
}

template <typename Real>
void AttentionProjections<Real>::validate() const {
  const std::size_t d = wq.rows();
  require(n_heads >= 1 && d % n_heads == 0, ErrorKind::Shape,
          "d_model " + std::to_string(d) + " not divisible by " + std::to_string(n_heads) +
              " heads");
  for (const Matrix<Real>* w : {&wq, &wk, &wv, &wo})
    require(w->rows() == d && w->cols() == d, ErrorKind::Shape,
            "attention projection " + w->shape_str() + " is not " + std::to_string(d) + "x" +
                std::to_string(d));
}

template <typename Real>
AttentionProjections<Real> AttentionProjections<Real>::zeros(std::size_t d_model,
                                                             std::size_t n_heads) {
  AttentionProjections p;
  p.wq = p.wk = p.wv = p.wo = Matrix<Real>(d_model, d_model);
  p.n_heads = n_heads;
  return p;
}

template <typename Real>
AttentionProjections<Real> AttentionProjections<Real>::xavier(std::size_t d_model,
                                                              std::size_t n_heads, Rng& rng) {
  AttentionProjections p = zeros(d_model, n_heads);
  const double a = std::sqrt(6.0 / static_cast<double>(2 * d_model));
  for (Matrix<Real>* w : {&p.wq, &p.wk, &p.wv, &p.wo}) fill_uniform(*w, rng, -a, a);
  p.validate();
  return p;
}

template <typename Real>
Matrix<Real> attention_core(const Matrix<Real>& q, const Matrix<Real>& k,
                            const Matrix<Real>& v, std::size_t n_heads, const Mask* mask,
                            std::vector<Matrix<Real>>* probs_out) {
  require(q.cols() == k.cols() && k.cols() == v.cols() && k.rows() == v.rows(),
          ErrorKind::Shape,
          "attention q/k/v shapes " + q.shape_str() + " " + k.shape_str() + " " +
              v.shape_str() + " are inconsistent");
  require(n_heads >= 1 && q.cols() % n_heads == 0, ErrorKind::Shape,
          "head count does not divide model width");
  const std::size_t dh = q.cols() / n_heads;
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));
  if (probs_out) probs_out->clear();

  Matrix<Real> context(q.rows(), q.cols());
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Matrix<Real> qh = q.slice_cols(h * dh, dh);
    const Matrix<Real> kh = k.slice_cols(h * dh, dh);
    const Matrix<Real> vh = v.slice_cols(h * dh, dh);
    Matrix<Real> scores = matmul_nt(qh, kh);
    scale_inplace(scores, scale);
    Matrix<Real> p = row_softmax(scores, mask);
    context.set_cols(h * dh, matmul(p, vh));
    if (probs_out) probs_out->push_back(std::move(p));
  }
  return context;
}

template <typename Real>
AttentionCoreGrads<Real> attention_core_backward(const Matrix<Real>& q, const Matrix<Real>& k,
                                                 const Matrix<Real>& v,
                                                 std::span<const Matrix<Real>> probs,
                                                 std::size_t n_heads,
                                                 const Matrix<Real>& d_context) {
  const std::size_t dh = q.cols() / n_heads;
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));
  AttentionCoreGrads<Real> g{Matrix<Real>(q.rows(), q.cols()), Matrix<Real>(k.rows(), k.cols()),
                             Matrix<Real>(v.rows(), v.cols())};
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Matrix<Real>& p = probs[h];
    const Matrix<Real> qh = q.slice_cols(h * dh, dh);
    const Matrix<Real> kh = k.slice_cols(h * dh, dh);
    const Matrix<Real> vh = v.slice_cols(h * dh, dh);
    const Matrix<Real> dctx = d_context.slice_cols(h * dh, dh);

    const Matrix<Real> dp = matmul_nt(dctx, vh);
    g.dv.set_cols(h * dh, matmul_tn(p, dctx));

    // Softmax Jacobian; blocked entries have p = 0 and receive no gradient.
    Matrix<Real> ds(p.rows(), p.cols());
    for (std::size_t r = 0; r < p.rows(); ++r) {
      Real dot = 0;
      for (std::size_t c = 0; c < p.cols(); ++c) dot += dp(r, c) * p(r, c);
      for (std::size_t c = 0; c < p.cols(); ++c) ds(r, c) = p(r, c) * (dp(r, c) - dot) * scale;
    }
    g.dq.set_cols(h * dh, matmul(ds, kh));
    g.dk.set_cols(h * dh, matmul_tn(ds, qh));
  }
  return g;
}

template <typename Real>
Matrix<Real> attend_full(const Matrix<Real>& x, const AttentionProjections<Real>& proj,
                         const AttentionMask* mask, AttentionTrace<Real>* trace) {
  proj.validate();
  require(x.cols() == proj.d_model(), ErrorKind::Shape,
          "attention input " + x.shape_str() + " does not match d_model " +
              std::to_string(proj.d_model()));
  if (mask)
    require(mask->frames == x.rows(), ErrorKind::Shape,
            "mask covers " + std::to_string(mask->frames) + " frames, input has " +
                std::to_string(x.rows()));
  Matrix<Real> q = matmul(x, proj.wq);
  Matrix<Real> k = matmul(x, proj.wk);
  Matrix<Real> v = matmul(x, proj.wv);
  std::vector<Matrix<Real>> probs;
  Matrix<Real> context = attention_core(q, k, v, proj.n_heads, mask ? &mask->allowed : nullptr,
                                        trace ? &probs : nullptr);
  Matrix<Real> out = matmul(context, proj.wo);
  if (trace) {
    trace->input = x;
    trace->q = std::move(q);
    trace->k = std::move(k);
    trace->v = std::move(v);
    trace->context = std::move(context);
    trace->probs = std::move(probs);
  }
  return out;
}

template <typename Real>
Matrix<Real> attention_backward(const AttentionTrace<Real>& trace,
                                const AttentionProjections<Real>& proj,
                                const Matrix<Real>& d_out, AttentionProjections<Real>& grads) {
  add_inplace(grads.wo, matmul_tn(trace.context, d_out));
  const Matrix<Real> d_context = matmul_nt(d_out, proj.wo);
  const AttentionCoreGrads<Real> g = attention_core_backward<Real>(
      trace.q, trace.k, trace.v, trace.probs, proj.n_heads, d_context);
  add_inplace(grads.wq, matmul_tn(trace.input, g.dq));
  add_inplace(grads.wk, matmul_tn(trace.input, g.dk));
  add_inplace(grads.wv, matmul_tn(trace.input, g.dv));
  Matrix<Real> dx = matmul_nt(g.dq, proj.wq);
  add_inplace(dx, matmul_nt(g.dk, proj.wk));
  add_inplace(dx, matmul_nt(g.dv, proj.wv));
  return dx;
}

template <typename Real>
Matrix<Real> attend_streaming(const Matrix<Real>& new_frames, LayerCache<Real>& cache,
                              const AttentionProjections<Real>& proj) {
  proj.validate();
  const std::size_t s = cache.spec.shift;
  require(s >= 1, ErrorKind::Usage, "layer cache has no block shift");
  const std::size_t n = new_frames.rows();
  if (n == 0) return Matrix<Real>(0, proj.d_model());
  require(new_frames.cols() == proj.d_model(), ErrorKind::Shape,
          "streaming block " + new_frames.shape_str() + " does not match d_model " +
              std::to_string(proj.d_model()));
  if (cache.valid_len() == 0) {
    require(n <= 2 * s, ErrorKind::State,
            "first block takes at most " + std::to_string(2 * s) + " frames, got " +
                std::to_string(n));
  } else {
    require(cache.valid_len() == s, ErrorKind::State,
            "cache holds " + std::to_string(cache.valid_len()) +
                " frames; a partial block already ended this stream");
    require(cache.inputs.cols() == proj.d_model(), ErrorKind::Shape,
            "cache width does not match d_model");
    require(n <= s, ErrorKind::State,
            "block after the first takes at most " + std::to_string(s) + " frames, got " +
                std::to_string(n));
  }

  Matrix<Real> window = cache.inputs;
  window.append_rows(new_frames);
  const Matrix<Real> q = matmul(new_frames, proj.wq);
  const Matrix<Real> k = matmul(window, proj.wk);
  const Matrix<Real> v = matmul(window, proj.wv);
  const Matrix<Real> context = attention_core(q, k, v, proj.n_heads, nullptr);

  const std::size_t keep = std::min(s, window.rows());
  cache.inputs = window.slice_rows(window.rows() - keep, keep);
  return matmul(context, proj.wo);
}

std::vector<std::size_t> block_lengths(std::size_t frames, const BlockSpec& spec) {
  spec.validate();
  std::vector<std::size_t> out;
  if (frames == 0) return out;
  std::size_t first = std::min(frames, 2 * spec.shift);
  out.push_back(first);
  for (std::size_t done = first; done < frames; done += spec.shift)
    out.push_back(std::min(spec.shift, frames - done));
  return out;
}

template <typename Real>
Real equivalence_report(const Matrix<Real>& x,
                        std::span<const AttentionProjections<Real>> layers,
                        const BlockSpec& spec) {
  require(x.rows() >= 1, ErrorKind::Usage, "equivalence check needs at least one frame");
  const AttentionMask mask = build_mask(x.rows(), spec);
  Matrix<Real> full = x;
  for (const auto& p : layers) full = attend_full(full, p, &mask);

  std::vector<LayerCache<Real>> caches(layers.size(), LayerCache<Real>(spec));
  Matrix<Real> streamed(0, x.cols());
  std::size_t offset = 0;
  for (std::size_t len : block_lengths(x.rows(), spec)) {
    Matrix<Real> h = x.slice_rows(offset, len);
    for (std::size_t l = 0; l < layers.size(); ++l) h = attend_streaming(h, caches[l], layers[l]);
    streamed.append_rows(h);
    offset += len;
  }
  return max_abs_diff(full, streamed);
}

#define SKWS_INSTANTIATE(Real)                                                               \
  template struct AttentionProjections<Real>;                                                \
  template Matrix<Real> attention_core(const Matrix<Real>&, const Matrix<Real>&,             \
                                       const Matrix<Real>&, std::size_t, const Mask*,        \
                                       std::vector<Matrix<Real>>*);                          \
  template AttentionCoreGrads<Real> attention_core_backward(                                 \
      const Matrix<Real>&, const Matrix<Real>&, const Matrix<Real>&,                         \
      std::span<const Matrix<Real>>, std::size_t, const Matrix<Real>&);                      \
  template Matrix<Real> attend_full(const Matrix<Real>&, const AttentionProjections<Real>&,  \
                                    const AttentionMask*, AttentionTrace<Real>*);            \
  template Matrix<Real> attention_backward(const AttentionTrace<Real>&,                      \
                                           const AttentionProjections<Real>&,                \
                                           const Matrix<Real>&, AttentionProjections<Real>&); \
  template Matrix<Real> attend_streaming(const Matrix<Real>&, LayerCache<Real>&,             \
                                         const AttentionProjections<Real>&);                 \
  template Real equivalence_report(const Matrix<Real>&,                                      \
                                   std::span<const AttentionProjections<Real>>,              \
                                   const BlockSpec&);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
