// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace skws {

std::vector<DetPoint> det_sweep(const std::vector<double>& positive_scores,
                                const std::vector<double>& negative_scores) {
  require(!positive_scores.empty() && !negative_scores.empty(), ErrorKind::Usage,
          "DET sweep needs at least one positive and one negative score");
  std::vector<double> pos = positive_scores, neg = negative_scores;
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::vector<double> thresholds = pos;
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::nextafter(thresholds.back(), std::numeric_limits<double>::infinity()));

  std::vector<DetPoint> det;
  det.reserve(thresholds.size());
  for (double th : thresholds) {
    // rejected = scores strictly below the threshold
    const auto rej_pos = std::lower_bound(pos.begin(), pos.end(), th) - pos.begin();
    const auto rej_neg = std::lower_bound(neg.begin(), neg.end(), th) - neg.begin();
    det.push_back({th, static_cast<double>(neg.size() - rej_neg) / neg.size(),
                   static_cast<double>(rej_pos) / pos.size()});
  }
  return det;
}

double ftr_at_frr(const std::vector<DetPoint>& det, double max_frr) {
  double best = 1.0;
  for (const auto& p : det)
    if (p.frr <= max_frr) best = std::min(best, p.false_trigger_rate);
  return best;
}

std::string det_csv(const std::vector<DetPoint>& det) {
  std::string out = "threshold,false_trigger_rate,frr\n";
  char buf[128];
  for (const auto& p : det) {
    std::snprintf(buf, sizeof buf, "%.17g,%.9g,%.9g\n", p.threshold, p.false_trigger_rate, p.frr);
    out += buf;
  }
  return out;
}

template <typename Real>
double post_trigger_score(const Model<Real>& model, const Utterance& u,
                          std::size_t post_trigger_frames) {
  const std::size_t n =
      std::min(u.features.rows(), u.trigger_end_frame + post_trigger_frames);
  if (n == 0) return 0.0;
  const FeatureSequence prefix = u.features.slice_rows(0, n);
  std::vector<double> probs;
  if (model.config.streaming()) {
    for (const auto& e : stream_all(model, prefix)) probs.push_back(e.positive_prob);
  } else {
    probs = phrase_positive_probs(forward_full(prefix, model.params, model.config).phrase_logits);
  }
  return phrase_utterance_score(model.config.phrase_loss, probs);
}

bool contains_sequence(const std::vector<std::int32_t>& haystack,
                       const std::vector<std::int32_t>& needle) {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

template <typename Real>
EvalResult evaluate(const Model<Real>& model, const std::vector<Utterance>& set,
                    const std::vector<std::int32_t>& trigger, std::size_t post_trigger_frames) {
  EvalResult res;
  res.summary.post_trigger_frames = post_trigger_frames;
  std::vector<double> pos, neg;
  std::size_t n_rand = 0, vtd_true = 0, vtd_conf = 0, vtd_rand = 0;
  for (const Utterance& u : set) {
    const UtteranceKind kind = u.kind();
    const auto full = forward_full(u.features, model.params, model.config);
    const bool hit = contains_sequence(ctc_greedy_decode(full.phonetic_log_probs), trigger);
    switch (kind) {
      case UtteranceKind::True:
        pos.push_back(post_trigger_score(model, u, post_trigger_frames));
        vtd_true += hit;
        break;
      case UtteranceKind::Confusable:
        neg.push_back(post_trigger_score(model, u, post_trigger_frames));
        vtd_conf += hit;
        break;
      case UtteranceKind::Random:
        ++n_rand;
        vtd_rand += hit;
        break;
    }
  }
  auto rate = [](std::size_t k, std::size_t n) {
    return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
  };
  res.summary.positives = pos.size();
  res.summary.negatives = neg.size();
  res.summary.vtd_true_accept = rate(vtd_true, pos.size());
  res.summary.vtd_confusable_accept = rate(vtd_conf, neg.size());
  res.summary.vtd_random_accept = rate(vtd_rand, n_rand);
  res.det = det_sweep(pos, neg);
  res.summary.ftr_at_1pct_frr = ftr_at_frr(res.det, 0.01);
  return res;
}

std::string eval_summary_text(const EvalSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "post_trigger_frames=%zu\npositives=%zu\nnegatives=%zu\n"
                "ftr_at_1pct_frr=%.6f\nvtd_true_accept=%.6f\nvtd_confusable_accept=%.6f\n"
                "vtd_random_accept=%.6f\n",
                s.post_trigger_frames, s.positives, s.negatives, s.ftr_at_1pct_frr,
                s.vtd_true_accept, s.vtd_confusable_accept, s.vtd_random_accept);
  return buf;
}

double median(std::vector<double> v) { return percentile(std::move(v), 0.5); }

double percentile(std::vector<double> v, double q) {
  require(!v.empty(), ErrorKind::Usage, "percentile of an empty sample");
  std::sort(v.begin(), v.end());
  // linear interpolation between closest ranks
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

template <typename Real>
std::vector<BenchRow> bench(const Model<Real>& model, const std::vector<std::size_t>& lengths,
                            std::size_t repeats, std::uint64_t seed) {
  require(lengths.size() >= 2, ErrorKind::Usage, "bench needs at least two lengths");
  require(std::is_sorted(lengths.begin(), lengths.end()) &&
              std::adjacent_find(lengths.begin(), lengths.end()) == lengths.end(),
          ErrorKind::Usage, "bench lengths must be strictly increasing");
  require(repeats >= 1, ErrorKind::Usage, "bench needs at least one repeat");
  const ModelConfig& cfg = model.config;
  ModelConfig full_cfg = cfg;
  full_cfg.block_shift = 0;
  Rng rng(seed);

  std::vector<BenchRow> rows;
  for (std::size_t len : lengths) {
    FeatureSequence features(len, cfg.feature_dim);
    fill_normal(features, rng, 1.0);

    BenchRow full{"full", len};
    std::vector<double> totals;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto out = forward_full(features, model.params, full_cfg);
      totals.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      require(out.phrase_logits.rows() == len, ErrorKind::Shape, "unexpected output length");
    }
    full.total_seconds = median(totals);
    rows.push_back(full);

    if (!cfg.streaming()) continue;
    BenchRow st{"streaming", len};
    std::vector<double> blocks;
    totals.clear();
    for (std::size_t r = 0; r < repeats; ++r) {
      StreamingSession<Real> s(model);
      const auto t0 = std::chrono::steady_clock::now();
      std::size_t at = 0;
      for (std::size_t n : block_lengths(len, cfg.block_spec())) {
        s.push(features.slice_rows(at, n));
        at += n;
      }
      s.finish();
      totals.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      const SessionStats stats = s.stats();
      blocks.insert(blocks.end(), stats.block_seconds.begin(), stats.block_seconds.end());
      st.state_bytes = stats.state_bytes;
    }
    st.total_seconds = median(totals);
    if (!blocks.empty()) {
      st.block_median = median(blocks);
      double sum = 0;
      for (double b : blocks) sum += b;
      st.block_mean = sum / static_cast<double>(blocks.size());
      st.block_p95 = percentile(blocks, 0.95);
    }
    rows.push_back(st);
  }
  return rows;
}

std::string bench_csv_header() {
  return "mode,length,total_seconds,block_median,block_mean,block_p95,state_bytes";
}

std::string bench_csv_row(const BenchRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.9g,%.9g,%.9g,%.9g,%zu", r.mode.c_str(), r.length,
                r.total_seconds, r.block_median, r.block_mean, r.block_p95, r.state_bytes);
  return buf;
}

MaskReport mask_report(std::size_t shift, std::size_t frames, std::size_t d_model,
                       std::size_t n_heads, std::size_t n_layers, std::uint64_t seed) {
  const BlockSpec spec{shift};
  spec.validate();
  require(frames >= 1, ErrorKind::Usage, "mask needs at least one frame");
  require(n_layers >= 1, ErrorKind::Usage, "mask needs at least one layer");
  MaskReport rep;
  rep.grid = render_mask(build_mask(frames, spec));
  Rng rng(seed);
  std::vector<AttentionProjections<double>> layers;
  for (std::size_t l = 0; l < n_layers; ++l)
    layers.push_back(AttentionProjections<double>::xavier(d_model, n_heads, rng));
  Matrix<double> x(frames, d_model);
  fill_normal(x, rng, 1.0);
  rep.max_abs_diff = equivalence_report<double>(x, layers, spec);
  return rep;
}

#define SKWS_INSTANTIATE(Real)                                                            \
  template double post_trigger_score(const Model<Real>&, const Utterance&, std::size_t);  \
  template EvalResult evaluate(const Model<Real>&, const std::vector<Utterance>&,         \
                               const std::vector<std::int32_t>&, std::size_t);            \
  template std::vector<BenchRow> bench(const Model<Real>&, const std::vector<std::size_t>&, \
                                       std::size_t, std::uint64_t);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
