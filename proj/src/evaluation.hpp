// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Offline evaluation: DET sweeps over post-trigger context, a phonetic
// decoding baseline, the runtime benchmark and the mask inspector.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "data.hpp"
#include "runtime.hpp"

namespace skws {

struct DetPoint {
  double threshold = 0;
  double false_trigger_rate = 0;
  double frr = 0;
};

// Accepts scores >= threshold. Rows are sorted by threshold and include both
// endpoints: (FRR 0, FTR 1) at the lowest score and (FRR 1, FTR 0) just
// above the highest.
std::vector<DetPoint> det_sweep(const std::vector<double>& positive_scores,
                                const std::vector<double>& negative_scores);

// Lowest false-trigger rate among points with frr <= max_frr.
double ftr_at_frr(const std::vector<DetPoint>& det, double max_frr);

std::string det_csv(const std::vector<DetPoint>& det);

// Utterance score after streaming through trigger_end_frame + K frames.
template <typename Real>
double post_trigger_score(const Model<Real>& model, const Utterance& u,
                          std::size_t post_trigger_frames);

// True if `needle` occurs as a contiguous run in `haystack`.
bool contains_sequence(const std::vector<std::int32_t>& haystack,
                       const std::vector<std::int32_t>& needle);

struct EvalSummary {
  std::size_t post_trigger_frames = 0;
  std::size_t positives = 0;  // true triggers
  std::size_t negatives = 0;  // confusables
  double ftr_at_1pct_frr = 0;
  // Phonetic baseline: greedy decode contains the trigger token sequence.
  double vtd_true_accept = 0;
  double vtd_confusable_accept = 0;
  double vtd_random_accept = 0;
};

struct EvalResult {
  EvalSummary summary;
  std::vector<DetPoint> det;
};

template <typename Real>
EvalResult evaluate(const Model<Real>& model, const std::vector<Utterance>& set,
                    const std::vector<std::int32_t>& trigger, std::size_t post_trigger_frames);

std::string eval_summary_text(const EvalSummary& s);

struct BenchRow {
  std::string mode;  // "streaming" or "full"
  std::size_t length = 0;
  double total_seconds = 0;
  double block_median = 0;  // streaming only
  double block_mean = 0;
  double block_p95 = 0;
  std::size_t state_bytes = 0;
};

// Full mode times a full-context forward pass (median of repeats); streaming
// mode pushes one block at a time and pools per-block times over repeats.
template <typename Real>
std::vector<BenchRow> bench(const Model<Real>& model, const std::vector<std::size_t>& lengths,
                            std::size_t repeats, std::uint64_t seed);

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& r);

double median(std::vector<double> v);
double percentile(std::vector<double> v, double q);

// Mask grid for (S, T) followed by the streamed-vs-masked difference of a
// random attention stack.
struct MaskReport {
  std::string grid;
  double max_abs_diff = 0;
};

MaskReport mask_report(std::size_t shift, std::size_t frames, std::size_t d_model,
                       std::size_t n_heads, std::size_t n_layers, std::uint64_t seed);

}  // namespace skws
