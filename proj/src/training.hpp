// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "data.hpp"
#include "model.hpp"

namespace skws {

template <typename Real>
using Gradients = ModelParams<Real>;

template <typename Real>
struct BackwardResult {
  MtlLoss<Real> loss;  // head gradients are left in place for inspection
  Gradients<Real> grads;
};

// Exact reverse-mode gradients of the multi-task loss for one utterance.
// An infeasible CTC target yields an infinite loss and all-zero gradients.
template <typename Real>
BackwardResult<Real> backward(const FeatureSequence& features, const CtcTarget& ctc_target,
                              int phrase_label, const ModelParams<Real>& params,
                              const ModelConfig& cfg, bool train_mode = false,
                              Rng* rng = nullptr);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename Real>
class Adam {
 public:
  Adam(const ModelConfig& cfg, AdamOptions opts)
      : opts_(opts), m_(ModelParams<Real>::zeros(cfg)), v_(ModelParams<Real>::zeros(cfg)) {}

  void step(ModelParams<Real>& params, const Gradients<Real>& grads);
  std::uint64_t steps() const noexcept { return step_; }

 private:
  AdamOptions opts_;
  ModelParams<Real> m_, v_;
  std::uint64_t step_ = 0;
};

template <typename Real>
double global_norm(const Gradients<Real>& g);

// Scales g so its global L2 norm is at most max_norm. Returns the norm before clipping.
template <typename Real>
double clip_global_norm(Gradients<Real>& g, double max_norm);

struct TrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  AdamOptions adam;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  ConfigMap to_map() const;
  static TrainOptions from_map(const ConfigMap& m);
  static TrainOptions from_map(const ConfigMap& m, TrainOptions defaults);
};

const std::vector<std::string>& train_config_keys();

struct EpochMetrics {
  std::size_t epoch = 0;
  double ctc_loss = 0;      // mean over training utterances
  double phrase_loss = 0;   // mean over training utterances
  double phrase_acc = 0;    // on the held-out set, or train when none is given
  double wall_seconds = 0;
  std::size_t skipped = 0;  // utterances with an infeasible CTC target
};

// CSV with header "epoch,ctc_loss,phrase_loss,phrase_acc,wall_seconds".
std::string metrics_csv_header();
std::string metrics_csv_row(const EpochMetrics& m);

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Mini-batch Adam on the multi-task loss. Deterministic for a given seed.
// Throws ErrorKind::Numeric when the loss stops being finite.
template <typename Real>
std::vector<EpochMetrics> train(Model<Real>& model, std::span<const Utterance> train_set,
                                std::span<const Utterance> dev_set, const TrainOptions& opts,
                                const EpochCallback& on_epoch = {});

// Utterance-level phrase accuracy (score >= 0.5 predicts a true trigger).
template <typename Real>
double phrase_accuracy(const Model<Real>& model, std::span<const Utterance> set);

struct GradcheckEntry {
  std::string name;
  double max_rel_error = 0;
  std::size_t entries = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> tensors;
  bool all_passed() const;
};

// Relative error of one entry: |a - n| / max(|a|, |n|, floor). The floor
// keeps entries near the round-off of the difference quotient, about
// eps * |loss| / step, from dominating: it is chosen so that ten times that
// round-off maps to exactly the tolerance.
inline constexpr double kGradcheckStep = 1e-5;
inline constexpr double kGradcheckRoundoffSlack = 10.0;

double gradcheck_floor(double loss, double tolerance);

// Builds a model from cfg (64-bit, dropout off) and compares every gradient
// entry against central finite differences on a random utterance of `frames`
// frames (0 = pick 2.5 blocks, at least 12).
GradcheckReport gradcheck(const ModelConfig& cfg, std::uint64_t seed, double tolerance = 1e-4,
                          std::size_t frames = 0);

}  // namespace skws
