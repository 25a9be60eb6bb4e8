// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Incremental inference. A session buffers incoming frames and runs one
// block through the encoder whenever 2S (first block) or S (later blocks)
// frames are available. Emitted values are final.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "model.hpp"

namespace skws {

enum class Verdict { Pending, Triggered, Cancelled };

std::string to_string(Verdict v);

struct TriggerPolicy {
  double threshold = 0.5;
  std::size_t trigger_frame = 0;  // first 0-based frame that is scored
};

struct DecisionState {
  Verdict verdict = Verdict::Pending;
  std::size_t frame = 0;  // frame of the last transition

  bool operator==(const DecisionState&) const = default;
};

// One step of the accept/cancel rule. Frames before trigger_frame leave the
// state untouched; a scored frame below the threshold cancels, otherwise the
// session is triggered. Cancelled is absorbing.
DecisionState advance_decision(DecisionState state, const TriggerPolicy& policy,
                               std::size_t frame, double smoothed_score);

// Replays advance_decision over a whole sequence of smoothed scores.
DecisionState apply_policy(std::span<const double> smoothed_scores, const TriggerPolicy& policy);

// Mean of the most recent kScoreWindow probabilities (fewer at stream start).
class ScoreSmoother {
 public:
  void push(double p);
  double mean() const;
  std::size_t size() const noexcept { return count_ < kScoreWindow ? count_ : kScoreWindow; }
  static constexpr std::size_t bytes() { return kScoreWindow * sizeof(double); }

 private:
  std::array<double, kScoreWindow> ring_{};
  std::size_t count_ = 0;
};

struct FrameEmission {
  std::size_t frame = 0;
  std::vector<double> phonetic_log_probs;  // V + 1
  double positive_prob = 0;
  double smoothed_score = 0;
  Verdict verdict = Verdict::Pending;
};

struct SessionStats {
  std::vector<double> block_seconds;
  std::size_t state_bytes = 0;
  std::size_t blocks = 0;
  std::size_t frames_consumed = 0;
};

// Resident state: per-layer caches, LSTM state and the score ring.
std::size_t session_state_bytes(const ModelConfig& cfg, std::size_t real_size);

// The model must outlive the session.
template <typename Real>
class StreamingSession {
 public:
  explicit StreamingSession(const Model<Real>& model, TriggerPolicy policy = {});

  void set_policy(const TriggerPolicy& policy) { policy_ = policy; }
  const TriggerPolicy& policy() const noexcept { return policy_; }

  std::vector<FrameEmission> push(const FeatureSequence& frames);
  std::vector<FrameEmission> finish();
  bool finished() const noexcept { return finished_; }

  double smoothed_score() const;
  DecisionState decision() const noexcept { return decision_; }
  SessionStats stats() const;
  std::size_t frames_emitted() const noexcept { return emitted_; }

 private:
  std::vector<FrameEmission> run_block(const FeatureSequence& block);

  const Model<Real>* model_;
  TriggerPolicy policy_;
  std::vector<LayerCache<Real>> caches_;
  LstmState<Real> lstm_state_;
  FeatureSequence pending_;
  ScoreSmoother smoother_;
  DecisionState decision_;
  std::size_t consumed_ = 0;
  std::size_t emitted_ = 0;
  std::size_t blocks_ = 0;
  std::vector<double> block_seconds_;
  bool finished_ = false;
};

// Runs `features` through a fresh session, finish included.
template <typename Real>
std::vector<FrameEmission> stream_all(const Model<Real>& model, const FeatureSequence& features,
                                      TriggerPolicy policy = {});

}  // namespace skws
