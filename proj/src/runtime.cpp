// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "runtime.hpp"

#include <chrono>

namespace skws {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pending: return "pending";
    case Verdict::Triggered: return "triggered";
    case Verdict::Cancelled: return "cancelled";
  }
  return "unknown";
}

DecisionState advance_decision(DecisionState state, const TriggerPolicy& policy,
                               std::size_t frame, double smoothed_score) {
  if (state.verdict == Verdict::Cancelled || frame < policy.trigger_frame) return state;
  if (smoothed_score < policy.threshold) return {Verdict::Cancelled, frame};
  if (state.verdict == Verdict::Pending) return {Verdict::Triggered, frame};
  return state;
}

DecisionState apply_policy(std::span<const double> smoothed_scores, const TriggerPolicy& policy) {
  DecisionState s;
  for (std::size_t t = 0; t < smoothed_scores.size(); ++t)
    s = advance_decision(s, policy, t, smoothed_scores[t]);
  return s;
}

void ScoreSmoother::push(double p) {
  ring_[count_ % kScoreWindow] = p;
  ++count_;
}

double ScoreSmoother::mean() const {
  require(count_ > 0, ErrorKind::State, "no frames have been scored yet");
  const std::size_t n = size();
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += ring_[i];
  return sum / static_cast<double>(n);
}

std::size_t session_state_bytes(const ModelConfig& cfg, std::size_t real_size) {
  std::size_t bytes = cfg.n_layers * cfg.block_shift * cfg.d_model * real_size;
  if (cfg.lstm_in_phrase_branch) bytes += 2 * cfg.lstm_hidden * real_size;
  return bytes + ScoreSmoother::bytes();
}

template <typename Real>
StreamingSession<Real>::StreamingSession(const Model<Real>& model, TriggerPolicy policy)
    : model_(&model),
      policy_(policy),
      lstm_state_(LstmState<Real>::zeros(model.config.lstm_hidden)),
      pending_(0, model.config.feature_dim) {
  const ModelConfig& cfg = model.config;
  cfg.validate();
  require(cfg.streaming(), ErrorKind::Usage,
          "streaming needs block_shift > 0; this model uses full-context attention");
  model.params.check_against(cfg);
  caches_.assign(cfg.n_layers, LayerCache<Real>(cfg.block_spec()));
}

template <typename Real>
std::vector<FrameEmission> StreamingSession<Real>::push(const FeatureSequence& frames) {
  require(!finished_, ErrorKind::State, "push after finish");
  const ModelConfig& cfg = model_->config;
  require(frames.cols() == cfg.feature_dim, ErrorKind::Shape,
          "frames " + frames.shape_str() + " do not match feature_dim " +
              std::to_string(cfg.feature_dim));
  pending_.append_rows(frames);
  consumed_ += frames.rows();

  std::vector<FrameEmission> out;
  for (;;) {
    const std::size_t need = blocks_ == 0 ? 2 * cfg.block_shift : cfg.block_shift;
    if (pending_.rows() < need) break;
    auto e = run_block(pending_.slice_rows(0, need));
    pending_ = pending_.slice_rows(need, pending_.rows() - need);
    out.insert(out.end(), std::make_move_iterator(e.begin()), std::make_move_iterator(e.end()));
  }
  return out;
}

template <typename Real>
std::vector<FrameEmission> StreamingSession<Real>::finish() {
  require(!finished_, ErrorKind::State, "session already finished");
  finished_ = true;
  if (pending_.rows() == 0) return {};
  auto out = run_block(pending_);
  pending_ = FeatureSequence(0, model_->config.feature_dim);
  return out;
}

template <typename Real>
std::vector<FrameEmission> StreamingSession<Real>::run_block(const FeatureSequence& block) {
  const auto started = std::chrono::steady_clock::now();
  const ModelConfig& cfg = model_->config;
  const ModelParams<Real>& p = model_->params;

  Matrix<Real> h = pos_encode(dense(block.cast<Real>(), p.input), emitted_);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const auto& lp = p.layers[l];
    add_inplace(h, attend_streaming(layer_norm(h, lp.norm_attn), caches_[l], lp.attn));
    add_inplace(h, feed_forward(layer_norm(h, lp.norm_ffn), lp.ffn));
  }
  const Matrix<Real> emb = layer_norm(h, p.final_norm);
  const Matrix<Real> log_probs = row_log_softmax(dense(emb, p.phonetic));
  Matrix<Real> logits;
  if (p.lstm) {
    LstmOutput<Real> lo = lstm_forward(emb, lstm_state_, *p.lstm);
    lstm_state_ = std::move(lo.final_state);
    logits = dense(lo.hidden, p.phrase);
  } else {
    logits = dense(emb, p.phrase);
  }
  const std::vector<double> probs = phrase_positive_probs(logits);

  std::vector<FrameEmission> out(block.rows());
  for (std::size_t r = 0; r < block.rows(); ++r) {
    FrameEmission& e = out[r];
    e.frame = emitted_ + r;
    e.phonetic_log_probs.assign(log_probs.row(r).begin(), log_probs.row(r).end());
    e.positive_prob = probs[r];
    smoother_.push(probs[r]);
    e.smoothed_score = smoother_.mean();
    decision_ = advance_decision(decision_, policy_, e.frame, e.smoothed_score);
    e.verdict = decision_.verdict;
  }
  emitted_ += block.rows();
  ++blocks_;
  block_seconds_.push_back(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  return out;
}

template <typename Real>
double StreamingSession<Real>::smoothed_score() const {
  return smoother_.mean();
}

template <typename Real>
SessionStats StreamingSession<Real>::stats() const {
  return {block_seconds_, session_state_bytes(model_->config, sizeof(Real)), blocks_, consumed_};
}

template <typename Real>
std::vector<FrameEmission> stream_all(const Model<Real>& model, const FeatureSequence& features,
                                      TriggerPolicy policy) {
  StreamingSession<Real> s(model, policy);
  auto out = s.push(features);
  auto tail = s.finish();
  out.insert(out.end(), std::make_move_iterator(tail.begin()), std::make_move_iterator(tail.end()));
  return out;
}

#define SKWS_INSTANTIATE(Real)                                                               \
  template class StreamingSession<Real>;                                                     \
  template std::vector<FrameEmission> stream_all(const Model<Real>&, const FeatureSequence&, \
                                                 TriggerPolicy);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
