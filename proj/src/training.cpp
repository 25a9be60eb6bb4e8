// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace skws {

namespace {

template <typename Real>
std::vector<Matrix<Real>*> tensor_list(ModelParams<Real>& p) {
  std::vector<Matrix<Real>*> out;
  p.for_each([&](const std::string&, Matrix<Real>& m) { out.push_back(&m); });
  return out;
}

template <typename Real>
std::vector<const Matrix<Real>*> tensor_list(const ModelParams<Real>& p) {
  std::vector<const Matrix<Real>*> out;
  p.for_each([&](const std::string&, const Matrix<Real>& m) { out.push_back(&m); });
  return out;
}

template <typename Real>
void multiply_inplace(Matrix<Real>& a, const Matrix<Real>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= b.data()[i];
}

}  // namespace

template <typename Real>
BackwardResult<Real> backward(const FeatureSequence& features, const CtcTarget& ctc_target,
                              int phrase_label, const ModelParams<Real>& params,
                              const ModelConfig& cfg, bool train_mode, Rng* rng) {
  ForwardTrace<Real> tr;
  const ForwardOutput<Real> out = forward_full(features, params, cfg, train_mode, rng, &tr);
  BackwardResult<Real> res{mtl_loss(out, ctc_target, phrase_label, cfg),
                           ModelParams<Real>::zeros(cfg)};
  if (!res.loss.finite()) return res;
  Gradients<Real>& g = res.grads;

  Matrix<Real> d_emb =
      dense_backward(out.embeddings, params.phonetic, res.loss.d_phonetic_logits, g.phonetic);
  const Matrix<Real> d_phrase_in =
      dense_backward(tr.phrase_input, params.phrase, res.loss.d_phrase_logits, g.phrase);
  if (params.lstm)
    add_inplace(d_emb, lstm_backward(*tr.lstm, *params.lstm, d_phrase_in, *g.lstm));
  else
    add_inplace(d_emb, d_phrase_in);

  Matrix<Real> dh = layer_norm_backward(tr.encoder_out, params.final_norm, d_emb, g.final_norm);
  for (std::size_t l = cfg.n_layers; l-- > 0;) {
    const auto& lp = params.layers[l];
    auto& lg = g.layers[l];
    const auto& lt = tr.layers[l];

    Matrix<Real> d_ffn = dh;
    if (!lt.ffn_drop.empty()) multiply_inplace(d_ffn, lt.ffn_drop);
    const Matrix<Real> d_norm_ffn = feed_forward_backward(lt.ffn, lp.ffn, d_ffn, lg.ffn);
    add_inplace(dh, layer_norm_backward(lt.mid, lp.norm_ffn, d_norm_ffn, lg.norm_ffn));

    Matrix<Real> d_attn = dh;
    if (!lt.attn_drop.empty()) multiply_inplace(d_attn, lt.attn_drop);
    const Matrix<Real> d_norm_attn = attention_backward(lt.attn, lp.attn, d_attn, lg.attn);
    add_inplace(dh, layer_norm_backward(lt.input, lp.norm_attn, d_norm_attn, lg.norm_attn));
  }
  // The positional code is additive and parameter free.
  dense_backward(features.cast<Real>(), params.input, dh, g.input);
  return res;
}

template <typename Real>
void Adam<Real>::step(ModelParams<Real>& params, const Gradients<Real>& grads) {
  ++step_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
  auto p = tensor_list(params);
  auto g = tensor_list(grads);
  auto m = tensor_list(m_);
  auto v = tensor_list(v_);
  require(p.size() == g.size() && p.size() == m.size(), ErrorKind::Shape,
          "optimizer state does not match parameters");
  const auto b1 = static_cast<Real>(opts_.beta1), b2 = static_cast<Real>(opts_.beta2);
  for (std::size_t t = 0; t < p.size(); ++t) {
    Real* pd = p[t]->data();
    const Real* gd = g[t]->data();
    Real* md = m[t]->data();
    Real* vd = v[t]->data();
    for (std::size_t i = 0; i < p[t]->size(); ++i) {
      md[i] = b1 * md[i] + (Real(1) - b1) * gd[i];
      vd[i] = b2 * vd[i] + (Real(1) - b2) * gd[i] * gd[i];
      const double mhat = md[i] / bc1;
      const double vhat = vd[i] / bc2;
      pd[i] -= static_cast<Real>(opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps));
    }
  }
}

template <typename Real>
double global_norm(const Gradients<Real>& g) {
  double sq = 0;
  g.for_each([&](const std::string&, const Matrix<Real>& m) {
    for (Real v : m.values()) sq += static_cast<double>(v) * v;
  });
  return std::sqrt(sq);
}

template <typename Real>
double clip_global_norm(Gradients<Real>& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm && max_norm > 0) {
    const auto s = static_cast<Real>(max_norm / norm);
    g.for_each([&](const std::string&, Matrix<Real>& m) { scale_inplace(m, s); });
  }
  return norm;
}

ConfigMap TrainOptions::to_map() const {
  ConfigMap m;
  m["adam_beta1"] = format_real(adam.beta1);
  m["adam_beta2"] = format_real(adam.beta2);
  m["adam_eps"] = format_real(adam.eps);
  m["batch_size"] = std::to_string(batch_size);
  m["clip_norm"] = format_real(clip_norm);
  m["epochs"] = std::to_string(epochs);
  m["lr"] = format_real(adam.lr);
  return m;
}

TrainOptions TrainOptions::from_map(const ConfigMap& m, TrainOptions d) {
  d.adam.beta1 = config_real(m, "adam_beta1", d.adam.beta1);
  d.adam.beta2 = config_real(m, "adam_beta2", d.adam.beta2);
  d.adam.eps = config_real(m, "adam_eps", d.adam.eps);
  d.batch_size = config_count(m, "batch_size", d.batch_size);
  d.clip_norm = config_real(m, "clip_norm", d.clip_norm);
  d.epochs = config_count(m, "epochs", d.epochs);
  d.adam.lr = config_real(m, "lr", d.adam.lr);
  require(d.batch_size >= 1, ErrorKind::Usage, "batch_size must be >= 1");
  require(d.adam.lr >= 0, ErrorKind::Usage, "lr must be non-negative");
  return d;
}

TrainOptions TrainOptions::from_map(const ConfigMap& m) { return from_map(m, TrainOptions{}); }

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {"adam_beta1", "adam_beta2", "adam_eps",
                                                "batch_size", "clip_norm",  "epochs", "lr"};
  return keys;
}

std::string metrics_csv_header() { return "epoch,ctc_loss,phrase_loss,phrase_acc,wall_seconds"; }

std::string metrics_csv_row(const EpochMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.6f,%.3f", m.epoch, m.ctc_loss, m.phrase_loss,
                m.phrase_acc, m.wall_seconds);
  return buf;
}

template <typename Real>
double phrase_accuracy(const Model<Real>& model, std::span<const Utterance> set) {
  if (set.empty()) return 0.0;
  std::size_t correct = 0;
  for (const Utterance& u : set) {
    const auto out = forward_full(u.features, model.params, model.config);
    const double score =
        phrase_utterance_score(model.config.phrase_loss, phrase_positive_probs(out.phrase_logits));
    if ((score >= 0.5 ? 1 : 0) == u.phrase_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

template <typename Real>
std::vector<EpochMetrics> train(Model<Real>& model, std::span<const Utterance> train_set,
                                std::span<const Utterance> dev_set, const TrainOptions& opts,
                                const EpochCallback& on_epoch) {
  require(!train_set.empty(), ErrorKind::Usage, "training set is empty");
  require(opts.batch_size >= 1, ErrorKind::Usage, "batch_size must be >= 1");
  const ModelConfig& cfg = model.config;
  cfg.validate();
  Rng shuffle_rng(opts.seed);
  Rng dropout_rng = Rng(opts.seed).fork(0x0d0d);
  Adam<Real> adam(cfg, opts.adam);
  std::vector<EpochMetrics> log;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_indices(order, shuffle_rng);

    EpochMetrics em;
    em.epoch = epoch;
    std::size_t used = 0;
    for (std::size_t b = 0; b < order.size(); b += opts.batch_size) {
      Gradients<Real> acc = ModelParams<Real>::zeros(cfg);
      std::size_t in_batch = 0;
      for (std::size_t k = b; k < std::min(order.size(), b + opts.batch_size); ++k) {
        const Utterance& u = train_set[order[k]];
        BackwardResult<Real> r = backward(u.features, CtcTarget{u.tokens}, u.phrase_label,
                                          model.params, cfg, true, &dropout_rng);
        if (std::isnan(r.loss.total))
          fail(ErrorKind::Numeric, "training diverged: NaN loss at epoch " +
                                       std::to_string(epoch) + " on utterance '" + u.id + "'");
        if (!r.loss.finite()) {
          ++em.skipped;
          continue;
        }
        auto dst = tensor_list(acc);
        auto src = tensor_list(r.grads);
        for (std::size_t t = 0; t < dst.size(); ++t) add_inplace(*dst[t], *src[t]);
        em.ctc_loss += static_cast<double>(r.loss.ctc);
        em.phrase_loss += static_cast<double>(r.loss.phrase);
        ++in_batch;
      }
      if (in_batch == 0) continue;
      used += in_batch;
      acc.for_each([&](const std::string&, Matrix<Real>& m) {
        scale_inplace(m, Real(1) / static_cast<Real>(in_batch));
      });
      const double norm = clip_global_norm(acc, opts.clip_norm);
      if (!std::isfinite(norm))
        fail(ErrorKind::Numeric,
             "training diverged: non-finite gradient norm at epoch " + std::to_string(epoch));
      adam.step(model.params, acc);
    }
    require(used > 0, ErrorKind::Numeric, "every training utterance had an infeasible CTC target");
    em.ctc_loss /= static_cast<double>(used);
    em.phrase_loss /= static_cast<double>(used);
    em.phrase_acc = phrase_accuracy(model, dev_set.empty() ? train_set : dev_set);
    em.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  return log;
}

bool GradcheckReport::all_passed() const {
  for (const auto& t : tensors)
    if (!t.passed) return false;
  return !tensors.empty();
}

double gradcheck_floor(double loss, double tolerance) {
  const double roundoff =
      std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss)) / kGradcheckStep;
  return kGradcheckRoundoffSlack * roundoff / tolerance;
}

GradcheckReport gradcheck(const ModelConfig& base, std::uint64_t seed, double tolerance,
                          std::size_t frames) {
  ModelConfig cfg = base;
  cfg.dropout = 0.0;
  cfg.precision = Precision::F64;
  cfg.validate();
  Model<double> model = Model<double>::init(cfg, seed);
  Rng rng = Rng(seed).fork(0x9c);

  if (frames == 0) frames = std::max<std::size_t>(12, cfg.streaming() ? 5 * cfg.block_shift / 2 + 1 : 12);
  FeatureSequence features(frames, cfg.feature_dim);
  fill_normal(features, rng, 1.0);
  CtcTarget target;
  const std::size_t n_labels = std::min<std::size_t>(3, frames / 3);
  for (std::size_t i = 0; i < n_labels; ++i)
    target.labels.push_back(static_cast<std::int32_t>(rng.below(cfg.vocab_size)));
  const int phrase_label = 1;

  const BackwardResult<double> analytic =
      backward(features, target, phrase_label, model.params, cfg);
  require(analytic.loss.finite(), ErrorKind::Numeric, "gradcheck loss is not finite");

  auto loss_at = [&]() {
    const auto out = forward_full(features, model.params, cfg);
    return static_cast<double>(mtl_loss(out, target, phrase_label, cfg).total);
  };

  const double floor = gradcheck_floor(analytic.loss.total, tolerance);
  std::vector<std::pair<std::string, Matrix<double>*>> params;
  model.params.for_each(
      [&](const std::string& name, Matrix<double>& m) { params.emplace_back(name, &m); });
  std::vector<const Matrix<double>*> grads = tensor_list(analytic.grads);

  GradcheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    GradcheckEntry e;
    e.name = params[t].first;
    Matrix<double>& m = *params[t].second;
    e.entries = m.size();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + kGradcheckStep;
      const double up = loss_at();
      m.data()[i] = saved - kGradcheckStep;
      const double down = loss_at();
      m.data()[i] = saved;
      const double numeric = (up - down) / (2 * kGradcheckStep);
      const double a = grads[t]->data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      e.max_rel_error = std::max(e.max_rel_error, std::abs(a - numeric) / denom);
    }
    e.passed = e.max_rel_error < tolerance;
    report.tensors.push_back(std::move(e));
  }
  return report;
}

#define SKWS_INSTANTIATE(Real)                                                                  \
  template BackwardResult<Real> backward(const FeatureSequence&, const CtcTarget&, int,         \
                                         const ModelParams<Real>&, const ModelConfig&, bool,    \
                                         Rng*);                                                 \
  template class Adam<Real>;                                                                    \
  template double global_norm(const Gradients<Real>&);                                          \
  template double clip_global_norm(Gradients<Real>&, double);                                   \
  template double phrase_accuracy(const Model<Real>&, std::span<const Utterance>);              \
  template std::vector<EpochMetrics> train(Model<Real>&, std::span<const Utterance>,            \
                                           std::span<const Utterance>, const TrainOptions&,     \
                                           const EpochCallback&);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
