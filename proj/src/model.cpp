// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "binary_io.hpp"

namespace skws {

std::string to_string(PhraseLoss v) { return v == PhraseLoss::FrameCe ? "frame_ce" : "ctc_seq"; }
std::string to_string(Precision v) { return v == Precision::F32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::F32;
  if (s == "f64") return Precision::F64;
  fail(ErrorKind::Usage, "precision must be f32 or f64, got '" + s + "'");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    require(v >= 1, ErrorKind::Usage, std::string(name) + " must be >= 1");
  };
  positive(feature_dim, "feature_dim");
  positive(d_model, "d_model");
  positive(n_heads, "n_heads");
  positive(n_layers, "n_layers");
  positive(ffn_dim, "ffn_dim");
  positive(vocab_size, "vocab_size");
  if (lstm_in_phrase_branch) positive(lstm_hidden, "lstm_hidden");
  require(d_model % n_heads == 0, ErrorKind::Usage,
          "d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
              std::to_string(n_heads));
  require(dropout >= 0.0 && dropout < 1.0, ErrorKind::Usage, "dropout must be in [0, 1)");
  require(std::isfinite(lambda_ctc) && std::isfinite(lambda_phrase) && lambda_ctc >= 0 &&
              lambda_phrase >= 0,
          ErrorKind::Usage, "loss weights must be finite and non-negative");
}

const std::vector<std::string>& model_config_keys() {
  static const std::vector<std::string> keys = {
      "block_shift", "d_model",    "dropout",  "feature_dim",
      "ffn_dim",     "lambda_ctc", "lambda_phrase", "lstm_hidden",
      "lstm_in_phrase_branch",     "n_heads",  "n_layers",  "phrase_loss",
      "precision",   "vocab_size"};
  return keys;
}

ConfigMap ModelConfig::to_map() const {
  ConfigMap m;
  m["block_shift"] = std::to_string(block_shift);
  m["d_model"] = std::to_string(d_model);
  m["dropout"] = format_real(dropout);
  m["feature_dim"] = std::to_string(feature_dim);
  m["ffn_dim"] = std::to_string(ffn_dim);
  m["lambda_ctc"] = format_real(lambda_ctc);
  m["lambda_phrase"] = format_real(lambda_phrase);
  m["lstm_hidden"] = std::to_string(lstm_hidden);
  m["lstm_in_phrase_branch"] = lstm_in_phrase_branch ? "true" : "false";
  m["n_heads"] = std::to_string(n_heads);
  m["n_layers"] = std::to_string(n_layers);
  m["phrase_loss"] = to_string(phrase_loss);
  m["precision"] = to_string(precision);
  m["vocab_size"] = std::to_string(vocab_size);
  return m;
}

ModelConfig ModelConfig::from_map(const ConfigMap& m) {
  ModelConfig c;
  c.block_shift = config_count(m, "block_shift", c.block_shift);
  c.d_model = config_count(m, "d_model", c.d_model);
  c.dropout = config_real(m, "dropout", c.dropout);
  c.feature_dim = config_count(m, "feature_dim", c.feature_dim);
  c.ffn_dim = config_count(m, "ffn_dim", c.ffn_dim);
  c.lambda_ctc = config_real(m, "lambda_ctc", c.lambda_ctc);
  c.lambda_phrase = config_real(m, "lambda_phrase", c.lambda_phrase);
  c.lstm_hidden = config_count(m, "lstm_hidden", c.lstm_hidden);
  c.lstm_in_phrase_branch = config_flag(m, "lstm_in_phrase_branch", c.lstm_in_phrase_branch);
  c.n_heads = config_count(m, "n_heads", c.n_heads);
  c.n_layers = config_count(m, "n_layers", c.n_layers);
  const std::string pl = config_string(m, "phrase_loss", to_string(c.phrase_loss));
  if (pl == "frame_ce")
    c.phrase_loss = PhraseLoss::FrameCe;
  else if (pl == "ctc_seq")
    c.phrase_loss = PhraseLoss::CtcSeq;
  else
    fail(ErrorKind::Usage, "phrase_loss must be frame_ce or ctc_seq, got '" + pl + "'");
  c.precision = parse_precision(config_string(m, "precision", to_string(c.precision)));
  c.vocab_size = config_count(m, "vocab_size", c.vocab_size);
  c.validate();
  return c;
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::zeros(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  const std::size_t d = cfg.d_model;
  p.input = DenseParams<Real>::zeros(cfg.feature_dim, d);
  for (std::size_t l = 0; l < cfg.n_layers; ++l)
    p.layers.push_back({LayerNormParams<Real>::zeros(d),
                        AttentionProjections<Real>::zeros(d, cfg.n_heads),
                        LayerNormParams<Real>::zeros(d),
                        FeedForwardParams<Real>::zeros(d, cfg.ffn_dim)});
  p.final_norm = LayerNormParams<Real>::zeros(d);
  p.phonetic = DenseParams<Real>::zeros(d, cfg.phonetic_classes());
  if (cfg.lstm_in_phrase_branch) p.lstm = LstmParams<Real>::zeros(d, cfg.lstm_hidden);
  p.phrase = DenseParams<Real>::zeros(cfg.lstm_in_phrase_branch ? cfg.lstm_hidden : d, 2);
  return p;
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelParams p;
  const std::size_t d = cfg.d_model;
  p.input = DenseParams<Real>::xavier(cfg.feature_dim, d, rng);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    EncoderLayerParams<Real> layer;
    layer.norm_attn = LayerNormParams<Real>::identity(d);
    layer.attn = AttentionProjections<Real>::xavier(d, cfg.n_heads, rng);
    layer.norm_ffn = LayerNormParams<Real>::identity(d);
    layer.ffn = FeedForwardParams<Real>::xavier(d, cfg.ffn_dim, rng);
    p.layers.push_back(std::move(layer));
  }
  p.final_norm = LayerNormParams<Real>::identity(d);
  p.phonetic = DenseParams<Real>::xavier(d, cfg.phonetic_classes(), rng);
  if (cfg.lstm_in_phrase_branch) p.lstm = LstmParams<Real>::xavier(d, cfg.lstm_hidden, rng);
  p.phrase = DenseParams<Real>::xavier(cfg.lstm_in_phrase_branch ? cfg.lstm_hidden : d, 2, rng);
  return p;
}

namespace {

// Shared traversal for the const and non-const visitors.
template <typename Params, typename Fn>
void visit_params(Params& p, Fn&& fn) {
  fn("input.weight", p.input.weight);
  fn("input.bias", p.input.bias);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    fn(pre + "norm_attn.gain", layer.norm_attn.gain);
    fn(pre + "norm_attn.bias", layer.norm_attn.bias);
    fn(pre + "attn.wq", layer.attn.wq);
    fn(pre + "attn.wk", layer.attn.wk);
    fn(pre + "attn.wv", layer.attn.wv);
    fn(pre + "attn.wo", layer.attn.wo);
    fn(pre + "norm_ffn.gain", layer.norm_ffn.gain);
    fn(pre + "norm_ffn.bias", layer.norm_ffn.bias);
    fn(pre + "ffn.inner.weight", layer.ffn.inner.weight);
    fn(pre + "ffn.inner.bias", layer.ffn.inner.bias);
    fn(pre + "ffn.outer.weight", layer.ffn.outer.weight);
    fn(pre + "ffn.outer.bias", layer.ffn.outer.bias);
  }
  fn("final_norm.gain", p.final_norm.gain);
  fn("final_norm.bias", p.final_norm.bias);
  fn("phonetic.weight", p.phonetic.weight);
  fn("phonetic.bias", p.phonetic.bias);
  if (p.lstm) {
    fn("phrase.lstm.w_input", p.lstm->w_input);
    fn("phrase.lstm.w_recurrent", p.lstm->w_recurrent);
    fn("phrase.lstm.bias", p.lstm->bias);
  }
  fn("phrase.weight", p.phrase.weight);
  fn("phrase.bias", p.phrase.bias);
}

}  // namespace

template <typename Real>
void ModelParams<Real>::for_each(
    const std::function<void(const std::string&, Matrix<Real>&)>& fn) {
  visit_params(*this, fn);
}

template <typename Real>
void ModelParams<Real>::for_each(
    const std::function<void(const std::string&, const Matrix<Real>&)>& fn) const {
  visit_params(*this, fn);
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix<Real>& m) { n += m.size(); });
  return n;
}

template <typename Real>
void ModelParams<Real>::check_against(const ModelConfig& cfg) const {
  const ModelParams expected = zeros(cfg);
  std::map<std::string, const Matrix<Real>*> have;
  for_each([&](const std::string& name, const Matrix<Real>& m) { have[name] = &m; });
  std::size_t count = 0;
  expected.for_each([&](const std::string& name, const Matrix<Real>& m) {
    ++count;
    const auto it = have.find(name);
    require(it != have.end(), ErrorKind::Shape, "parameter '" + name + "' is missing");
    require(it->second->rows() == m.rows() && it->second->cols() == m.cols(), ErrorKind::Shape,
            "parameter '" + name + "' has shape " + it->second->shape_str() + ", config needs " +
                m.shape_str());
  });
  require(count == have.size(), ErrorKind::Shape, "parameter set has tensors the config lacks");
  for (const auto& layer : layers)
    require(layer.attn.n_heads == cfg.n_heads, ErrorKind::Shape, "attention head count mismatch");
}

namespace {

template <typename Real>
Matrix<Real> dropout_scale(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Matrix<Real> m(rows, cols);
  const Real keep = static_cast<Real>(1.0 / (1.0 - rate));
  for (Real& v : m.values()) v = rng.uniform() < rate ? Real(0) : keep;
  return m;
}

template <typename Real>
void multiply_inplace(Matrix<Real>& a, const Matrix<Real>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] *= b.data()[i];
}

}  // namespace

template <typename Real>
ForwardOutput<Real> forward_full(const FeatureSequence& features, const ModelParams<Real>& params,
                                 const ModelConfig& cfg, bool train_mode, Rng* rng,
                                 ForwardTrace<Real>* trace) {
  cfg.validate();
  require(features.cols() == cfg.feature_dim, ErrorKind::Shape,
          "features " + features.shape_str() + " do not match feature_dim " +
              std::to_string(cfg.feature_dim));
  require(params.layers.size() == cfg.n_layers, ErrorKind::Shape,
          "parameters have " + std::to_string(params.layers.size()) + " layers, config " +
              std::to_string(cfg.n_layers));
  require(params.lstm.has_value() == cfg.lstm_in_phrase_branch, ErrorKind::Shape,
          "phrase-branch LSTM presence does not match config");
  const std::size_t frames = features.rows();
  const bool drop = train_mode && cfg.dropout > 0.0 && rng != nullptr;

  std::optional<AttentionMask> mask;
  if (cfg.streaming() && frames > 0) mask = build_mask(frames, cfg.block_spec());

  if (trace) {
    trace->features = features;
    trace->layers.assign(cfg.n_layers, {});
  }

  Matrix<Real> h = pos_encode(dense(features.cast<Real>(), params.input), 0);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const auto& lp = params.layers[l];
    EncoderLayerTrace<Real>* lt = trace ? &trace->layers[l] : nullptr;
    if (lt) lt->input = h;
    Matrix<Real> attn = attend_full(layer_norm(h, lp.norm_attn), lp.attn,
                                    mask ? &*mask : nullptr, lt ? &lt->attn : nullptr);
    if (drop) {
      Matrix<Real> s = dropout_scale<Real>(attn.rows(), attn.cols(), cfg.dropout, *rng);
      multiply_inplace(attn, s);
      if (lt) lt->attn_drop = std::move(s);
    }
    add_inplace(h, attn);
    if (lt) lt->mid = h;
    Matrix<Real> ff = feed_forward(layer_norm(h, lp.norm_ffn), lp.ffn, lt ? &lt->ffn : nullptr);
    if (drop) {
      Matrix<Real> s = dropout_scale<Real>(ff.rows(), ff.cols(), cfg.dropout, *rng);
      multiply_inplace(ff, s);
      if (lt) lt->ffn_drop = std::move(s);
    }
    add_inplace(h, ff);
  }

  ForwardOutput<Real> out;
  out.embeddings = layer_norm(h, params.final_norm);
  Matrix<Real> phon_logits = dense(out.embeddings, params.phonetic);
  out.phonetic_log_probs = row_log_softmax(phon_logits);

  Matrix<Real> phrase_in;
  if (params.lstm) {
    LstmTrace<Real> lt;
    phrase_in = lstm_forward(out.embeddings, LstmState<Real>::zeros(cfg.lstm_hidden),
                             *params.lstm, trace ? &lt : nullptr)
                    .hidden;
    if (trace) trace->lstm = std::move(lt);
  } else {
    phrase_in = out.embeddings;
  }
  out.phrase_logits = dense(phrase_in, params.phrase);

  if (trace) {
    trace->encoder_out = std::move(h);
    trace->phrase_input = std::move(phrase_in);
    trace->phonetic_logits = std::move(phon_logits);
  }
  return out;
}

template <typename Real>
std::vector<double> phrase_positive_probs(const Matrix<Real>& phrase_logits) {
  std::vector<double> out(phrase_logits.rows());
  for (std::size_t t = 0; t < phrase_logits.rows(); ++t) {
    // softmax column 1 of two = sigmoid of the logit difference
    const double d = static_cast<double>(phrase_logits(t, 1)) - phrase_logits(t, 0);
    out[t] = 1.0 / (1.0 + std::exp(-d));
  }
  return out;
}

double phrase_utterance_score(PhraseLoss mode, const std::vector<double>& positive_probs) {
  if (positive_probs.empty()) return 0.0;
  if (mode == PhraseLoss::CtcSeq)
    return *std::max_element(positive_probs.begin(), positive_probs.end());
  const std::size_t n = std::min(kScoreWindow, positive_probs.size());
  double sum = 0;
  for (std::size_t i = positive_probs.size() - n; i < positive_probs.size(); ++i)
    sum += positive_probs[i];
  return sum / static_cast<double>(n);
}

template <typename Real>
bool MtlLoss<Real>::finite() const {
  return std::isfinite(total);
}

namespace {

// Chains d loss / d log_softmax(z) back to d loss / d z.
template <typename Real>
Matrix<Real> log_softmax_backward(const Matrix<Real>& log_probs, const Matrix<Real>& d_log_probs) {
  Matrix<Real> dz(log_probs.rows(), log_probs.cols());
  for (std::size_t t = 0; t < log_probs.rows(); ++t) {
    Real sum = 0;
    for (std::size_t c = 0; c < log_probs.cols(); ++c) sum += d_log_probs(t, c);
    for (std::size_t c = 0; c < log_probs.cols(); ++c)
      dz(t, c) = d_log_probs(t, c) - std::exp(log_probs(t, c)) * sum;
  }
  return dz;
}

}  // namespace

template <typename Real>
MtlLoss<Real> mtl_loss(const ForwardOutput<Real>& out, const CtcTarget& ctc_target,
                       int phrase_label, const ModelConfig& cfg) {
  require(phrase_label == 0 || phrase_label == 1, ErrorKind::Usage,
          "phrase label must be 0 or 1");
  const std::size_t frames = out.phonetic_log_probs.rows();
  require(out.phrase_logits.rows() == frames && frames >= 1, ErrorKind::Shape,
          "forward output heads disagree on frame count or are empty");
  MtlLoss<Real> res;
  res.d_phonetic_logits = Matrix<Real>(frames, out.phonetic_log_probs.cols());
  res.d_phrase_logits = Matrix<Real>(frames, 2);

  if (cfg.lambda_ctc > 0) {
    LossResult<Real> ctc = ctc_loss(out.phonetic_log_probs, ctc_target);
    res.ctc = ctc.loss;
    if (ctc.finite()) {
      scale_inplace(ctc.grad, static_cast<Real>(cfg.lambda_ctc));
      res.d_phonetic_logits = log_softmax_backward(out.phonetic_log_probs, ctc.grad);
    }
  }

  if (cfg.lambda_phrase > 0) {
    if (cfg.phrase_loss == PhraseLoss::FrameCe) {
      LossResult<Real> ce = frame_ce_loss(out.phrase_logits, FrameCeTarget{phrase_label});
      res.phrase = ce.loss;
      scale_inplace(ce.grad, static_cast<Real>(cfg.lambda_phrase));
      res.d_phrase_logits = std::move(ce.grad);
    } else {
      // Column 1 (trigger) becomes CTC label 0, column 0 acts as blank.
      const Matrix<Real> lp = row_log_softmax(out.phrase_logits);
      Matrix<Real> swapped(frames, 2);
      for (std::size_t t = 0; t < frames; ++t) {
        swapped(t, 0) = lp(t, 1);
        swapped(t, 1) = lp(t, 0);
      }
      CtcTarget target;
      if (phrase_label == 1) target.labels = {0};
      LossResult<Real> ctc = ctc_loss(swapped, target);
      res.phrase = ctc.loss;
      if (ctc.finite()) {
        Matrix<Real> d_lp(frames, 2);
        for (std::size_t t = 0; t < frames; ++t) {
          d_lp(t, 1) = ctc.grad(t, 0) * static_cast<Real>(cfg.lambda_phrase);
          d_lp(t, 0) = ctc.grad(t, 1) * static_cast<Real>(cfg.lambda_phrase);
        }
        res.d_phrase_logits = log_softmax_backward(lp, d_lp);
      }
    }
  }

  res.total = static_cast<Real>(cfg.lambda_ctc) * res.ctc +
              static_cast<Real>(cfg.lambda_phrase) * res.phrase;
  if (!std::isfinite(res.total)) {
    res.d_phonetic_logits = Matrix<Real>(frames, out.phonetic_log_probs.cols());
    res.d_phrase_logits = Matrix<Real>(frames, 2);
  }
  return res;
}

template <typename Real>
Model<Real> Model<Real>::init(ModelConfig cfg, std::uint64_t seed) {
  cfg.precision = precision_of<Real>();
  cfg.validate();
  return Model{cfg, ModelParams<Real>::init(cfg, seed)};
}

template <typename Real>
std::string checkpoint_bytes(const Model<Real>& model) {
  ModelConfig cfg = model.config;
  cfg.precision = precision_of<Real>();
  model.params.check_against(cfg);
  ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, sizeof(kCheckpointMagic) - 1));
  w.scalar<std::uint16_t>(kCheckpointVersion);
  const std::string text = cfg.to_text();
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.bytes(text);
  std::uint32_t count = 0;
  model.params.for_each([&](const std::string&, const Matrix<Real>&) { ++count; });
  w.scalar<std::uint32_t>(count);
  model.params.for_each([&](const std::string& name, const Matrix<Real>& m) {
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.scalar<std::uint32_t>(2);
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    w.scalar<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    for (Real v : m.values()) w.scalar<Real>(v);
  });
  return w.buffer();
}

namespace {

struct RawCheckpoint {
  ModelConfig config;
  struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;
  };
  std::map<std::string, Tensor> tensors;
};

ModelConfig read_checkpoint_header(ByteReader& r) {
  const std::string_view magic = r.bytes(sizeof(kCheckpointMagic) - 1);
  require(magic == std::string_view(kCheckpointMagic, sizeof(kCheckpointMagic) - 1),
          ErrorKind::Format, "checkpoint: bad magic");
  const auto version = r.scalar<std::uint16_t>();
  require(version == kCheckpointVersion, ErrorKind::Format,
          "checkpoint: unsupported version " + std::to_string(version));
  const auto len = r.scalar<std::uint32_t>();
  const std::string text(r.bytes(len));
  try {
    return ModelConfig::from_text(text);
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("checkpoint: invalid config block: ") + e.what());
  }
}

RawCheckpoint parse_checkpoint(const std::string& bytes) {
  ByteReader r(bytes, "checkpoint");
  RawCheckpoint raw;
  raw.config = read_checkpoint_header(r);
  const bool f32 = raw.config.precision == Precision::F32;
  const auto count = r.scalar<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.scalar<std::uint32_t>();
    std::string name(r.bytes(name_len));
    const auto rank = r.scalar<std::uint32_t>();
    require(rank <= 8, ErrorKind::Format,
            "checkpoint: tensor '" + name + "' has implausible rank " + std::to_string(rank));
    RawCheckpoint::Tensor t;
    std::uint64_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.scalar<std::uint32_t>());
      n *= t.dims.back();
    }
    const std::uint64_t width = f32 ? 4 : 8;
    require(n * width <= r.remaining(), ErrorKind::Format,
            "checkpoint: tensor '" + name + "' declares " + std::to_string(n) +
                " values but the file is truncated");
    t.values.resize(n);
    for (auto& v : t.values) v = f32 ? r.scalar<float>() : r.scalar<double>();
    require(!raw.tensors.contains(name), ErrorKind::Format,
            "checkpoint: duplicate tensor '" + name + "'");
    raw.tensors.emplace(std::move(name), std::move(t));
  }
  require(r.remaining() == 0, ErrorKind::Format,
          "checkpoint: " + std::to_string(r.remaining()) + " trailing bytes");
  return raw;
}

}  // namespace

template <typename Real>
Model<Real> model_from_checkpoint_bytes(const std::string& bytes) {
  RawCheckpoint raw = parse_checkpoint(bytes);
  Model<Real> model;
  model.config = raw.config;
  model.config.precision = precision_of<Real>();
  model.params = ModelParams<Real>::zeros(model.config);
  std::size_t used = 0;
  model.params.for_each([&](const std::string& name, Matrix<Real>& m) {
    const auto it = raw.tensors.find(name);
    require(it != raw.tensors.end(), ErrorKind::Format,
            "checkpoint: missing tensor '" + name + "'");
    const auto& t = it->second;
    require(t.dims.size() == 2 && t.dims[0] == m.rows() && t.dims[1] == m.cols(),
            ErrorKind::Format,
            "checkpoint: tensor '" + name + "' shape does not match config " + m.shape_str());
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(t.values[i]);
    require(all_finite(m), ErrorKind::Format, "checkpoint: tensor '" + name + "' is not finite");
    ++used;
  });
  require(used == raw.tensors.size(), ErrorKind::Format,
          "checkpoint: contains tensors the config does not define");
  return model;
}

template <typename Real>
void save_checkpoint(const Model<Real>& model, const std::string& path) {
  write_text_file(path, checkpoint_bytes(model));
}

template <typename Real>
Model<Real> load_checkpoint(const std::string& path) {
  return model_from_checkpoint_bytes<Real>(read_text_file(path));
}

Precision checkpoint_precision(const std::string& path) {
  const std::string bytes = read_text_file(path);
  ByteReader r(bytes, "checkpoint");
  return read_checkpoint_header(r).precision;
}

#define SKWS_INSTANTIATE(Real)                                                                 \
  template struct ModelParams<Real>;                                                           \
  template ForwardOutput<Real> forward_full(const FeatureSequence&, const ModelParams<Real>&,  \
                                            const ModelConfig&, bool, Rng*,                    \
                                            ForwardTrace<Real>*);                              \
  template std::vector<double> phrase_positive_probs(const Matrix<Real>&);                     \
  template struct MtlLoss<Real>;                                                               \
  template MtlLoss<Real> mtl_loss(const ForwardOutput<Real>&, const CtcTarget&, int,           \
                                  const ModelConfig&);                                         \
  template struct Model<Real>;                                                                 \
  template std::string checkpoint_bytes(const Model<Real>&);                                   \
  template Model<Real> model_from_checkpoint_bytes(const std::string&);                        \
  template void save_checkpoint(const Model<Real>&, const std::string&);                       \
  template Model<Real> load_checkpoint(const std::string&);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
