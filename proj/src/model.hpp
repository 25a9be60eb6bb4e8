// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Encoder backbone with two heads:
//   input dense -> positional code -> L x [LN -> SA -> +res -> LN -> FFN -> +res]
//   -> final LN = embeddings
//   phonetic head: dense -> log-softmax over V tokens + blank (CTC)
//   phrase head:   [uniLSTM] -> dense -> 2 logits (column 1 = true trigger)

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attention.hpp"
#include "config.hpp"
#include "layers.hpp"
#include "losses.hpp"

namespace skws {

using FeatureSequence = Matrix<float>;

enum class PhraseLoss { FrameCe, CtcSeq };
enum class Precision { F32, F64 };

std::string to_string(PhraseLoss v);
std::string to_string(Precision v);
Precision parse_precision(const std::string& s);

struct ModelConfig {
  std::size_t feature_dim = 16;
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t ffn_dim = 64;
  std::size_t vocab_size = 8;
  std::size_t lstm_hidden = 32;
  std::size_t block_shift = 8;  // 0 = full-context attention
  PhraseLoss phrase_loss = PhraseLoss::FrameCe;
  bool lstm_in_phrase_branch = true;
  double lambda_ctc = 1.0;
  double lambda_phrase = 1.0;
  double dropout = 0.0;
  Precision precision = Precision::F32;

  bool streaming() const noexcept { return block_shift > 0; }
  BlockSpec block_spec() const { return BlockSpec{block_shift}; }
  std::size_t phonetic_classes() const noexcept { return vocab_size + 1; }
  void validate() const;

  ConfigMap to_map() const;
  std::string to_text() const { return format_config_text(to_map()); }
  // Keys not belonging to the model are ignored; call model_config_keys() to
  // check for typos.
  static ModelConfig from_map(const ConfigMap& m);
  static ModelConfig from_text(const std::string& text) {
    return from_map(parse_config_text(text));
  }

  bool operator==(const ModelConfig&) const = default;
};

const std::vector<std::string>& model_config_keys();

template <typename Real>
struct EncoderLayerParams {
  LayerNormParams<Real> norm_attn;
  AttentionProjections<Real> attn;
  LayerNormParams<Real> norm_ffn;
  FeedForwardParams<Real> ffn;
};

// All learnable tensors. Gradients use the same type.
template <typename Real>
struct ModelParams {
  DenseParams<Real> input;
  std::vector<EncoderLayerParams<Real>> layers;
  LayerNormParams<Real> final_norm;
  DenseParams<Real> phonetic;
  std::optional<LstmParams<Real>> lstm;
  DenseParams<Real> phrase;

  static ModelParams zeros(const ModelConfig& cfg);
  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  // Visits every tensor with its canonical name, in a fixed order.
  void for_each(const std::function<void(const std::string&, Matrix<Real>&)>& fn);
  void for_each(const std::function<void(const std::string&, const Matrix<Real>&)>& fn) const;

  std::size_t parameter_count() const;
  void check_against(const ModelConfig& cfg) const;
};

template <typename Real>
struct ForwardOutput {
  Matrix<Real> embeddings;         // T x D
  Matrix<Real> phonetic_log_probs; // T x (V + 1)
  Matrix<Real> phrase_logits;      // T x 2
};

template <typename Real>
struct EncoderLayerTrace {
  Matrix<Real> input;
  AttentionTrace<Real> attn;
  Matrix<Real> attn_drop;  // dropout scale per entry; empty when inactive
  Matrix<Real> mid;
  FeedForwardTrace<Real> ffn;
  Matrix<Real> ffn_drop;
};

template <typename Real>
struct ForwardTrace {
  FeatureSequence features;
  std::vector<EncoderLayerTrace<Real>> layers;
  Matrix<Real> encoder_out;  // before final LN
  std::optional<LstmTrace<Real>> lstm;
  Matrix<Real> phrase_input;
  Matrix<Real> phonetic_logits;
};

// Single pass over the whole sequence. With block_shift > 0 every attention
// layer uses the streaming block mask. `rng` drives dropout in train mode.
template <typename Real>
ForwardOutput<Real> forward_full(const FeatureSequence& features, const ModelParams<Real>& params,
                                 const ModelConfig& cfg, bool train_mode = false,
                                 Rng* rng = nullptr, ForwardTrace<Real>* trace = nullptr);

template <typename Real>
std::vector<double> phrase_positive_probs(const Matrix<Real>& phrase_logits);

// Utterance-level phrase score from per-frame positive probabilities:
// frame CE mode averages the last 10 frames, phrase-CTC mode takes the peak.
double phrase_utterance_score(PhraseLoss mode, const std::vector<double>& positive_probs);

inline constexpr std::size_t kScoreWindow = 10;

template <typename Real>
struct MtlLoss {
  Real total = 0;
  Real ctc = 0;
  Real phrase = 0;
  Matrix<Real> d_phonetic_logits;  // d total / d pre-softmax phonetic logits
  Matrix<Real> d_phrase_logits;
  bool finite() const;
};

template <typename Real>
MtlLoss<Real> mtl_loss(const ForwardOutput<Real>& out, const CtcTarget& ctc_target,
                       int phrase_label, const ModelConfig& cfg);

template <typename Real>
struct Model {
  ModelConfig config;
  ModelParams<Real> params;

  static Model init(ModelConfig cfg, std::uint64_t seed);
};

template <typename Real>
constexpr Precision precision_of() {
  return sizeof(Real) == 4 ? Precision::F32 : Precision::F64;
}

// Binary checkpoint:
//   "SKWS-CKPT" | u16 version | u32 len + config text | u32 tensor count |
//   per tensor: u32 len + name | u32 rank | rank x u32 dims | values
// Values are little-endian, f32 or f64 as declared by the config's
// `precision` key. All integers are little-endian.
inline constexpr char kCheckpointMagic[] = "SKWS-CKPT";
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename Real>
std::string checkpoint_bytes(const Model<Real>& model);
template <typename Real>
Model<Real> model_from_checkpoint_bytes(const std::string& bytes);

template <typename Real>
void save_checkpoint(const Model<Real>& model, const std::string& path);
// Loads a checkpoint of either precision and converts to Real. The returned
// config's precision reflects Real.
template <typename Real>
Model<Real> load_checkpoint(const std::string& path);

// Precision declared in a checkpoint file without decoding its tensors.
Precision checkpoint_precision(const std::string& path);

}  // namespace skws
