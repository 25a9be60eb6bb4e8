// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Synthetic trigger-phrase corpus. Each token of a small alphabet is a fixed
// unit-norm prototype vector; an utterance renders its tokens as runs of
// noisy copies of those prototypes. Three kinds of utterance are produced:
//
//   true       trigger tokens, then a continuation drawn mostly from the
//              "true" continuation set
//   confusable the trigger prefix up to the divergence point, then other
//              tokens, then a continuation drawn mostly from the other set
//   random     random tokens that never contain the trigger
//
// With the divergence point at the full trigger length, true and confusable
// utterances only differ after trigger_end_frame.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "model.hpp"

namespace skws {

struct TokenAlphabet {
  std::vector<std::vector<double>> prototypes;  // V x F, unit norm

  std::size_t size() const noexcept { return prototypes.size(); }
  double max_pairwise_cosine() const;

  // Rejection-samples prototypes until every pair has cosine < max_cosine.
  static TokenAlphabet generate(std::size_t vocab, std::size_t feature_dim, double max_cosine,
                                Rng& rng);
};

enum class UtteranceKind { True, Confusable, Random };

std::string to_string(UtteranceKind k);
// Kind is carried by the id prefix ("true-", "conf-", "rand-").
UtteranceKind kind_from_id(const std::string& id);

struct Utterance {
  std::string id;
  FeatureSequence features;
  std::vector<std::int32_t> tokens;
  int phrase_label = 0;  // 1 = true trigger
  std::size_t trigger_end_frame = 0;  // first post-trigger frame (0-based)

  UtteranceKind kind() const { return kind_from_id(id); }
};

struct CorpusSpec {
  std::size_t n_true = 600;
  std::size_t n_confusable = 400;
  std::size_t n_random = 200;
  std::vector<std::int32_t> trigger = {0, 1, 2, 3};
  std::size_t divergence_point = 4;  // trigger tokens shared by confusables
  std::size_t continuation_tokens = 4;
  std::vector<std::int32_t> true_continuation = {4, 5};
  std::vector<std::int32_t> confusable_continuation = {6, 7};
  double continuation_purity = 0.9;  // P(continuation token comes from own class set)
  std::size_t random_tokens = 8;
  std::size_t vocab_size = 8;
  std::size_t feature_dim = 16;
  std::size_t frames_per_token = 6;
  std::size_t max_jitter = 2;  // leading noise-only frames, uniform in [0, max_jitter]
  double sigma = 0.3;
  double max_prototype_cosine = 0.8;
  double train_fraction = 0.6;
  double dev_fraction = 0.2;
  std::uint64_t seed = 7;

  void validate() const;
  ConfigMap to_map() const;
  static CorpusSpec from_map(const ConfigMap& m);
};

struct Corpus {
  CorpusSpec spec;
  TokenAlphabet alphabet;
  std::vector<Utterance> train, dev, test;

  const std::vector<Utterance>& split(const std::string& name) const;
};

Corpus generate_corpus(const CorpusSpec& spec);

// Feature file: "SKWSFEAT" | u16 version=1 | u32 T | u32 F | T*F float32,
// all little-endian, row-major.
inline constexpr char kFeatureMagic[] = "SKWSFEAT";
inline constexpr std::uint16_t kFeatureVersion = 1;

std::string feature_bytes(const FeatureSequence& f);
FeatureSequence features_from_bytes(const std::string& bytes, const std::string& context);
void write_features(const std::string& path, const FeatureSequence& f);
FeatureSequence read_features(const std::string& path);

// Label file lines: utt_id TAB phrase_label TAB trigger_end_frame TAB tokens
// (space separated, possibly empty).
struct LabelRecord {
  std::string id;
  int phrase_label = 0;
  std::size_t trigger_end_frame = 0;
  std::vector<std::int32_t> tokens;

  bool operator==(const LabelRecord&) const = default;
};

std::string format_labels(const std::vector<LabelRecord>& records);
std::vector<LabelRecord> parse_labels(const std::string& text, std::size_t vocab_size);
void write_labels(const std::string& path, const std::vector<LabelRecord>& records);
std::vector<LabelRecord> read_labels(const std::string& path, std::size_t vocab_size);

// Directory layout: corpus.txt (spec), and per split <split>/labels.tsv plus
// <split>/<utt_id>.feat.
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus read_corpus(const std::string& dir);

}  // namespace skws
