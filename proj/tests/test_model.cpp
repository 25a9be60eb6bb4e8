// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "model.hpp"
#include "oracles.hpp"

using namespace skws;

namespace {

ModelConfig small(std::size_t shift = 3) {
  ModelConfig c;
  c.feature_dim = 5;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 2;
  c.ffn_dim = 12;
  c.vocab_size = 4;
  c.lstm_hidden = 6;
  c.block_shift = shift;
  c.precision = Precision::F64;
  return c;
}

FeatureSequence features(std::size_t t, std::size_t f, std::uint64_t seed) {
  Rng r(seed);
  FeatureSequence x(t, f);
  fill_normal(x, r, 1.0);
  return x;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Usage;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("skws_test_model_" + name)).string();
}

}  // namespace

TEST_CASE("config text round trip and validation") {
  ModelConfig c = small();
  c.phrase_loss = PhraseLoss::CtcSeq;
  c.lstm_in_phrase_branch = false;
  c.lambda_ctc = 0.25;
  c.dropout = 0.1;
  CHECK(ModelConfig::from_text(c.to_text()) == c);
  CHECK(c.to_text().find("phrase_loss=ctc_seq") != std::string::npos);

  ModelConfig bad = small();
  bad.n_heads = 3;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::Usage);
  CHECK(kind_of([] { ModelConfig::from_text("phrase_loss=focal\n"); }) == ErrorKind::Usage);
  CHECK(kind_of([] { ModelConfig::from_text("d_model=-3\n"); }) == ErrorKind::Usage);
  CHECK(kind_of([] { ModelConfig::from_text("no equals sign\n"); }) == ErrorKind::Format);
}

TEST_CASE("initialisation is deterministic") {
  const auto a = ModelParams<double>::init(small(), 5);
  const auto b = ModelParams<double>::init(small(), 5);
  const auto c = ModelParams<double>::init(small(), 6);
  std::vector<Matrix<double>> ta, tb, tc;
  a.for_each([&](const std::string&, const Matrix<double>& m) { ta.push_back(m); });
  b.for_each([&](const std::string&, const Matrix<double>& m) { tb.push_back(m); });
  c.for_each([&](const std::string&, const Matrix<double>& m) { tc.push_back(m); });
  CHECK(ta == tb);
  CHECK(ta != tc);
}

TEST_CASE("tensor names and counts") {
  std::vector<std::string> names;
  const auto p = ModelParams<double>::init(small(), 1);
  p.for_each([&](const std::string& n, const Matrix<double>&) { names.push_back(n); });
  CHECK(names.front() == "input.weight");
  CHECK(names.back() == "phrase.bias");
  CHECK(std::find(names.begin(), names.end(), "layer1.attn.wq") != names.end());
  CHECK(std::find(names.begin(), names.end(), "phrase.lstm.w_recurrent") != names.end());
  std::size_t total = 0;
  p.for_each([&](const std::string&, const Matrix<double>& m) { total += m.size(); });
  CHECK(p.parameter_count() == total);
}

TEST_CASE("forward shapes for all four ablation variants") {
  for (std::size_t shift : {0u, 3u})
    for (bool lstm : {true, false}) {
      ModelConfig c = small(shift);
      c.lstm_in_phrase_branch = lstm;
      c.phrase_loss = lstm ? PhraseLoss::FrameCe : PhraseLoss::CtcSeq;
      const auto m = Model<double>::init(c, 2);
      const auto out = forward_full(features(11, 5, 3), m.params, c);
      CHECK(out.embeddings.rows() == 11);
      CHECK(out.phonetic_log_probs.cols() == 5);
      CHECK(out.phrase_logits.cols() == 2);
      for (std::size_t t = 0; t < 11; ++t) {
        double s = 0;
        for (double v : out.phonetic_log_probs.row(t)) s += std::exp(v);
        CHECK(s == doctest::Approx(1.0));
      }
      const auto loss = mtl_loss(out, CtcTarget{{0, 1}}, 1, c);
      CHECK(loss.finite());
    }
}

TEST_CASE("a single block behaves like full context") {
  const auto streaming = Model<double>::init(small(6), 4);
  ModelConfig vanilla = small(0);
  for (std::size_t t : {1u, 7u, 12u}) {
    const auto x = features(t, 5, t);
    const auto a = forward_full(x, streaming.params, streaming.config);
    const auto b = forward_full(x, streaming.params, vanilla);
    CHECK(max_abs_diff(a.phrase_logits, b.phrase_logits) == 0.0);
    CHECK(max_abs_diff(a.phonetic_log_probs, b.phonetic_log_probs) == 0.0);
  }
  // beyond one block the mask matters
  const auto x = features(20, 5, 9);
  CHECK(max_abs_diff(forward_full(x, streaming.params, streaming.config).phrase_logits,
                     forward_full(x, streaming.params, vanilla).phrase_logits) > 0.0);
}

TEST_CASE("config and parameters must agree") {
  const auto m = Model<double>::init(small(), 1);
  ModelConfig other = small();
  other.lstm_in_phrase_branch = false;
  CHECK(kind_of([&] { forward_full(features(4, 5, 1), m.params, other); }) == ErrorKind::Shape);
  CHECK(kind_of([&] { forward_full(features(4, 6, 1), m.params, m.config); }) == ErrorKind::Shape);
}

TEST_CASE("multi-task weighting") {
  ModelConfig c = small();
  const auto m = Model<double>::init(c, 3);
  const auto out = forward_full(features(14, 5, 2), m.params, c);
  const CtcTarget tgt{{1, 2}};
  const auto both = mtl_loss(out, tgt, 1, c);
  CHECK(both.total == doctest::Approx(both.ctc + both.phrase));

  ModelConfig no_phrase = c;
  no_phrase.lambda_phrase = 0;
  const auto only_ctc = mtl_loss(out, tgt, 1, no_phrase);
  for (double g : only_ctc.d_phrase_logits.values()) CHECK(g == 0.0);
  CHECK(only_ctc.total == doctest::Approx(only_ctc.ctc));

  ModelConfig half = c;
  half.lambda_ctc = 0.5;
  const auto h = mtl_loss(out, tgt, 1, half);
  CHECK(h.total == doctest::Approx(0.5 * h.ctc + h.phrase));

  const auto infeasible = mtl_loss(out, CtcTarget{std::vector<std::int32_t>(20, 1)}, 1, c);
  CHECK_FALSE(infeasible.finite());
}

TEST_CASE("phrase CTC mode scores the trigger column") {
  ModelConfig c = small();
  c.phrase_loss = PhraseLoss::CtcSeq;
  Matrix<double> logits(6, 2);
  ForwardOutput<double> out{Matrix<double>(6, 8), row_log_softmax(Matrix<double>(6, 5)), logits};
  // uniform phrase posteriors: P(no trigger anywhere) = 0.5^6
  const auto neg = mtl_loss(out, CtcTarget{{0}}, 0, c);
  CHECK(neg.phrase == doctest::Approx(6 * std::log(2.0)));
  // exactly one run of trigger frames: sum over runs of 2^-6 each = 21 / 64
  const auto pos = mtl_loss(out, CtcTarget{{0}}, 1, c);
  CHECK(pos.phrase == doctest::Approx(-std::log(21.0 / 64.0)));
}

TEST_CASE("utterance scores") {
  std::vector<double> p(15, 0.1);
  for (std::size_t i = 10; i < 15; ++i) p[i] = 0.9;
  CHECK(phrase_utterance_score(PhraseLoss::FrameCe, p) == doctest::Approx(0.5));
  CHECK(phrase_utterance_score(PhraseLoss::CtcSeq, p) == doctest::Approx(0.9));
  CHECK(phrase_utterance_score(PhraseLoss::FrameCe, {0.2, 0.4}) == doctest::Approx(0.3));
  Matrix<double> logits(1, 2, std::vector<double>{0.0, std::log(3.0)});
  CHECK(phrase_positive_probs(logits)[0] == doctest::Approx(0.75));
}

TEST_CASE("checkpoint round trip is byte exact") {
  const auto m = Model<double>::init(small(), 7);
  const std::string bytes = checkpoint_bytes(m);
  CHECK(bytes.compare(0, 9, "SKWS-CKPT") == 0);
  const auto back = model_from_checkpoint_bytes<double>(bytes);
  CHECK(back.config == m.config);
  CHECK(checkpoint_bytes(back) == bytes);

  const auto path = tmp_path("rt.ckpt");
  save_checkpoint(m, path);
  CHECK(checkpoint_precision(path) == Precision::F64);
  CHECK(checkpoint_bytes(load_checkpoint<double>(path)) == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("32-bit checkpoints widen exactly") {
  ModelConfig c = small();
  c.precision = Precision::F32;
  const auto m = Model<float>::init(c, 8);
  const auto wide = model_from_checkpoint_bytes<double>(checkpoint_bytes(m));
  CHECK(wide.config.precision == Precision::F64);
  std::vector<double> a;
  std::vector<float> b;
  wide.params.for_each([&](const std::string&, const Matrix<double>& x) { a.insert(a.end(), x.values().begin(), x.values().end()); });
  m.params.for_each([&](const std::string&, const Matrix<float>& x) { b.insert(b.end(), x.values().begin(), x.values().end()); });
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(static_cast<float>(a[i]) == b[i]);
  CHECK(checkpoint_bytes(model_from_checkpoint_bytes<float>(checkpoint_bytes(m))) == checkpoint_bytes(m));
}

TEST_CASE("corrupted checkpoints fail with format errors") {
  const std::string good = checkpoint_bytes(Model<double>::init(small(), 9));
  auto load = [](std::string b) { return [b] { model_from_checkpoint_bytes<double>(b); }; };

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(kind_of(load(bad_magic)) == ErrorKind::Format);

  std::string bad_version = good;
  bad_version[9] = 9;
  CHECK(kind_of(load(bad_version)) == ErrorKind::Format);

  std::string bad_length = good;
  bad_length[14] = 0x7f;  // high byte of the config length
  CHECK(kind_of(load(bad_length)) == ErrorKind::Format);

  CHECK(kind_of(load(good.substr(0, good.size() - 3))) == ErrorKind::Format);
  CHECK(kind_of(load(good + "x")) == ErrorKind::Format);
  CHECK(kind_of(load("")) == ErrorKind::Format);

  std::string renamed = good;
  const auto at = renamed.find("input.weight");
  renamed[at] = 'j';
  CHECK(kind_of(load(renamed)) == ErrorKind::Format);

  std::string nan_value = good;
  const double nan = std::nan("");
  std::memcpy(&nan_value[nan_value.size() - 8], &nan, 8);
  CHECK(kind_of(load(nan_value)) == ErrorKind::Format);

  CHECK(kind_of([] { load_checkpoint<double>(tmp_path("does_not_exist")); }) == ErrorKind::Io);
}
