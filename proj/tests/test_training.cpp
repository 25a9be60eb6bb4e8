// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "training.hpp"

using namespace skws;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.feature_dim = 5;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 2;
  c.ffn_dim = 12;
  c.vocab_size = 4;
  c.lstm_hidden = 6;
  c.block_shift = 3;
  c.precision = Precision::F64;
  return c;
}

ModelConfig corpus_config() {
  ModelConfig c = tiny_config();
  c.feature_dim = 16;
  c.vocab_size = 8;
  return c;
}

CorpusSpec tiny_corpus() {
  CorpusSpec s;
  s.n_true = 12;
  s.n_confusable = 8;
  s.n_random = 4;
  return s;
}

std::vector<double> flatten(const ModelParams<double>& p) {
  std::vector<double> out;
  p.for_each([&](const std::string&, const Matrix<double>& m) {
    out.insert(out.end(), m.values().begin(), m.values().end());
  });
  return out;
}

}  // namespace

TEST_CASE("gradcheck passes on every tensor of small models") {
  for (auto loss : {PhraseLoss::FrameCe, PhraseLoss::CtcSeq})
    for (bool lstm : {false, true}) {
      ModelConfig c = tiny_config();
      c.phrase_loss = loss;
      c.lstm_in_phrase_branch = lstm;
      const auto rep = gradcheck(c, 3);
      CHECK(rep.tensors.size() == (lstm ? 35u : 32u));
      for (const auto& t : rep.tensors) {
        INFO(t.name << " " << t.max_rel_error);
        CHECK(t.passed);
        CHECK(t.max_rel_error < 1e-4);
      }
      CHECK(rep.all_passed());
    }
}

TEST_CASE("gradcheck floor scales with the loss") {
  CHECK(gradcheck_floor(1.0, 1e-4) ==
        doctest::Approx(kGradcheckRoundoffSlack * 2.220446049250313e-16 / (kGradcheckStep * 1e-4)));
  CHECK(gradcheck_floor(100.0, 1e-4) == doctest::Approx(100 * gradcheck_floor(1.0, 1e-4)));
  CHECK(gradcheck_floor(0.01, 1e-4) == gradcheck_floor(1.0, 1e-4));
}

TEST_CASE("dropout gradients under a fixed mask") {
  ModelConfig c = tiny_config();
  c.dropout = 0.3;
  auto params = ModelParams<double>::init(c, 2);
  Rng r(9);
  FeatureSequence x(9, c.feature_dim);
  fill_normal(x, r, 1.0);
  const CtcTarget target{{1, 2}};
  Rng mask(77);
  const auto res = backward(x, target, 1, params, c, true, &mask);
  auto loss = [&] {
    Rng m(77);
    const auto out = forward_full(x, params, c, true, &m);
    return static_cast<double>(mtl_loss(out, target, 1, c).total);
  };
  std::vector<Matrix<double>*> grads;
  auto g = res.grads;
  g.for_each([&](const std::string&, Matrix<double>& m) { grads.push_back(&m); });
  std::size_t i = 0;
  params.for_each([&](const std::string& name, Matrix<double>& m) {
    const auto num = oracle::numeric_grad(m, loss);
    INFO(name);
    CHECK(oracle::max_rel_error(*grads[i++], num, 1e-5) < 1e-4);
  });
  Rng other(78);
  const double l2 = mtl_loss(forward_full(x, params, c, true, &other), target, 1, c).total;
  CHECK(l2 != doctest::Approx(res.loss.total));
}

TEST_CASE("shared backbone receives gradient from both heads") {
  ModelConfig c = tiny_config();
  const auto params = ModelParams<double>::init(c, 4);
  Rng r(1);
  FeatureSequence x(10, c.feature_dim);
  fill_normal(x, r, 1.0);
  const CtcTarget target{{0, 3, 1}};
  auto grads_for = [&](double lc, double lp) {
    ModelConfig k = c;
    k.lambda_ctc = lc;
    k.lambda_phrase = lp;
    return backward(x, target, 1, params, k).grads;
  };
  const auto both = grads_for(1, 1), ctc_only = grads_for(1, 0), phrase_only = grads_for(0, 1);
  // every encoder tensor: combined = ctc part + phrase part
  CHECK(oracle::max_rel_error(both.input.weight, [&] {
          auto s = ctc_only.input.weight;
          for (std::size_t i = 0; i < s.size(); ++i) s.data()[i] += phrase_only.input.weight.data()[i];
          return s;
        }()) < 1e-10);
  CHECK(oracle::max_rel_error(both.input.weight, ctc_only.input.weight) > 1e-3);
  double phon = 0, phr = 0;
  for (double v : phrase_only.phonetic.weight.values()) phon = std::max(phon, std::abs(v));
  for (double v : ctc_only.phrase.weight.values()) phr = std::max(phr, std::abs(v));
  CHECK(phon == 0.0);
  CHECK(phr == 0.0);
}

TEST_CASE("infeasible target yields infinite loss and zero gradients") {
  ModelConfig c = tiny_config();
  const auto params = ModelParams<double>::init(c, 4);
  FeatureSequence x(2, c.feature_dim);
  const auto res = backward(x, CtcTarget{{1, 1}}, 0, params, c);
  CHECK(std::isinf(static_cast<double>(res.loss.ctc)));
  CHECK(global_norm(res.grads) == 0.0);
}

TEST_CASE("adam matches a scalar reference") {
  ModelConfig c = tiny_config();
  auto params = ModelParams<double>::init(c, 1);
  const auto start = flatten(params);
  AdamOptions o{0.01, 0.8, 0.9, 1e-6};
  Adam<double> adam(c, o);
  Rng r(3);
  std::vector<std::vector<double>> gs;
  for (int step = 0; step < 3; ++step) {
    auto g = ModelParams<double>::zeros(c);
    g.for_each([&](const std::string&, Matrix<double>& m) { fill_normal(m, r, 1.0); });
    gs.push_back(flatten(g));
    adam.step(params, g);
  }
  CHECK(adam.steps() == 3);
  const auto got = flatten(params);
  double worst = 0;
  for (std::size_t i = 0; i < start.size(); ++i) {
    double p = start[i], m = 0, v = 0;
    for (int t = 1; t <= 3; ++t) {
      const double g = gs[t - 1][i];
      m = o.beta1 * m + (1 - o.beta1) * g;
      v = o.beta2 * v + (1 - o.beta2) * g * g;
      const double mh = m / (1 - std::pow(o.beta1, t)), vh = v / (1 - std::pow(o.beta2, t));
      p -= o.lr * mh / (std::sqrt(vh) + o.eps);
    }
    worst = std::max(worst, std::abs(p - got[i]));
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("global norm clipping") {
  ModelConfig c = tiny_config();
  auto g = ModelParams<double>::zeros(c);
  g.input.weight(0, 0) = 3;
  g.phrase.bias(0, 1) = 4;
  CHECK(global_norm(g) == doctest::Approx(5));
  CHECK(clip_global_norm(g, 10) == doctest::Approx(5));
  CHECK(g.input.weight(0, 0) == 3);
  CHECK(clip_global_norm(g, 1) == doctest::Approx(5));
  CHECK(global_norm(g) == doctest::Approx(1));
  CHECK(g.input.weight(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("train options map round trip") {
  TrainOptions o;
  o.epochs = 3;
  o.adam.lr = 0.5;
  o.clip_norm = 2;
  const auto back = TrainOptions::from_map(o.to_map());
  CHECK(back.epochs == 3);
  CHECK(back.adam.lr == 0.5);
  CHECK(back.clip_norm == 2);
  CHECK_THROWS_AS(TrainOptions::from_map({{"epochs", "x"}}), Error);
  CHECK_THROWS_AS(TrainOptions::from_map({{"batch_size", "0"}}), Error);
}

TEST_CASE("training is deterministic and reduces the loss") {
  const auto corpus = generate_corpus(tiny_corpus());
  TrainOptions o;
  o.epochs = 4;
  o.batch_size = 4;
  o.adam.lr = 3e-3;
  auto run = [&] {
    auto m = Model<double>::init(corpus_config(), 5);
    std::vector<std::string> rows;
    train<double>(m, corpus.train, corpus.dev, o, [&](const EpochMetrics& e) {
      auto copy = e;
      copy.wall_seconds = 0;
      rows.push_back(metrics_csv_row(copy));
    });
    return std::make_pair(rows, checkpoint_bytes(m));
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  REQUIRE(a.first.size() == 4);

  auto m = Model<double>::init(corpus_config(), 5);
  const auto hist = train<double>(m, corpus.train, corpus.dev, o);
  CHECK(hist.back().ctc_loss < hist.front().ctc_loss);
  CHECK(hist.back().phrase_loss < hist.front().phrase_loss);
  for (std::size_t i = 0; i < hist.size(); ++i) CHECK(hist[i].epoch == i + 1);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto corpus = generate_corpus(tiny_corpus());
  auto m = Model<double>::init(corpus_config(), 5);
  const auto before = checkpoint_bytes(m);
  TrainOptions o;
  o.epochs = 1;
  o.adam.lr = 0;
  train<double>(m, corpus.train, {}, o);
  CHECK(checkpoint_bytes(m) == before);
}

TEST_CASE("training input validation") {
  auto m = Model<double>::init(corpus_config(), 5);
  TrainOptions o;
  o.epochs = 1;
  CHECK_THROWS_AS(train<double>(m, {}, {}, o), Error);
  const auto corpus = generate_corpus(tiny_corpus());
  auto mismatched = Model<double>::init(tiny_config(), 1);
  CHECK_THROWS_AS(train<double>(mismatched, corpus.train, {}, o), Error);
}

TEST_CASE("metrics csv") {
  EpochMetrics e{2, 1.5, 0.25, 0.75, 1.25, 0};
  CHECK(metrics_csv_header() == "epoch,ctc_loss,phrase_loss,phrase_acc,wall_seconds");
  CHECK(metrics_csv_row(e) == "2,1.5,0.25,0.750000,1.250");
}
