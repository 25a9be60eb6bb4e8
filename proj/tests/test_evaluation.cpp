// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "evaluation.hpp"

using namespace skws;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.ffn_dim = 12;
  c.lstm_hidden = 6;
  c.block_shift = 4;
  c.precision = Precision::F64;
  return c;
}

CorpusSpec small_corpus() {
  CorpusSpec s;
  s.n_true = 10;
  s.n_confusable = 10;
  s.n_random = 5;
  return s;
}

}  // namespace

TEST_CASE("det sweep by hand") {
  const auto det = det_sweep({0.9, 0.6, 0.4}, {0.5, 0.2});
  REQUIRE(det.size() == 6);
  const double th[] = {0.2, 0.4, 0.5, 0.6, 0.9};
  const double ftr[] = {1, 0.5, 0.5, 0, 0, 0};
  const double frr[] = {0, 0, 1.0 / 3, 1.0 / 3, 2.0 / 3, 1};
  for (std::size_t i = 0; i < 6; ++i) {
    if (i < 5) CHECK(det[i].threshold == th[i]);
    CHECK(det[i].false_trigger_rate == doctest::Approx(ftr[i]));
    CHECK(det[i].frr == doctest::Approx(frr[i]));
  }
  CHECK(det[5].threshold > 0.9);
  CHECK(ftr_at_frr(det, 0.01) == 0.5);
  CHECK(ftr_at_frr(det, 0.34) == 0.0);
  CHECK(det_csv(det).rfind("threshold,false_trigger_rate,frr\n0.20000000000000001,1,0\n", 0) == 0);
}

TEST_CASE("det endpoints and monotonicity on random scores") {
  Rng r(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0, n = 1 + r.below(30); i < n; ++i) pos.push_back(std::round(r.uniform(0, 10)) / 10);
    for (std::size_t i = 0, n = 1 + r.below(30); i < n; ++i) neg.push_back(std::round(r.uniform(0, 10)) / 10);
    const auto det = det_sweep(pos, neg);
    CHECK(det.front().frr == 0.0);
    CHECK(det.front().false_trigger_rate == 1.0);
    CHECK(det.back().frr == 1.0);
    CHECK(det.back().false_trigger_rate == 0.0);
    for (std::size_t i = 1; i < det.size(); ++i) {
      CHECK(det[i].threshold > det[i - 1].threshold);
      CHECK(det[i].frr >= det[i - 1].frr);
      CHECK(det[i].false_trigger_rate <= det[i - 1].false_trigger_rate);
    }
  }
  CHECK_THROWS_AS(det_sweep({}, {0.1}), Error);
  CHECK_THROWS_AS(det_sweep({0.1}, {}), Error);
}

TEST_CASE("median and percentile") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(percentile({0, 10}, 0.95) == doctest::Approx(9.5));
  CHECK(percentile({7}, 0.95) == 7);
  CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("contains_sequence") {
  CHECK(contains_sequence({5, 0, 1, 2, 3, 4}, {0, 1, 2, 3}));
  CHECK_FALSE(contains_sequence({0, 1, 5, 2, 3}, {0, 1, 2, 3}));
  CHECK_FALSE(contains_sequence({0, 1}, {0, 1, 2}));
  CHECK(contains_sequence({}, {}));
}

TEST_CASE("post-trigger score only sees the prefix") {
  const auto corpus = generate_corpus(small_corpus());
  const auto model = Model<double>::init(small_config(), 3);
  Utterance u = corpus.test.front();
  const std::size_t k = 6;
  const double s = post_trigger_score(model, u, k);
  for (std::size_t t = u.trigger_end_frame + k; t < u.features.rows(); ++t)
    for (std::size_t d = 0; d < u.features.cols(); ++d) u.features(t, d) = 100.0f;
  CHECK(post_trigger_score(model, u, k) == s);

  std::vector<double> probs;
  for (const auto& e : stream_all(model, u.features.slice_rows(0, u.trigger_end_frame + k)))
    probs.push_back(e.positive_prob);
  CHECK(s == phrase_utterance_score(model.config.phrase_loss, probs));

  const double whole = post_trigger_score(model, u, 10000);
  const auto out = forward_full(u.features, model.params, model.config);
  CHECK(whole == doctest::Approx(phrase_utterance_score(model.config.phrase_loss,
                                                        phrase_positive_probs(out.phrase_logits)))
                     .epsilon(1e-12));
}

TEST_CASE("evaluate counts classes") {
  const auto corpus = generate_corpus(small_corpus());
  const auto model = Model<double>::init(small_config(), 3);
  const auto res = evaluate(model, corpus.test, corpus.spec.trigger, 12);
  CHECK(res.summary.positives == 2);
  CHECK(res.summary.negatives == 2);
  CHECK(res.summary.post_trigger_frames == 12);
  CHECK(res.summary.ftr_at_1pct_frr == ftr_at_frr(res.det, 0.01));
  const auto text = eval_summary_text(res.summary);
  CHECK(text.find("positives=2\n") != std::string::npos);
  CHECK(text.find("post_trigger_frames=12\n") != std::string::npos);

  ModelConfig vanilla = small_config();
  vanilla.block_shift = 0;
  const auto v = evaluate(Model<double>::init(vanilla, 3), corpus.test, corpus.spec.trigger, 12);
  CHECK(v.summary.positives == 2);
}

TEST_CASE("bench rows") {
  const auto model = Model<float>::init(small_config(), 3);
  const auto rows = bench(model, {16, 40}, 2, 1);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].mode == "full");
  CHECK(rows[1].mode == "streaming");
  CHECK(rows[3].length == 40);
  CHECK(rows[1].state_bytes == rows[3].state_bytes);
  CHECK(rows[1].state_bytes == session_state_bytes(model.config, 4));
  CHECK(rows[1].block_median > 0);
  CHECK(rows[1].block_p95 >= rows[1].block_median);
  CHECK(bench_csv_row(rows[0]).rfind("full,16,", 0) == 0);
  CHECK(bench_csv_header() == "mode,length,total_seconds,block_median,block_mean,block_p95,state_bytes");

  CHECK_THROWS_AS(bench(model, {16}, 1, 1), Error);
  CHECK_THROWS_AS(bench(model, {40, 16}, 1, 1), Error);
  CHECK_THROWS_AS(bench(model, {16, 16}, 1, 1), Error);
  CHECK_THROWS_AS(bench(model, {16, 40}, 0, 1), Error);
}

TEST_CASE("mask report") {
  const auto rep = mask_report(2, 6, 16, 2, 2, 1);
  CHECK(rep.grid ==
        "####..\n"
        "####..\n"
        "####..\n"
        "####..\n"
        "..####\n"
        "..####\n");
  CHECK(rep.max_abs_diff == 0.0);
  CHECK_THROWS_AS(mask_report(0, 6, 16, 2, 2, 1), Error);
  CHECK_THROWS_AS(mask_report(2, 0, 16, 2, 2, 1), Error);
}
