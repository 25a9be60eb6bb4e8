// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "layers.hpp"
#include "oracles.hpp"

using namespace skws;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One LSTM step written unit by unit from the gate equations.
void lstm_scalar(const std::vector<double>& x, std::vector<double>& h, std::vector<double>& c,
                 const LstmParams<double>& p) {
  const std::size_t hd = h.size();
  std::vector<double> hn(hd), cn(hd);
  for (std::size_t u = 0; u < hd; ++u) {
    double z[4];
    for (int gate = 0; gate < 4; ++gate) {
      const std::size_t col = gate * hd + u;
      double s = p.bias(0, col);
      for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * p.w_input(k, col);
      for (std::size_t k = 0; k < hd; ++k) s += h[k] * p.w_recurrent(k, col);
      z[gate] = s;
    }
    const double i = sigmoid(z[0]), f = sigmoid(z[1]), g = std::tanh(z[2]), o = sigmoid(z[3]);
    cn[u] = f * c[u] + i * g;
    hn[u] = o * std::tanh(cn[u]);
  }
  h = hn;
  c = cn;
}

}  // namespace

TEST_CASE("positional code values") {
  CHECK(positional_code(0, 0, 8) == 0.0);
  CHECK(positional_code(0, 1, 8) == 1.0);
  CHECK(positional_code(1, 0, 4) == doctest::Approx(std::sin(1.0)));
  CHECK(positional_code(1, 1, 4) == doctest::Approx(std::cos(1.0)));
  CHECK(positional_code(3, 2, 4) == doctest::Approx(std::sin(3.0 / 100.0)));
  CHECK(positional_code(3, 3, 4) == doctest::Approx(std::cos(3.0 / 100.0)));
}

TEST_CASE("positional encoding honours the start offset") {
  Rng r(1);
  const auto x = oracle::random_matrix<double>(12, 6, r);
  const auto whole = pos_encode(x, 0);
  const auto tail = pos_encode(x.slice_rows(5, 7), 5);
  CHECK(max_abs_diff(whole.slice_rows(5, 7), tail) == 0.0);
}

TEST_CASE("dense forward and backward") {
  Rng r(2);
  auto p = DenseParams<double>::xavier(5, 3, r);
  fill_uniform(p.bias, r, -1, 1);
  auto x = oracle::random_matrix<double>(4, 5, r);
  auto want = oracle::matmul(x, p.weight);
  add_row_vector(want, p.bias);
  CHECK(max_abs_diff(dense(x, p), want) < 1e-14);

  const auto w = oracle::random_matrix<double>(4, 3, r);
  auto loss = [&] { return oracle::probe(dense(x, p), w); };
  auto g = DenseParams<double>::zeros(5, 3);
  const auto dx = dense_backward(x, p, w, g);
  CHECK(oracle::max_rel_error(dx, oracle::numeric_grad(x, loss)) < 1e-7);
  CHECK(oracle::max_rel_error(g.weight, oracle::numeric_grad(p.weight, loss)) < 1e-7);
  CHECK(oracle::max_rel_error(g.bias, oracle::numeric_grad(p.bias, loss)) < 1e-7);
}

TEST_CASE("layer norm normalises rows and differentiates") {
  Rng r(3);
  auto x = oracle::random_matrix<double>(5, 8, r, 3.0);
  auto p = LayerNormParams<double>::identity(8);
  const auto y = layer_norm(x, p);
  for (std::size_t i = 0; i < 5; ++i) {
    double m = 0, v = 0;
    for (double e : y.row(i)) m += e;
    m /= 8;
    for (double e : y.row(i)) v += (e - m) * (e - m);
    CHECK(std::abs(m) < 1e-12);
    CHECK(v / 8 == doctest::Approx(1.0).epsilon(1e-4));
  }
  fill_uniform(p.gain, r, 0.5, 1.5);
  fill_uniform(p.bias, r, -1, 1);
  const auto w = oracle::random_matrix<double>(5, 8, r);
  auto loss = [&] { return oracle::probe(layer_norm(x, p), w); };
  auto g = LayerNormParams<double>::zeros(8);
  const auto dx = layer_norm_backward(x, p, w, g);
  CHECK(oracle::max_rel_error(dx, oracle::numeric_grad(x, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.gain, oracle::numeric_grad(p.gain, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.bias, oracle::numeric_grad(p.bias, loss)) < 1e-6);
}

TEST_CASE("feed forward backward") {
  Rng r(4);
  auto p = FeedForwardParams<double>::xavier(6, 10, r);
  fill_uniform(p.inner.bias, r, -0.5, 0.5);
  auto x = oracle::random_matrix<double>(7, 6, r);
  const auto w = oracle::random_matrix<double>(7, 6, r);
  auto loss = [&] { return oracle::probe(feed_forward(x, p), w); };
  FeedForwardTrace<double> tr;
  feed_forward(x, p, &tr);
  for (double v : tr.hidden.values()) CHECK(v >= 0.0);
  auto g = FeedForwardParams<double>::zeros(6, 10);
  const auto dx = feed_forward_backward(tr, p, w, g);
  CHECK(oracle::max_rel_error(dx, oracle::numeric_grad(x, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.inner.weight, oracle::numeric_grad(p.inner.weight, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.outer.weight, oracle::numeric_grad(p.outer.weight, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.inner.bias, oracle::numeric_grad(p.inner.bias, loss)) < 1e-6);
}

TEST_CASE("lstm forget bias starts at one") {
  Rng r(5);
  const auto p = LstmParams<double>::xavier(3, 4, r);
  for (std::size_t u = 0; u < 4; ++u) {
    CHECK(p.bias(0, u) == 0.0);
    CHECK(p.bias(0, 4 + u) == 1.0);
    CHECK(p.bias(0, 8 + u) == 0.0);
  }
}

TEST_CASE("lstm matches the scalar gate equations") {
  Rng r(6);
  auto p = LstmParams<double>::xavier(3, 5, r);
  fill_uniform(p.bias, r, -0.5, 0.5);
  const auto x = oracle::random_matrix<double>(8, 3, r);
  LstmState<double> init{std::vector<double>(5), std::vector<double>(5)};
  for (auto& v : init.hidden) v = r.uniform(-1, 1);
  for (auto& v : init.cell) v = r.uniform(-1, 1);

  const auto out = lstm_forward(x, init, p);
  std::vector<double> h = init.hidden, c = init.cell;
  LstmState<double> stepped = init;
  for (std::size_t t = 0; t < 8; ++t) {
    std::vector<double> xt(x.row(t).begin(), x.row(t).end());
    lstm_scalar(xt, h, c, p);
    stepped = lstm_step(x.row(t), stepped, p);
    for (std::size_t u = 0; u < 5; ++u) {
      CHECK(std::abs(out.hidden(t, u) - h[u]) < 1e-14);
      CHECK(stepped.hidden[u] == out.hidden(t, u));
    }
  }
  CHECK(stepped == out.final_state);
}

TEST_CASE("lstm split across calls equals one pass") {
  Rng r(7);
  const auto p = LstmParams<double>::xavier(4, 3, r);
  const auto x = oracle::random_matrix<double>(10, 4, r);
  const auto whole = lstm_forward(x, LstmState<double>::zeros(3), p);
  const auto a = lstm_forward(x.slice_rows(0, 6), LstmState<double>::zeros(3), p);
  const auto b = lstm_forward(x.slice_rows(6, 4), a.final_state, p);
  CHECK(max_abs_diff(whole.hidden.slice_rows(6, 4), b.hidden) == 0.0);
}

TEST_CASE("lstm backward through time") {
  Rng r(8);
  auto p = LstmParams<double>::xavier(3, 4, r);
  auto x = oracle::random_matrix<double>(6, 3, r);
  const auto w = oracle::random_matrix<double>(6, 4, r);
  const auto init = LstmState<double>::zeros(4);
  auto loss = [&] { return oracle::probe(lstm_forward(x, init, p).hidden, w); };
  LstmTrace<double> tr;
  lstm_forward(x, init, p, &tr);
  auto g = LstmParams<double>::zeros(3, 4);
  const auto dx = lstm_backward(tr, p, w, g);
  CHECK(oracle::max_rel_error(dx, oracle::numeric_grad(x, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.w_input, oracle::numeric_grad(p.w_input, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.w_recurrent, oracle::numeric_grad(p.w_recurrent, loss)) < 1e-6);
  CHECK(oracle::max_rel_error(g.bias, oracle::numeric_grad(p.bias, loss)) < 1e-6);
}

TEST_CASE("lstm shape errors") {
  Rng r(9);
  const auto p = LstmParams<double>::xavier(3, 4, r);
  CHECK_THROWS_AS(lstm_forward(Matrix<double>(2, 5), LstmState<double>::zeros(4), p), Error);
  CHECK_THROWS_AS(lstm_forward(Matrix<double>(2, 3), LstmState<double>::zeros(2), p), Error);
  const auto empty = lstm_forward(Matrix<double>(0, 3), LstmState<double>::zeros(4), p);
  CHECK(empty.hidden.rows() == 0);
}
