// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "tensor.hpp"

using namespace skws;

TEST_CASE("splitmix64 reference outputs") {
  Rng zero(0);
  const std::uint64_t want0[] = {0xe220a8397b1dcdafULL, 0x6e789e6aa1b965f4ULL,
                                 0x06c45d188009454fULL, 0xf88bb8a8724c81ecULL,
                                 0x1b39896a51a8749bULL};
  for (auto w : want0) CHECK(zero.next_u64() == w);
  Rng fortytwo(42);
  const std::uint64_t want42[] = {0xbdd732262feb6e95ULL, 0x28efe333b266f103ULL,
                                  0x47526757130f9f52ULL, 0x581ce1ff0e4ae394ULL,
                                  0x09bc585a244823f2ULL};
  for (auto w : want42) CHECK(fortytwo.next_u64() == w);
}

TEST_CASE("rng draws stay in range") {
  Rng r(3);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("fork is deterministic and leaves the parent alone") {
  Rng a(9);
  const auto before = a.state();
  Rng c1 = a.fork(1), c2 = a.fork(1), c3 = a.fork(2);
  CHECK(a.state() == before);
  CHECK(c1.next_u64() == c2.next_u64());
  CHECK(Rng(9).fork(1).next_u64() != c3.next_u64());
}

TEST_CASE("shuffle is a permutation") {
  std::vector<std::size_t> idx(50);
  std::iota(idx.begin(), idx.end(), 0);
  Rng r(5);
  shuffle_indices(idx, r);
  std::set<std::size_t> seen(idx.begin(), idx.end());
  CHECK(seen.size() == 50);
  CHECK(*seen.rbegin() == 49);
  CHECK_FALSE(std::is_sorted(idx.begin(), idx.end()));
}

TEST_CASE("matmul kernels agree with the naive product") {
  Rng r(1);
  for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {3, 5, 2}, {7, 4, 9}, {16, 32, 8}}) {
    auto a = oracle::random_matrix<double>(m, k, r);
    auto b = oracle::random_matrix<double>(k, n, r);
    const auto want = oracle::matmul(a, b);
    CHECK(max_abs_diff(matmul(a, b), want) < 1e-13);
    CHECK(max_abs_diff(matmul_tn(transpose(a), b), want) < 1e-13);
    CHECK(max_abs_diff(matmul_nt(a, transpose(b)), want) < 1e-13);
  }
  CHECK_THROWS_AS(matmul(Matrix<double>(2, 3), Matrix<double>(2, 3)), Error);
}

TEST_CASE("softmax matches a long double reference, masked entries are zero") {
  Rng r(2);
  auto a = oracle::random_matrix<double>(6, 9, r, 30.0);
  Mask mask(6, 9);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 9; ++j) mask.set(i, j, (i + j) % 3 != 0 || j == i);
  const auto p = row_softmax(a, &mask);
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<long double> x(9);
    std::vector<bool> allowed(9);
    for (std::size_t j = 0; j < 9; ++j) {
      x[j] = a(i, j);
      allowed[j] = mask(i, j);
    }
    const auto want = oracle::softmax(x, allowed);
    for (std::size_t j = 0; j < 9; ++j) {
      CHECK(std::abs(p(i, j) - static_cast<double>(want[j])) < 1e-15);
      if (!mask(i, j)) CHECK(p(i, j) == 0.0);
    }
  }
}

TEST_CASE("softmax rejects a fully masked row") {
  Mask mask(2, 3, true);
  for (std::size_t j = 0; j < 3; ++j) mask.set(1, j, false);
  try {
    row_softmax(Matrix<double>(2, 3), &mask);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
  }
}

TEST_CASE("softmax survives large logits") {
  Matrix<float> a(1, 3, std::vector<float>{1000.f, 1000.f, -1000.f});
  const auto p = row_softmax(a);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(0, 2) == 0.0f);
  const auto lp = row_log_softmax(a);
  CHECK(lp(0, 0) == doctest::Approx(-std::log(2.0)));
  CHECK(std::isfinite(lp(0, 2)));
}

TEST_CASE("log_sum_exp") {
  const std::vector<double> xs = {0.0, std::log(3.0)};
  CHECK(log_sum_exp<double>(xs) == doctest::Approx(std::log(4.0)));
  const std::vector<double> ninf = {-INFINITY, -INFINITY};
  CHECK(std::isinf(log_sum_exp<double>(ninf)));
}

TEST_CASE("row and column helpers") {
  Matrix<double> a(3, 4);
  std::iota(a.values().begin(), a.values().end(), 0.0);
  CHECK(a.slice_rows(1, 2)(0, 0) == 4.0);
  CHECK(a.slice_cols(2, 2)(2, 1) == 11.0);
  auto b = a;
  b.set_cols(1, Matrix<double>(3, 2, 0.0));
  CHECK(b(1, 1) == 0.0);
  CHECK(b(1, 3) == 7.0);
  b.append_rows(a.slice_rows(0, 1));
  CHECK(b.rows() == 4);
  CHECK(column_sums(a)(0, 3) == 3.0 + 7.0 + 11.0);
  add_row_vector(a, Matrix<double>(1, 4, 1.0));
  CHECK(a(0, 0) == 1.0);
  CHECK_THROWS_AS(a.slice_rows(2, 2), Error);
  CHECK(all_finite(a));
  a(0, 0) = NAN;
  CHECK_FALSE(all_finite(a));
}
