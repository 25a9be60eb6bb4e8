// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Slow reference implementations used only by tests. They share no code with
// the library beyond the Matrix container.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tensor.hpp"

namespace oracle {

using skws::Matrix;

template <typename Real>
Matrix<Real> random_matrix(std::size_t r, std::size_t c, skws::Rng& rng, double scale = 1.0) {
  Matrix<Real> m(r, c);
  for (auto& v : m.values()) v = static_cast<Real>(rng.uniform(-scale, scale));
  return m;
}

template <typename Real>
Matrix<Real> matmul(const Matrix<Real>& a, const Matrix<Real>& b) {
  Matrix<Real> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<Real>(s);
    }
  return out;
}

// Softmax of one row restricted to `allowed`, in long double.
inline std::vector<long double> softmax(const std::vector<long double>& x,
                                        const std::vector<bool>& allowed) {
  long double mx = -INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (allowed[i]) mx = std::max(mx, x[i]);
  long double z = 0;
  std::vector<long double> out(x.size(), 0.0L);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (allowed[i]) z += out[i] = std::exp(x[i] - mx);
  for (auto& v : out) v /= z;
  return out;
}

// Probability of a CTC target by summing over every path of length T whose
// collapse equals the labels. Blank is column V (last). Returns -log p.
inline double ctc_by_enumeration(const Matrix<double>& log_probs,
                                 const std::vector<std::int32_t>& labels) {
  const std::size_t t_len = log_probs.rows();
  const std::size_t classes = log_probs.cols();
  const auto blank = static_cast<std::int32_t>(classes - 1);
  std::vector<std::int32_t> path(t_len, 0);
  long double total = 0;
  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == t_len) {
      std::vector<std::int32_t> collapsed;
      std::int32_t prev = -1;
      for (auto s : path) {
        if (s != prev && s != blank) collapsed.push_back(s);
        prev = s;
      }
      if (collapsed == labels) {
        long double lp = 0;
        for (std::size_t u = 0; u < t_len; ++u) lp += log_probs(u, path[u]);
        total += std::exp(lp);
      }
      return;
    }
    for (std::size_t c = 0; c < classes; ++c) {
      path[t] = static_cast<std::int32_t>(c);
      rec(t + 1);
    }
  };
  rec(0);
  return static_cast<double>(-std::log(total));
}

// Central difference of f with respect to every entry of m.
template <typename Real>
Matrix<Real> numeric_grad(Matrix<Real>& m, const std::function<double()>& f, double h = 1e-5) {
  Matrix<Real> g(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Real saved = m.data()[i];
    m.data()[i] = saved + static_cast<Real>(h);
    const double up = f();
    m.data()[i] = saved - static_cast<Real>(h);
    const double down = f();
    m.data()[i] = saved;
    g.data()[i] = static_cast<Real>((up - down) / (2 * h));
  }
  return g;
}

// max |a - b| / max(|a|, |b|, floor) over entries.
template <typename Real>
double max_rel_error(const Matrix<Real>& a, const Matrix<Real>& b, double floor = 1e-6) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor}));
  }
  return worst;
}

// Weighted sum of all entries; a linear probe loss whose gradient is `w`.
template <typename Real>
double probe(const Matrix<Real>& y, const Matrix<Real>& w) {
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y.data()[i]) * w.data()[i];
  return s;
}

}  // namespace oracle
