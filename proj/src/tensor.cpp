// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors

#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace skws {

template <typename Real>
Matrix<Real>::Matrix(std::size_t rows, std::size_t cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows * cols, ErrorKind::Shape,
          "matrix data length " + std::to_string(data_.size()) +
              " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
}

template <typename Real>
Matrix<Real> Matrix<Real>::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = Real(1);
  return m;
}

template <typename Real>
std::string Matrix<Real>::shape_str() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

template <typename Real>
Matrix<Real> Matrix<Real>::slice_rows(std::size_t begin, std::size_t count) const {
  require(begin + count <= rows_, ErrorKind::Shape,
          "row slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for " + shape_str());
  Matrix out(count, cols_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_), count * cols_,
              out.data_.begin());
  return out;
}

template <typename Real>
Matrix<Real> Matrix<Real>::slice_cols(std::size_t begin, std::size_t count) const {
  require(begin + count <= cols_, ErrorKind::Shape,
          "column slice out of range for " + shape_str());
  Matrix out(rows_, count);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, begin + c);
  return out;
}

template <typename Real>
void Matrix<Real>::set_cols(std::size_t begin, const Matrix& block) {
  require(block.rows_ == rows_ && begin + block.cols_ <= cols_, ErrorKind::Shape,
          "set_cols: block " + block.shape_str() + " does not fit " + shape_str());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < block.cols_; ++c) (*this)(r, begin + c) = block(r, c);
}

template <typename Real>
void Matrix<Real>::append_rows(const Matrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0) {
    *this = other;
    return;
  }
  require(other.cols_ == cols_, ErrorKind::Shape,
          "append_rows: " + other.shape_str() + " onto " + shape_str());
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

template <typename Real>
Matrix<Real> matmul(const Matrix<Real>& a, const Matrix<Real>& b) {
  require(a.cols() == b.rows(), ErrorKind::Shape,
          "matmul shape mismatch: " + a.shape_str() + " x " + b.shape_str());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix<Real> c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    Real* ci = c.data() + i * m;
    const Real* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = ai[p];
      const Real* bp = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

template <typename Real>
Matrix<Real> matmul_tn(const Matrix<Real>& a, const Matrix<Real>& b) {
  require(a.rows() == b.rows(), ErrorKind::Shape,
          "matmul_tn shape mismatch: " + a.shape_str() + "^T x " + b.shape_str());
  const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
  Matrix<Real> c(n, m);
  for (std::size_t p = 0; p < k; ++p) {
    const Real* ap = a.data() + p * n;
    const Real* bp = b.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const Real api = ap[i];
      Real* ci = c.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += api * bp[j];
    }
  }
  return c;
}

template <typename Real>
Matrix<Real> matmul_nt(const Matrix<Real>& a, const Matrix<Real>& b) {
  require(a.cols() == b.cols(), ErrorKind::Shape,
          "matmul_nt shape mismatch: " + a.shape_str() + " x " + b.shape_str() + "^T");
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix<Real> c(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const Real* ai = a.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const Real* bj = b.data() + j * k;
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c(i, j) = acc;
    }
  }
  return c;
}

template <typename Real>
Matrix<Real> transpose(const Matrix<Real>& a) {
  Matrix<Real> t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

template <typename Real>
Matrix<Real> row_softmax(const Matrix<Real>& a, const Mask* mask) {
  if (mask)
    require(mask->rows() == a.rows() && mask->cols() == a.cols(), ErrorKind::Shape,
            "softmax mask shape does not match " + a.shape_str());
  Matrix<Real> out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    Real mx = -std::numeric_limits<Real>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (mask && !(*mask)(r, c)) continue;
      mx = std::max(mx, a(r, c));
      any = true;
    }
    require(any, ErrorKind::Usage, "softmax row " + std::to_string(r) + " is fully masked");
    Real sum = 0;
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (mask && !(*mask)(r, c)) continue;
      const Real e = std::exp(a(r, c) - mx);
      out(r, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) /= sum;
  }
  return out;
}

template <typename Real>
Real log_sum_exp(std::span<const Real> xs) {
  Real mx = -std::numeric_limits<Real>::infinity();
  for (Real x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  Real sum = 0;
  for (Real x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

template <typename Real>
Matrix<Real> row_log_softmax(const Matrix<Real>& a) {
  Matrix<Real> out(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    // (x - max) - log(sum) keeps precision when |max| is large
    Real mx = -std::numeric_limits<Real>::infinity();
    for (Real x : a.row(r)) mx = std::max(mx, x);
    require(std::isfinite(mx), ErrorKind::Numeric, "log-softmax of a non-finite row");
    Real sum = 0;
    for (Real x : a.row(r)) sum += std::exp(x - mx);
    const Real log_sum = std::log(sum);
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = (a(r, c) - mx) - log_sum;
  }
  return out;
}

template <typename Real>
void add_inplace(Matrix<Real>& a, const Matrix<Real>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Shape,
          "add shape mismatch: " + a.shape_str() + " + " + b.shape_str());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

template <typename Real>
void scale_inplace(Matrix<Real>& a, Real s) {
  for (Real& v : a.values()) v *= s;
}

template <typename Real>
void add_row_vector(Matrix<Real>& a, const Matrix<Real>& bias) {
  require(bias.rows() == 1 && bias.cols() == a.cols(), ErrorKind::Shape,
          "bias " + bias.shape_str() + " does not broadcast over " + a.shape_str());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    Real* ar = a.data() + r * a.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) ar[c] += bias.data()[c];
  }
}

template <typename Real>
Matrix<Real> column_sums(const Matrix<Real>& a) {
  Matrix<Real> s(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) s(0, c) += a(r, c);
  return s;
}

template <typename Real>
Real max_abs_diff(const Matrix<Real>& a, const Matrix<Real>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Shape,
          "max_abs_diff shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
  Real d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

template <typename Real>
bool all_finite(const Matrix<Real>& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](Real v) { return std::isfinite(v); });
}

std::uint64_t Rng::next_u64() noexcept {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(std::uint64_t salt) const noexcept {
  Rng child(state_ ^ (salt * 0xD1B54A32D192ED03ULL));
  child.next_u64();
  return Rng(child.next_u64());
}

template <typename Real>
void fill_uniform(Matrix<Real>& m, Rng& rng, double lo, double hi) {
  for (Real& v : m.values()) v = static_cast<Real>(rng.uniform(lo, hi));
}

template <typename Real>
void fill_normal(Matrix<Real>& m, Rng& rng, double stddev) {
  for (Real& v : m.values()) v = static_cast<Real>(stddev * rng.normal());
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

#define SKWS_INSTANTIATE(Real)                                                    \
  template class Matrix<Real>;                                                    \
  template Matrix<Real> matmul(const Matrix<Real>&, const Matrix<Real>&);         \
  template Matrix<Real> matmul_tn(const Matrix<Real>&, const Matrix<Real>&);      \
  template Matrix<Real> matmul_nt(const Matrix<Real>&, const Matrix<Real>&);      \
  template Matrix<Real> transpose(const Matrix<Real>&);                           \
  template Matrix<Real> row_softmax(const Matrix<Real>&, const Mask*);            \
  template Matrix<Real> row_log_softmax(const Matrix<Real>&);                     \
  template Real log_sum_exp(std::span<const Real>);                               \
  template void add_inplace(Matrix<Real>&, const Matrix<Real>&);                  \
  template void scale_inplace(Matrix<Real>&, Real);                               \
  template void add_row_vector(Matrix<Real>&, const Matrix<Real>&);               \
  template Matrix<Real> column_sums(const Matrix<Real>&);                         \
  template Real max_abs_diff(const Matrix<Real>&, const Matrix<Real>&);           \
  template bool all_finite(const Matrix<Real>&);                                  \
  template void fill_uniform(Matrix<Real>&, Rng&, double, double);                \
  template void fill_normal(Matrix<Real>&, Rng&, double);

SKWS_INSTANTIATE(float)
SKWS_INSTANTIATE(double)

}  // namespace skws
