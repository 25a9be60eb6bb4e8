// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The skws Authors
//
// Dense row-major matrices and the handful of kernels the network needs.
// Every kernel is instantiated for float and double.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace skws {

template <typename Real>
class Matrix {
 public:
  using value_type = Real;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<Real> data);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<Real> values() noexcept { return data_; }
  std::span<const Real> values() const noexcept { return data_; }
  Real* data() noexcept { return data_.data(); }
  const Real* data() const noexcept { return data_.data(); }

  std::string shape_str() const;

  // Rows [begin, begin + count).
  Matrix slice_rows(std::size_t begin, std::size_t count) const;
  // Columns [begin, begin + count).
  Matrix slice_cols(std::size_t begin, std::size_t count) const;
  void set_cols(std::size_t begin, const Matrix& block);
  void append_rows(const Matrix& other);

  template <typename Other>
  Matrix<Other> cast() const {
    Matrix<Other> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out.data()[i] = static_cast<Other>(data_[i]);
    return out;
  }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

// Row-major boolean matrix; true marks an allowed entry.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits_[r * cols_ + c] = v ? 1 : 0; }

  bool operator==(const Mask& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

template <typename Real>
Matrix<Real> matmul(const Matrix<Real>& a, const Matrix<Real>& b);
// a^T * b
template <typename Real>
Matrix<Real> matmul_tn(const Matrix<Real>& a, const Matrix<Real>& b);
// a * b^T
template <typename Real>
Matrix<Real> matmul_nt(const Matrix<Real>& a, const Matrix<Real>& b);

template <typename Real>
Matrix<Real> transpose(const Matrix<Real>& a);

// Softmax along each row, subtracting the row maximum first. Masked-out
// entries come back as exactly zero. Every row must keep at least one entry.
template <typename Real>
Matrix<Real> row_softmax(const Matrix<Real>& a, const Mask* mask = nullptr);

template <typename Real>
Matrix<Real> row_log_softmax(const Matrix<Real>& a);

template <typename Real>
Real log_sum_exp(std::span<const Real> xs);

template <typename Real>
void add_inplace(Matrix<Real>& a, const Matrix<Real>& b);
template <typename Real>
void scale_inplace(Matrix<Real>& a, Real s);
// Adds a 1 x cols row vector to every row.
template <typename Real>
void add_row_vector(Matrix<Real>& a, const Matrix<Real>& bias);
// Column sums as a 1 x cols matrix.
template <typename Real>
Matrix<Real> column_sums(const Matrix<Real>& a);

template <typename Real>
Real max_abs_diff(const Matrix<Real>& a, const Matrix<Real>& b);
template <typename Real>
bool all_finite(const Matrix<Real>& a);

// SplitMix64. Output i for seed s is mix(s + (i + 1) * 0x9E3779B97F4A7C15);
// the first output for seed 0 is 0xe220a8397b1dcdaf.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, n) without modulo bias. n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  // Standard normal via Box-Muller (one draw per call).
  double normal() noexcept;

  // Independent child stream; does not advance this generator.
  Rng fork(std::uint64_t salt) const noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

template <typename Real>
void fill_uniform(Matrix<Real>& m, Rng& rng, double lo, double hi);
template <typename Real>
void fill_normal(Matrix<Real>& m, Rng& rng, double stddev);

// Fisher-Yates with Rng::below, so the permutation is platform independent.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng);

}  // namespace skws
