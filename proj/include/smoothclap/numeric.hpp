// Copyright 2026 The SmoothCLAP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smoothclap/error.hpp"

namespace smoothclap {

/// Dense row-major matrix of doubles. Construction from data rejects
/// NaN/Inf; the zero-initialized constructor is always finite.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) fail(ErrorCode::ShapeMismatch, "matrix must be at least 1x1");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) fail(ErrorCode::ShapeMismatch, "matrix must be at least 1x1");
    if (data_.size() != rows * cols) {
      fail(ErrorCode::ShapeMismatch, "data size " + std::to_string(data_.size()) + " != " +
                                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (double v : data_) {
      if (!std::isfinite(v)) fail(ErrorCode::NonFinite, "matrix element is not finite");
    }
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) fail(ErrorCode::ShapeMismatch, "no rows");
    const std::size_t cols = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols) fail(ErrorCode::ShapeMismatch, "ragged rows");
      data.insert(data.end(), r.begin(), r.end());
    }
    return Matrix(rows.size(), cols, std::move(data));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Matrix whose rows are probability distributions: entries ≥ 0 and every
/// row sums to one within 1e-9.
class RowStochasticMatrix {
 public:
  static constexpr double kRowSumTolerance = 1e-9;

  explicit RowStochasticMatrix(Matrix m) : m_(std::move(m)) {
    for (std::size_t i = 0; i < m_.rows(); ++i) {
      double sum = 0.0;
      for (double v : m_.row(i)) {
        if (v < 0.0) fail(ErrorCode::NotRowStochastic, "negative entry in row " + std::to_string(i));
        sum += v;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        fail(ErrorCode::NotRowStochastic, "row " + std::to_string(i) + " sums to " + std::to_string(sum));
      }
    }
  }

  const Matrix& matrix() const noexcept { return m_; }
  std::size_t rows() const noexcept { return m_.rows(); }
  std::size_t cols() const noexcept { return m_.cols(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }

 private:
  Matrix m_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline constexpr double kMinRowNorm = 1e-12;

inline Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double n = norm2(m.row(i));
    if (n < kMinRowNorm) fail(ErrorCode::ZeroRow, "row " + std::to_string(i) + " has norm below 1e-12");
    auto r = out.row(i);
    for (double& v : r) v /= n;
  }
  return out;
}

/// Softmax of each row of m / temperature, stabilized by subtracting the row max.
inline RowStochasticMatrix row_softmax(const Matrix& m, double temperature) {
  if (!(temperature > 0.0)) fail(ErrorCode::NonPositiveTemperature, "temperature must be > 0");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto o = out.row(i);
    double mx = in[0] / temperature;
    for (double v : in) mx = std::max(mx, v / temperature);
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] / temperature - mx);
      z += o[j];
    }
    for (double& v : o) v /= z;
  }
  return RowStochasticMatrix(std::move(out));
}

/// KL(p_row || q_row) with both arguments clamped to `floor` inside the log.
/// Entries with p == 0 contribute nothing.
inline double kl_row(std::span<const double> p, std::span<const double> q, double floor) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    s += p[j] * std::log(std::max(p[j], floor) / std::max(q[j], floor));
  }
  return s;
}

/// Row-averaged KL divergence.
inline double kl_rows(const RowStochasticMatrix& p, const RowStochasticMatrix& q, double floor) {
  if (!p.matrix().same_shape(q.matrix())) fail(ErrorCode::ShapeMismatch, "kl_rows operands differ in shape");
  if (!(floor > 0.0)) fail(ErrorCode::InvalidConfig, "KL floor must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) s += kl_row(p.row(i), q.row(i), floor);
  return s / static_cast<double>(p.rows());
}

/// Pairwise dot products: out(i, j) = <a.row(i), b.row(j)>.
inline Matrix gram(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::ShapeMismatch, "gram operands differ in column count");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  return out;
}

/// Plain matrix product a (n×k) · b (k×m).
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) fail(ErrorCode::ShapeMismatch, "matmul inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

/// Nearest-rank percentile on an already sorted list: the element at
/// 1-indexed rank ceil(p/100 · n).
inline double percentile_nearest_rank(std::span<const double> sorted, double percent) {
  if (sorted.empty()) fail(ErrorCode::EmptyInput, "percentile of empty list");
  if (!(percent > 0.0 && percent <= 100.0)) fail(ErrorCode::InvalidConfig, "percent must be in (0, 100]");
  const double n = static_cast<double>(sorted.size());
  // 30/100*10 is 3.0000000000000004 in binary; snap near-integers before ceil.
  double rank = percent / 100.0 * n;
  const double nearest = std::round(rank);
  if (std::abs(rank - nearest) < 1e-9) rank = nearest;
  auto idx = static_cast<std::size_t>(std::ceil(rank));
  idx = std::clamp<std::size_t>(idx, 1, sorted.size());
  return sorted[idx - 1];
}

}  // namespace smoothclap
