#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gaugefix {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Sized for the small networks handled
// here (a few hundred entries); no BLAS.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector column(std::size_t c) const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Left-to-right accumulation; the order is part of the contract so results
// are reproducible bit for bit across runs.
double dot(std::span<const double> a, std::span<const double> b);

double l2_norm(std::span<const double> v);

// Throws std::invalid_argument when m.cols() != v.size().
Vector matvec(const Matrix& m, std::span<const double> v);

// Largest |x| over all entries; NaN if any entry is NaN.
double max_abs(std::span<const double> v);

bool all_finite(std::span<const double> v);

}  // namespace gaugefix
