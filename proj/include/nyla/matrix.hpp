#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nyla {

using index_t = std::ptrdiff_t;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(index_t rows, index_t cols)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows * cols), 0.0) {}

  static Matrix identity(index_t n);

  index_t rows() const { return rows_; }
  index_t cols() const { return cols_; }

  double operator()(index_t i, index_t j) const { return a_[idx(i, j)]; }
  double& operator()(index_t i, index_t j) { return a_[idx(i, j)]; }

  std::span<const double> row(index_t i) const {
    return {a_.data() + i * cols_, static_cast<std::size_t>(cols_)};
  }
  std::span<double> row(index_t i) {
    return {a_.data() + i * cols_, static_cast<std::size_t>(cols_)};
  }

  const double* data() const { return a_.data(); }
  double* data() { return a_.data(); }

  Matrix transposed() const;

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const;
  /// y = A^T x
  void apply_transposed(std::span<const double> x, std::span<double> y) const;

  bool all_finite() const;

 private:
  std::size_t idx(index_t i, index_t j) const {
    return static_cast<std::size_t>(i * cols_ + j);
  }

  index_t rows_ = 0;
  index_t cols_ = 0;
  std::vector<double> a_;
};

/// Dense symmetric matrix. Storage keeps both triangles; set() writes the
/// mirrored pair so entries[i][j] == entries[j][i] holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(index_t n) : n_(n), a_(static_cast<std::size_t>(n * n), 0.0) {}

  /// Symmetrizes a general square matrix: (M + M^T)/2.
  static SymMatrix from_full(const Matrix& m);
  static SymMatrix identity(index_t n);
  static SymMatrix diagonal(std::span<const double> d);

  index_t size() const { return n_; }

  double operator()(index_t i, index_t j) const { return a_[idx(i, j)]; }

  void set(index_t i, index_t j, double v) {
    a_[idx(i, j)] = v;
    a_[idx(j, i)] = v;
  }

  std::span<const double> row(index_t i) const {
    return {a_.data() + i * n_, static_cast<std::size_t>(n_)};
  }

  const double* data() const { return a_.data(); }

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const;

  double trace() const;
  bool all_finite() const;

  Matrix to_matrix() const;

 private:
  std::size_t idx(index_t i, index_t j) const {
    return static_cast<std::size_t>(i * n_ + j);
  }

  index_t n_ = 0;
  std::vector<double> a_;
};

/// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
/// Frobenius norm of A - B (dimensions must match).
double frobenius_distance(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

}  // namespace nyla
