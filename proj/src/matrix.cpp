#include "nyla/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace nyla {

Matrix Matrix::identity(index_t n) {
  Matrix m(n, n);
  for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (index_t i = 0; i < rows_; ++i)
    for (index_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

void Matrix::apply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<index_t>(x.size()) != cols_ || static_cast<index_t>(y.size()) != rows_)
    throw std::invalid_argument("Matrix::apply: dimension mismatch");
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < rows_; ++i) {
    const double* r = a_.data() + i * cols_;
    double acc = 0.0;
    for (index_t j = 0; j < cols_; ++j) acc += r[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

void Matrix::apply_transposed(std::span<const double> x, std::span<double> y) const {
  if (static_cast<index_t>(x.size()) != rows_ || static_cast<index_t>(y.size()) != cols_)
    throw std::invalid_argument("Matrix::apply_transposed: dimension mismatch");
  for (index_t j = 0; j < cols_; ++j) y[static_cast<std::size_t>(j)] = 0.0;
  for (index_t i = 0; i < rows_; ++i) {
    const double* r = a_.data() + i * cols_;
    const double xi = x[static_cast<std::size_t>(i)];
    if (xi == 0.0) continue;
    for (index_t j = 0; j < cols_; ++j) y[static_cast<std::size_t>(j)] += xi * r[j];
  }
}

bool Matrix::all_finite() const {
  for (double v : a_)
    if (!std::isfinite(v)) return false;
  return true;
}

SymMatrix SymMatrix::from_full(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix: matrix not square");
  SymMatrix s(m.rows());
  for (index_t i = 0; i < m.rows(); ++i)
    for (index_t j = i; j < m.cols(); ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  return s;
}

SymMatrix SymMatrix::identity(index_t n) {
  SymMatrix s(n);
  for (index_t i = 0; i < n; ++i) s.set(i, i, 1.0);
  return s;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix s(static_cast<index_t>(d.size()));
  for (index_t i = 0; i < s.size(); ++i) s.set(i, i, d[static_cast<std::size_t>(i)]);
  return s;
}

void SymMatrix::apply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<index_t>(x.size()) != n_ || static_cast<index_t>(y.size()) != n_)
    throw std::invalid_argument("SymMatrix::apply: dimension mismatch");
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < n_; ++i) {
    const double* r = a_.data() + i * n_;
    double acc = 0.0;
    for (index_t j = 0; j < n_; ++j) acc += r[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (index_t i = 0; i < n_; ++i) t += (*this)(i, i);
  return t;
}

bool SymMatrix::all_finite() const {
  for (double v : a_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix SymMatrix::to_matrix() const {
  Matrix m(n_, n_);
  for (index_t i = 0; i < n_; ++i)
    for (index_t j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: dimension mismatch");
  Matrix c(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (index_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k).data();
      for (index_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: dimension mismatch");
  Matrix c(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    for (index_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j).data();
      double acc = 0.0;
      for (index_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: dimension mismatch");
  Matrix c(a.cols(), b.cols());
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < a.cols(); ++i) {
    double* ci = c.row(i).data();
    for (index_t k = 0; k < a.rows(); ++k) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      const double* bk = b.row(k).data();
      for (index_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double frobenius_distance(const Matrix& a, const Matrix& b) {
  double acc = 0.0;
  for (index_t i = 0; i < a.rows(); ++i)
    for (index_t j = 0; j < a.cols(); ++j) {
      const double d = a(i, j) - b(i, j);
      acc += d * d;
    }
  return std::sqrt(acc);
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (index_t i = 0; i < a.rows(); ++i)
    for (index_t j = 0; j < a.cols(); ++j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

}  // namespace nyla
