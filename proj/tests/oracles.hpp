// Test-side oracles, independent of the library paths they check.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nyla/matrix.hpp"
#include "nyla/rng.hpp"

namespace oracles {

using nyla::index_t;
using nyla::Matrix;
using nyla::SymMatrix;

/// Gaussian elimination with partial pivoting. Deliberately unrelated to the
/// library's eigendecomposition-based routes.
inline std::vector<double> gauss_solve(Matrix a, std::vector<double> b) {
  const index_t n = a.rows();
  if (a.cols() != n || static_cast<index_t>(b.size()) != n)
    throw std::invalid_argument("gauss_solve: dimension mismatch");
  for (index_t col = 0; col < n; ++col) {
    index_t piv = col;
    for (index_t r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) throw std::runtime_error("gauss_solve: singular matrix");
    if (piv != col) {
      for (index_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
      std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(col)]);
    }
    for (index_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (index_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (index_t r = n - 1; r >= 0; --r) {
    double acc = b[static_cast<std::size_t>(r)];
    for (index_t c = r + 1; c < n; ++c) acc -= a(r, c) * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(r)] = acc / a(r, r);
  }
  return x;
}

inline Matrix gauss_inverse(const Matrix& a) {
  const index_t n = a.rows();
  Matrix inv(n, n);
  for (index_t col = 0; col < n; ++col) {
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    e[static_cast<std::size_t>(col)] = 1.0;
    const std::vector<double> x = gauss_solve(a, std::move(e));
    for (index_t r = 0; r < n; ++r) inv(r, col) = x[static_cast<std::size_t>(r)];
  }
  return inv;
}

/// Full-rank random PSD matrix: (G G^T)/n + ridge I with Gaussian G.
inline SymMatrix random_psd(index_t n, nyla::Rng& rng, double ridge = 1e-3) {
  Matrix g(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) g(i, j) = rng.normal();
  SymMatrix k(n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (index_t t = 0; t < n; ++t) acc += g(i, t) * g(j, t);
      k.set(i, j, acc / static_cast<double>(n) + (i == j ? ridge : 0.0));
    }
  return k;
}

/// Rank-r random PSD matrix B B^T with Gaussian B (N x r).
inline SymMatrix random_psd_rank(index_t n, index_t r, nyla::Rng& rng) {
  Matrix b(n, r);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < r; ++j) b(i, j) = rng.normal();
  SymMatrix k(n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = i; j < n; ++j) k.set(i, j, nyla::dot(b.row(i), b.row(j)));
  return k;
}

inline SymMatrix random_symmetric(index_t n, nyla::Rng& rng) {
  SymMatrix k(n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = i; j < n; ++j) k.set(i, j, rng.normal());
  return k;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

}  // namespace oracles
