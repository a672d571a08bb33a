#include "nyla/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nyla/rng.hpp"

namespace nyla {

namespace {

constexpr index_t kJacobiMaxDim = 512;

double hypot2(double a, double b) { return std::sqrt(a * a + b * b); }

/// Sorts eigenpairs descending and applies the sign convention: the
/// largest-magnitude component of each eigenvector is made positive, ties
/// broken by lowest index.
EigenSystem finalize(std::vector<double> vals, Matrix vecs) {
  const index_t n = static_cast<index_t>(vals.size());
  std::vector<index_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), index_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](index_t a, index_t b) { return vals[static_cast<std::size_t>(a)] > vals[static_cast<std::size_t>(b)]; });

  EigenSystem es;
  es.eigenvalues.resize(static_cast<std::size_t>(n));
  es.vectors = Matrix(n, n);
  for (index_t k = 0; k < n; ++k) {
    const index_t src = order[static_cast<std::size_t>(k)];
    es.eigenvalues[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(src)];
    index_t pivot = 0;
    double best = -1.0;
    for (index_t i = 0; i < n; ++i) {
      const double mag = std::fabs(vecs(i, src));
      if (mag > best) {
        best = mag;
        pivot = i;
      }
    }
    const double s = vecs(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (index_t i = 0; i < n; ++i) es.vectors(i, k) = s * vecs(i, src);
  }
  return es;
}

}  // namespace

Matrix EigenSystem::reconstruct() const {
  const index_t n = static_cast<index_t>(eigenvalues.size());
  Matrix scaled(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t k = 0; k < n; ++k)
      scaled(i, k) = vectors(i, k) * eigenvalues[static_cast<std::size_t>(k)];
  return matmul_nt(scaled, vectors);
}

namespace detail {

EigenSystem eigh_jacobi(const SymMatrix& a) {
  const index_t n = a.size();
  Matrix w = a.to_matrix();
  Matrix v = Matrix::identity(n);

  auto off_norm = [&]() {
    double s = 0.0;
    for (index_t i = 0; i < n; ++i)
      for (index_t j = i + 1; j < n; ++j) s += w(i, j) * w(i, j);
    return std::sqrt(2.0 * s);
  };

  const double fro = frobenius_norm(w);
  if (fro == 0.0) {
    std::vector<double> zeros(static_cast<std::size_t>(n), 0.0);
    return finalize(zeros, std::move(v));
  }
  const double conv_tol = 1e-15 * fro;

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double off = off_norm();
    if (off <= conv_tol) {
      std::vector<double> vals(static_cast<std::size_t>(n));
      for (index_t i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = w(i, i);
      return finalize(std::move(vals), std::move(v));
    }
    // threshold strategy: aggressive early, exact later
    const double thresh = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (index_t p = 0; p < n - 1; ++p) {
      for (index_t q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        const double scale = std::fabs(w(p, p)) + std::fabs(w(q, q));
        if (std::fabs(apq) <= thresh) continue;
        if (scale + 100.0 * std::fabs(apq) == scale) {
          w(p, q) = 0.0;
          w(q, p) = 0.0;
          continue;
        }
        const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        const double wpp = w(p, p), wqq = w(q, q);
        w(p, p) = wpp - t * apq;
        w(q, q) = wqq + t * apq;
        w(p, q) = 0.0;
        w(q, p) = 0.0;
        for (index_t i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double wip = w(i, p), wiq = w(i, q);
          w(i, p) = wip - s * (wiq + tau * wip);
          w(i, q) = wiq + s * (wip - tau * wiq);
          w(p, i) = w(i, p);
          w(q, i) = w(i, q);
        }
        for (index_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = vip - s * (viq + tau * vip);
          v(i, q) = viq + s * (vip - tau * viq);
        }
      }
    }
  }
  throw std::runtime_error("eigh: Jacobi iteration did not converge in 100 sweeps (n=" +
                           std::to_string(n) + ")");
}

EigenSystem eigh_tridiagonal_ql(const SymMatrix& a) {
  const index_t n = a.size();
  Matrix z = a.to_matrix();
  std::vector<double> d(static_cast<std::size_t>(n), 0.0);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);

  // Householder reduction to tridiagonal form, accumulating the transform
  // in z (classic symmetric reduction, vectors built in place).
  for (index_t i = n - 1; i >= 1; --i) {
    const index_t l = i - 1;
    double h = 0.0;
    double scale = 0.0;
    if (l > 0) {
      for (index_t k = 0; k <= l; ++k) scale += std::fabs(z(i, k));
      if (scale == 0.0) {
        e[static_cast<std::size_t>(i)] = z(i, l);
      } else {
        for (index_t k = 0; k <= l; ++k) {
          z(i, k) /= scale;
          h += z(i, k) * z(i, k);
        }
        double f = z(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[static_cast<std::size_t>(i)] = scale * g;
        h -= f * g;
        z(i, l) = f - g;
        f = 0.0;
        for (index_t j = 0; j <= l; ++j) {
          z(j, i) = z(i, j) / h;
          g = 0.0;
          for (index_t k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
          for (index_t k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
          e[static_cast<std::size_t>(j)] = g / h;
          f += e[static_cast<std::size_t>(j)] * z(i, j);
        }
        const double hh = f / (h + h);
        for (index_t j = 0; j <= l; ++j) {
          f = z(i, j);
          e[static_cast<std::size_t>(j)] = g = e[static_cast<std::size_t>(j)] - hh * f;
          for (index_t k = 0; k <= j; ++k)
            z(j, k) -= f * e[static_cast<std::size_t>(k)] + g * z(i, k);
        }
      }
    } else {
      e[static_cast<std::size_t>(i)] = z(i, l);
    }
    d[static_cast<std::size_t>(i)] = h;
  }

  d[0] = 0.0;
  e[0] = 0.0;
  for (index_t i = 0; i < n; ++i) {
    if (d[static_cast<std::size_t>(i)] != 0.0) {
      for (index_t j = 0; j < i; ++j) {
        double g = 0.0;
        for (index_t k = 0; k < i; ++k) g += z(i, k) * z(k, j);
        for (index_t k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
      }
    }
    d[static_cast<std::size_t>(i)] = z(i, i);
    z(i, i) = 1.0;
    for (index_t j = 0; j < i; ++j) {
      z(j, i) = 0.0;
      z(i, j) = 0.0;
    }
  }

  // Implicit-shift QL on the tridiagonal (d, e), rotating the columns of z.
  for (index_t i = 1; i < n; ++i) e[static_cast<std::size_t>(i - 1)] = e[static_cast<std::size_t>(i)];
  e[static_cast<std::size_t>(n - 1)] = 0.0;

  for (index_t l = 0; l < n; ++l) {
    int iter = 0;
    index_t m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[static_cast<std::size_t>(m)]) +
                          std::fabs(d[static_cast<std::size_t>(m + 1)]);
        if (std::fabs(e[static_cast<std::size_t>(m)]) <= 1e-16 * dd) break;
      }
      if (m != l) {
        if (++iter == 50)
          throw std::runtime_error("eigh: QL iteration did not converge (n=" +
                                   std::to_string(n) + ", l=" + std::to_string(l) + ")");
        double g = (d[static_cast<std::size_t>(l + 1)] - d[static_cast<std::size_t>(l)]) /
                   (2.0 * e[static_cast<std::size_t>(l)]);
        double r = hypot2(g, 1.0);
        g = d[static_cast<std::size_t>(m)] - d[static_cast<std::size_t>(l)] +
            e[static_cast<std::size_t>(l)] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (index_t i = m - 1; i >= l; --i) {
          double f = s * e[static_cast<std::size_t>(i)];
          const double b = c * e[static_cast<std::size_t>(i)];
          r = hypot2(f, g);
          e[static_cast<std::size_t>(i + 1)] = r;
          if (r == 0.0) {
            d[static_cast<std::size_t>(i + 1)] -= p;
            e[static_cast<std::size_t>(m)] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[static_cast<std::size_t>(i + 1)] - p;
          r = (d[static_cast<std::size_t>(i)] - g) * s + 2.0 * c * b;
          p = s * r;
          d[static_cast<std::size_t>(i + 1)] = g + p;
          g = c * r - b;
          for (index_t k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (underflow) continue;
        d[static_cast<std::size_t>(l)] -= p;
        e[static_cast<std::size_t>(l)] = g;
        e[static_cast<std::size_t>(m)] = 0.0;
      }
    } while (m != l);
  }

  return finalize(std::move(d), std::move(z));
}

}  // namespace detail

EigenSystem eigh_descending(const SymMatrix& a) {
  if (a.size() < 1) throw std::invalid_argument("eigh: empty matrix");
  if (!a.all_finite()) throw std::invalid_argument("eigh: non-finite entries in input");
  if (a.size() <= kJacobiMaxDim) return detail::eigh_jacobi(a);
  return detail::eigh_tridiagonal_ql(a);
}

SymMatrix pinv_psd(const SymMatrix& a, double rank_tol) {
  const EigenSystem es = eigh_descending(a);
  const index_t n = a.size();
  const double lam_max = es.eigenvalues.empty() ? 0.0 : es.eigenvalues.front();
  const double lam_min = es.eigenvalues.empty() ? 0.0 : es.eigenvalues.back();
  if (lam_min < -1e-8 * std::max(lam_max, 0.0))
    throw std::domain_error("pinv_psd: input is significantly indefinite (lambda_min=" +
                            std::to_string(lam_min) + ", lambda_max=" + std::to_string(lam_max) + ")");

  const double cut = rank_tol * std::max(lam_max, 0.0);
  Matrix scaled(n, n);
  for (index_t k = 0; k < n; ++k) {
    const double lam = es.eigenvalues[static_cast<std::size_t>(k)];
    const double inv = lam > cut && lam > 0.0 ? 1.0 / lam : 0.0;
    for (index_t i = 0; i < n; ++i) scaled(i, k) = es.vectors(i, k) * inv;
  }
  return SymMatrix::from_full(matmul_nt(scaled, es.vectors));
}

namespace {

/// Block power iteration on the squared operator. Returns the largest
/// absolute eigenvalue estimate and whether the Rayleigh-Ritz value
/// converged to the requested relative tolerance.
struct PowerResult {
  double value = 0.0;
  bool converged = false;
};

PowerResult block_power(const SymOp& apply, index_t n, double tol, int max_iters) {
  const index_t block = std::min<index_t>(n, 8);
  Rng rng(0x5EED5EEDULL);

  std::vector<std::vector<double>> x(static_cast<std::size_t>(block),
                                     std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<std::vector<double>> ax = x;
  std::vector<double> tmp(static_cast<std::size_t>(n));

  for (auto& col : x)
    for (auto& v : col) v = rng.normal();

  auto orthonormalize = [&](std::vector<std::vector<double>>& cols) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < j; ++k) {
          const double c = dot(cols[j], cols[k]);
          for (std::size_t i = 0; i < cols[j].size(); ++i) cols[j][i] -= c * cols[k][i];
        }
      double nrm = norm2(cols[j]);
      if (nrm < 1e-300) {
        // deterministically re-seed a collapsed direction
        for (auto& v : cols[j]) v = rng.normal();
        for (std::size_t k = 0; k < j; ++k) {
          const double c = dot(cols[j], cols[k]);
          for (std::size_t i = 0; i < cols[j].size(); ++i) cols[j][i] -= c * cols[k][i];
        }
        nrm = norm2(cols[j]);
        if (nrm < 1e-300) nrm = 1.0;
      }
      for (auto& v : cols[j]) v /= nrm;
    }
  };

  orthonormalize(x);

  double prev = -1.0;
  int stable = 0;
  for (int it = 0; it < max_iters; ++it) {
    // ax_j = A^2 x_j
    for (index_t j = 0; j < block; ++j) {
      apply(x[static_cast<std::size_t>(j)], tmp);
      apply(tmp, ax[static_cast<std::size_t>(j)]);
    }
    // Rayleigh-Ritz for the top eigenvalue of A^2 on span(x)
    SymMatrix small(block);
    for (index_t i = 0; i < block; ++i)
      for (index_t j = i; j < block; ++j)
        small.set(i, j, dot(x[static_cast<std::size_t>(i)], ax[static_cast<std::size_t>(j)]));
    double theta = 0.0;
    {
      const EigenSystem se = detail::eigh_jacobi(small);
      theta = std::max(se.eigenvalues.front(), 0.0);
    }
    if (theta < 1e-300) return {0.0, true};  // (near-)zero operator

    const double value = std::sqrt(theta);
    if (prev >= 0.0 && std::fabs(value - prev) <= tol * std::max(value, 1e-300)) {
      if (++stable >= 2) return {value, true};
    } else {
      stable = 0;
    }
    prev = value;

    x.swap(ax);
    orthonormalize(x);
  }
  return {prev < 0.0 ? 0.0 : prev, false};
}

}  // namespace

double spectral_norm_op(const SymOp& apply, index_t n, double tol, int max_iters) {
  if (n < 1) throw std::invalid_argument("spectral_norm_op: empty operator");
  const PowerResult r = block_power(apply, n, tol, max_iters);
  return r.value;
}

double spectral_norm(const SymMatrix& a, double tol) {
  if (a.size() < 1) throw std::invalid_argument("spectral_norm: empty matrix");
  if (!a.all_finite()) throw std::invalid_argument("spectral_norm: non-finite entries");
  const SymOp apply = [&a](std::span<const double> in, std::span<double> out) {
    a.apply(in, out);
  };
  const PowerResult r = block_power(apply, a.size(), tol, 10000);
  if (r.converged) return r.value;
  // stall: fall back to the full decomposition
  const EigenSystem es = eigh_descending(a);
  double best = 0.0;
  for (double lam : es.eigenvalues) best = std::max(best, std::fabs(lam));
  return best;
}

Matrix random_orthogonal(index_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_orthogonal: n must be >= 1");
  Rng rng(seed);
  // Work on the transpose so every column operation touches a contiguous
  // row: at(j) holds column j of the Gaussian matrix.
  Matrix at(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) at(j, i) = rng.normal();

  // Householder QR; Q is accumulated afterwards. The sign of each R diagonal
  // entry fixes the factorization, which both makes the output Haar
  // distributed and pins the result for a given seed.
  std::vector<std::vector<double>> reflectors;
  reflectors.reserve(static_cast<std::size_t>(n));
  std::vector<double> diag_signs(static_cast<std::size_t>(n), 1.0);

  for (index_t k = 0; k < n; ++k) {
    double* colk = at.row(k).data();
    std::vector<double> v(static_cast<std::size_t>(n - k), 0.0);
    double nrm2 = 0.0;
    for (index_t i = k; i < n; ++i) {
      v[static_cast<std::size_t>(i - k)] = colk[i];
      nrm2 += colk[i] * colk[i];
    }
    const double nrm = std::sqrt(nrm2);
    if (nrm == 0.0) {
      reflectors.emplace_back();
      continue;
    }
    const double alpha = v[0] >= 0.0 ? -nrm : nrm;
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 == 0.0) {
      reflectors.emplace_back();
      diag_signs[static_cast<std::size_t>(k)] = alpha >= 0.0 ? 1.0 : -1.0;
      continue;
    }
    const double two_over = 2.0 / vnorm2;
#pragma omp parallel for schedule(static)
    for (index_t j = k; j < n; ++j) {
      double* colj = at.row(j).data();
      double proj = 0.0;
      for (index_t i = k; i < n; ++i) proj += v[static_cast<std::size_t>(i - k)] * colj[i];
      proj *= two_over;
      for (index_t i = k; i < n; ++i) colj[i] -= proj * v[static_cast<std::size_t>(i - k)];
    }
    diag_signs[static_cast<std::size_t>(k)] = at(k, k) >= 0.0 ? 1.0 : -1.0;
    reflectors.push_back(std::move(v));
  }

  // Q^T, rows are columns of Q = H_0 H_1 ... H_{n-1} I
  Matrix qt(n, n);
  for (index_t i = 0; i < n; ++i) qt(i, i) = 1.0;
  for (index_t k = n - 1; k >= 0; --k) {
    const auto& v = reflectors[static_cast<std::size_t>(k)];
    if (v.empty()) continue;
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    const double two_over = 2.0 / vnorm2;
#pragma omp parallel for schedule(static)
    for (index_t j = 0; j < n; ++j) {
      double* colj = qt.row(j).data();
      double proj = 0.0;
      for (index_t i = k; i < n; ++i) proj += v[static_cast<std::size_t>(i - k)] * colj[i];
      proj *= two_over;
      for (index_t i = k; i < n; ++i) colj[i] -= proj * v[static_cast<std::size_t>(i - k)];
    }
  }
  Matrix q(n, n);
  for (index_t j = 0; j < n; ++j) {
    const double s = diag_signs[static_cast<std::size_t>(j)];
    const double* colj = qt.row(j).data();
    for (index_t i = 0; i < n; ++i) q(i, j) = s * colj[i];
  }
  return q;
}

}  // namespace nyla
