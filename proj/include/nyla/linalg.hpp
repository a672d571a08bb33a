#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "nyla/matrix.hpp"

namespace nyla {

/// Full spectral decomposition of a symmetric matrix. Eigenvalues are kept
/// in descending order; column k of `vectors` is the eigenvector for
/// eigenvalues[k]. Signs follow a fixed convention (largest-magnitude
/// component positive, ties broken by lowest index) so results are
/// deterministic.
struct EigenSystem {
  std::vector<double> eigenvalues;
  Matrix vectors;

  Matrix reconstruct() const;
};

/// Spectral decomposition sorted descending. Uses cyclic Jacobi rotations
/// for n <= 512 and Householder tridiagonalization + implicit-shift QL above
/// that; both are self-contained and robust for symmetric input.
///
/// Throws std::invalid_argument on non-finite entries and
/// std::runtime_error if the iteration fails to converge.
EigenSystem eigh_descending(const SymMatrix& a);

/// Moore-Penrose pseudo-inverse of a PSD matrix via its eigendecomposition.
/// Eigenvalues <= rank_tol * lambda_max are treated as zero. Throws
/// std::domain_error if the input is significantly indefinite
/// (lambda_min < -1e-8 * lambda_max).
SymMatrix pinv_psd(const SymMatrix& a, double rank_tol = 1e-10);

/// Largest absolute eigenvalue of a symmetric matrix, to relative accuracy
/// `tol`. Block power iteration on the squared operator, falling back to a
/// full eigendecomposition if the iteration stalls.
double spectral_norm(const SymMatrix& a, double tol = 1e-9);

/// Symmetric linear operator y = A x given by a callback; n is the
/// dimension. Same block power iteration as spectral_norm, but with no
/// dense fallback (the operator may be too large to materialize).
using SymOp = std::function<void(std::span<const double>, std::span<double>)>;
double spectral_norm_op(const SymOp& apply, index_t n, double tol = 1e-9,
                        int max_iters = 10000);

/// Haar-distributed random orthogonal matrix: QR of a standard Gaussian
/// matrix with the R-diagonal sign fix, so the result is both Haar and a
/// deterministic function of the seed.
Matrix random_orthogonal(index_t n, std::uint64_t seed);

namespace detail {
// Exposed for cross-checking the two eigensolver paths against each other.
EigenSystem eigh_jacobi(const SymMatrix& a);
EigenSystem eigh_tridiagonal_ql(const SymMatrix& a);
}  // namespace detail

}  // namespace nyla
