#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nyla/linalg.hpp"
#include "nyla/matrix.hpp"

namespace nyla {

/// Recipe for a synthetic PSD matrix with a prescribed spectrum.
struct SpectrumSpec {
  enum class VectorSource { random_orthogonal, hadamard, identity, explicit_matrix };

  index_t n = 0;
  std::vector<double> eigenvalues;  // descending, >= 0, absolute scale
  VectorSource source = VectorSource::random_orthogonal;
  std::uint64_t seed = 0;              // for random_orthogonal
  std::optional<Matrix> vectors;       // for explicit_matrix

  static SpectrumSpec power_law(index_t n, double p, double c, bool scale_n,
                                std::uint64_t seed);
};

/// lambda_k = c * k^{-p}, optionally multiplied by n (k is 1-based).
std::vector<double> power_law_spectrum(index_t n, double p, double c, bool scale_n);

/// Normalized Hadamard matrix (entries +-1/sqrt(n)); n must be a power of 2.
Matrix hadamard_matrix(index_t n);

/// Eigenvector matrix and eigenvalues for a spec, without materializing the
/// n x n product.
struct SpectralSystem {
  Matrix vectors;
  std::vector<double> eigenvalues;
};
SpectralSystem synth_system(const SpectrumSpec& spec);

/// K = V diag(lambda) V^T together with the eigensystem used to build it.
std::pair<SymMatrix, EigenSystem> synth_kernel(const SpectrumSpec& spec);

/// N x (m+1) matrix of i.i.d. +-1 entries; the adversarial lower-bound
/// construction uses K = U U^T / (m+1).
Matrix bernoulli_pm1_factor(index_t n, index_t m, std::uint64_t seed);

/// K = U U^T / (m+1) with U as above. Diagonal entries are exactly 1 and
/// rank(K) <= m+1.
SymMatrix bernoulli_lower_bound_kernel(index_t n, index_t m, std::uint64_t seed);

/// Labels drawn from a Gaussian process with covariance V diag(lambda) V^T:
/// y = sign(V diag(sqrt(lambda)) xi), then a `noise` fraction of signs is
/// flipped. Deterministic in the seed.
std::vector<int> gp_labels(const Matrix& vectors, std::span<const double> eigenvalues,
                           std::uint64_t seed, double noise);

}  // namespace nyla
