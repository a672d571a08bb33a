#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nyla/kernels.hpp"
#include "nyla/linalg.hpp"
#include "nyla/matrix.hpp"

namespace nyla {

/// Indices of the sampled landmark columns.
struct SampleSet {
  enum class Scheme { uniform_without_replacement };

  std::vector<index_t> indices;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::uniform_without_replacement;

  index_t count() const { return static_cast<index_t>(indices.size()); }
};

/// m distinct indices drawn uniformly from [0, N); deterministic in the seed.
SampleSet sample_uniform(index_t n, index_t m, std::uint64_t seed);

/// Fitted Nystrom approximation state: the eigendecomposition of the
/// landmark block K_hat, the cross block K_b, and the rank-r featurizer
/// W = V_r D_r^{-1/2} so that phi(x) = W^T (kappa(landmark_j, x))_j and
/// K_tilde = Phi Phi^T with Phi = K_b W.
struct NystromModel {
  SampleSet sample;
  EigenSystem khat_eig;
  index_t rank = 0;
  Matrix kb;    // N x m
  double rank_tol = 1e-10;
  Matrix w;     // m x rank
  Matrix phi;   // N x rank
  std::optional<Dataset> landmarks;             // kept when fit from points
  std::optional<KernelFunction> kernel;

  index_t data_size() const { return kb.rows(); }
  bool degenerate() const { return rank == 0; }
};

struct FitOptions {
  std::optional<index_t> rank;  // cap on the truncation rank, 1 <= rank <= m
  double rank_tol = 1e-10;      // relative eigenvalue cutoff for K_hat
};

/// Fit from any kernel source. Throws std::runtime_error if K_hat is
/// significantly indefinite.
NystromModel fit(const KernelSource& source, const SampleSet& sample,
                 const FitOptions& opts = {});
NystromModel fit(const SymMatrix& k, const SampleSet& sample, const FitOptions& opts = {});
/// Points + kernel variant; retains the landmark points so feature_map can
/// embed unseen points.
NystromModel fit(const Dataset& data, const KernelFunction& kernel, const SampleSet& sample,
                 const FitOptions& opts = {});

/// Materializes K_tilde = K_b pinv_r(K_hat) K_b^T. A fully degenerate model
/// (all K_hat eigenvalues below tolerance) yields the zero matrix.
SymMatrix approximate(const NystromModel& model);

/// || K - K_tilde ||_2 via power iteration on u -> K u - Phi (Phi^T u);
/// K_tilde is never materialized.
double approximation_error(const NystromModel& model, const SymMatrix& k, double tol = 1e-9);
double approximation_error(const NystromModel& model, const KernelSource& k, double tol = 1e-9);

/// Same measurement for K = V diag(lams) V^T, carried out in the eigenbasis
/// where applying K costs O(N m) instead of O(N^2). Algebraically identical
/// to fit + approximation_error on the materialized matrix.
double nystrom_error_from_spectrum(const Matrix& v, std::span<const double> lams,
                                   const SampleSet& sample, double rank_tol = 1e-10,
                                   double tol = 1e-9);

/// phi(x) from the kernel column (kappa(landmark_1, x), ..., kappa(landmark_m, x)).
std::vector<double> feature_map(const NystromModel& model,
                                std::span<const double> landmark_column);
/// phi(x) for a raw point; requires the model to have been fit from points.
std::vector<double> feature_map_point(const NystromModel& model, std::span<const double> x);

}  // namespace nyla
