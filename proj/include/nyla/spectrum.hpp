#pragma once

#include <optional>
#include <span>

#include "nyla/matrix.hpp"
#include "nyla/nystrom.hpp"

namespace nyla {

/// mu = sqrt(N) * max_ij |V_ij| for an orthogonal V; always in [1, sqrt(N)].
/// Throws std::invalid_argument if V^T V deviates from the identity by more
/// than 1e-6 in Frobenius norm.
double coherence(const Matrix& v);

/// Least-squares fit of log lambda_k against log k.
struct PowerLawFit {
  double p = 0.0;        // -slope
  double c = 0.0;        // exp(intercept)
  index_t first = 0;     // fitted index range, 1-based inclusive
  index_t last = 0;
  double residual = 0.0; // RMS residual of the log-log fit
};

/// Fit over 1-based indices [first, last]; eigenvalues in the range must be
/// strictly positive and the range must contain at least 3 of them.
PowerLawFit fit_power_law(std::span<const double> eigs, index_t first, index_t last);

/// Default fit range [2, min(N/2, last index above 1e-12 * lambda_1)]:
/// drops the often off-trend top eigenvalue and the numerical noise floor.
PowerLawFit fit_power_law(std::span<const double> eigs);

/// Eigengap characterization: the smallest rho in (0, 1/2] with
/// lambda_r >= N/m^rho and lambda_{r+1} <= N/m^{1-rho}. Returns nullopt when
/// no admissible rho exists ("no large eigengap at r").
struct EigengapProfile {
  index_t r = 0;
  double rho = 0.0;
  double lambda_r = 0.0;
  double lambda_r_plus_1 = 0.0;
};
std::optional<EigengapProfile> eigengap_profile(std::span<const double> eigs, index_t n,
                                                index_t m, index_t r);

/// psi(delta) = sqrt( (2/N) sum_i min(delta^2, lambda_i) ). When
/// `normalized` is set (the default reading used throughout), lambda_i is
/// replaced by lambda_i / N.
double psi(double delta, std::span<const double> eigs, index_t n, bool normalized = true);

/// Fixed point of delta^2 = psi(delta), plus the floored value
/// epsilon = max(epsilon_tilde, sqrt(6 ln N / N)).
struct FixedPointEpsilon {
  double epsilon_tilde = 0.0;
  double epsilon = 0.0;
  double floor = 0.0;
  bool floor_active = false;
};
FixedPointEpsilon fixed_point_epsilon(std::span<const double> eigs, index_t n,
                                      bool normalized = true);

/// || L_N - L_m ||_HS for the averaging operators over all indices and over
/// the sample, in closed form from the kernel matrix:
/// sqrt( (1/N^2) sum_ij K_ij^2 - (2/(N m)) sum_{i in [N], j in S} K_ij^2
///       + (1/m^2) sum_{i,j in S} K_ij^2 ).
double hs_distance(const SampleSet& sample, const SymMatrix& k);

}  // namespace nyla
