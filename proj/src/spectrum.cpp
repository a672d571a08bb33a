#include "nyla/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nyla {

double coherence(const Matrix& v) {
  if (v.rows() != v.cols()) throw std::invalid_argument("coherence: matrix not square");
  const index_t n = v.rows();
  // V^T V - I in Frobenius norm
  double dev2 = 0.0;
  for (index_t a = 0; a < n; ++a)
    for (index_t b = a; b < n; ++b) {
      double acc = 0.0;
      for (index_t i = 0; i < n; ++i) acc += v(i, a) * v(i, b);
      const double d = acc - (a == b ? 1.0 : 0.0);
      dev2 += (a == b ? 1.0 : 2.0) * d * d;
    }
  if (std::sqrt(dev2) > 1e-6)
    throw std::invalid_argument("coherence: input is not orthogonal (||V^T V - I||_F = " +
                                std::to_string(std::sqrt(dev2)) + ")");
  double mx = 0.0;
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) mx = std::max(mx, std::fabs(v(i, j)));
  return std::sqrt(static_cast<double>(n)) * mx;
}

PowerLawFit fit_power_law(std::span<const double> eigs, index_t first, index_t last) {
  const index_t n = static_cast<index_t>(eigs.size());
  if (first < 1 || last > n || last < first)
    throw std::invalid_argument("fit_power_law: bad index range");
  index_t count = 0;
  for (index_t k = first; k <= last; ++k) {
    if (!(eigs[static_cast<std::size_t>(k - 1)] > 0.0))
      throw std::invalid_argument("fit_power_law: eigenvalue " + std::to_string(k) +
                                  " in range is not positive");
    ++count;
  }
  if (count < 3) throw std::invalid_argument("fit_power_law: need at least 3 eigenvalues");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (index_t k = first; k <= last; ++k) {
    const double x = std::log(static_cast<double>(k));
    const double y = std::log(eigs[static_cast<std::size_t>(k - 1)]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(count);
  const double denom = nn * sxx - sx * sx;
  const double slope = denom != 0.0 ? (nn * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / nn;

  double rss = 0.0;
  for (index_t k = first; k <= last; ++k) {
    const double x = std::log(static_cast<double>(k));
    const double y = std::log(eigs[static_cast<std::size_t>(k - 1)]);
    const double r = y - (intercept + slope * x);
    rss += r * r;
  }

  PowerLawFit fit;
  fit.p = -slope;
  fit.c = std::exp(intercept);
  fit.first = first;
  fit.last = last;
  fit.residual = std::sqrt(rss / nn);
  return fit;
}

PowerLawFit fit_power_law(std::span<const double> eigs) {
  const index_t n = static_cast<index_t>(eigs.size());
  if (n < 4) throw std::invalid_argument("fit_power_law: spectrum too short for default range");
  const double floor = 1e-12 * eigs[0];
  index_t last = n / 2;
  for (index_t k = 1; k <= last; ++k)
    if (!(eigs[static_cast<std::size_t>(k - 1)] > floor)) {
      last = k - 1;
      break;
    }
  return fit_power_law(eigs, 2, last);
}

std::optional<EigengapProfile> eigengap_profile(std::span<const double> eigs, index_t n,
                                                index_t m, index_t r) {
  if (r < 1 || r >= static_cast<index_t>(eigs.size()))
    throw std::invalid_argument("eigengap_profile: r out of range");
  const double lam_r = eigs[static_cast<std::size_t>(r - 1)];
  const double lam_r1 = eigs[static_cast<std::size_t>(r)];
  if (!(lam_r > 0.0)) throw std::invalid_argument("eigengap_profile: lambda_r must be positive");
  if (m < 2 || n < 1) throw std::invalid_argument("eigengap_profile: need m >= 2, N >= 1");

  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  // Both conditions are of the form rho >= threshold:
  //   lambda_r   >= N m^-rho      <=>  rho >= ln(N/lambda_r)   / ln m
  //   lambda_r+1 <= N m^(rho-1)   <=>  rho >= 1 - ln(N/lambda_r1) / ln m
  // Bisection on the conjunction locates the smallest admissible rho.
  auto admissible = [&](double rho) {
    return lam_r >= nd * std::pow(md, -rho) && lam_r1 <= nd * std::pow(md, rho - 1.0);
  };
  if (!admissible(0.5)) return std::nullopt;  // no rho in (0, 1/2]

  double lo = 0.0, hi = 0.5;  // admissible(hi) holds, admissible(lo) may not
  if (admissible(1e-12)) {
    lo = 1e-12;
  } else {
    while (hi - lo > 1e-8) {
      const double mid = 0.5 * (lo + hi);
      if (admissible(mid))
        hi = mid;
      else
        lo = mid;
    }
    lo = hi;
  }
  EigengapProfile out;
  out.r = r;
  out.rho = std::clamp(lo, 1e-12, 0.5);
  out.lambda_r = lam_r;
  out.lambda_r_plus_1 = lam_r1;
  return out;
}

double psi(double delta, std::span<const double> eigs, index_t n, bool normalized) {
  if (delta < 0.0) throw std::invalid_argument("psi: delta must be >= 0");
  const double d2 = delta * delta;
  const double scale = normalized ? 1.0 / static_cast<double>(n) : 1.0;
  double acc = 0.0;
  for (double lam : eigs) acc += std::min(d2, std::max(lam, 0.0) * scale);
  return std::sqrt(2.0 * acc / static_cast<double>(n));
}

FixedPointEpsilon fixed_point_epsilon(std::span<const double> eigs, index_t n, bool normalized) {
  if (n < 2) throw std::invalid_argument("fixed_point_epsilon: N must be >= 2");
  FixedPointEpsilon out;
  out.floor = std::sqrt(6.0 * std::log(static_cast<double>(n)) / static_cast<double>(n));

  // g(delta) = delta^2 - psi(delta) is negative just above zero (psi is
  // ~ delta sqrt(2) there) and grows without bound, so the positive root is
  // bracketed by doubling and then bisected.
  auto g = [&](double d) { return d * d - psi(d, eigs, n, normalized); };
  double hi = 1.0;
  if (psi(hi, eigs, n, normalized) == 0.0) {
    out.epsilon_tilde = 0.0;  // identically zero spectrum
  } else {
    while (g(hi) < 0.0) hi *= 2.0;
    double lo = 0.0;
    // keep lo on the g<0 side; start just above zero where psi dominates
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (g(mid) < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    out.epsilon_tilde = 0.5 * (lo + hi);
  }
  out.floor_active = out.epsilon_tilde < out.floor;
  out.epsilon = std::max(out.epsilon_tilde, out.floor);
  return out;
}

double hs_distance(const SampleSet& sample, const SymMatrix& k) {
  const index_t n = k.size();
  const index_t m = sample.count();
  if (m < 1) throw std::invalid_argument("hs_distance: empty sample");
  for (index_t s : sample.indices)
    if (s < 0 || s >= n) throw std::invalid_argument("hs_distance: sample index out of range");

  double full = 0.0;
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) full += k(i, j) * k(i, j);

  double cross = 0.0;
  for (index_t i = 0; i < n; ++i)
    for (index_t j : sample.indices) cross += k(i, j) * k(i, j);

  double within = 0.0;
  for (index_t i : sample.indices)
    for (index_t j : sample.indices) within += k(i, j) * k(i, j);

  const double nd = static_cast<double>(n);
  const double md = static_cast<double>(m);
  const double v = full / (nd * nd) - 2.0 * cross / (nd * md) + within / (md * md);
  return std::sqrt(std::max(v, 0.0));
}

}  // namespace nyla
