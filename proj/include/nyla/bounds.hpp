#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nyla/matrix.hpp"
#include "nyla/synthetic.hpp"

namespace nyla {

/// Constants the bound formulas take as given. Defaults of 1 are
/// placeholders and are surfaced in every report.
struct ConstantsConfig {
  double c_dm = 1.0;   // hidden constant of the O(N/sqrt(m)) term
  double c_ab = 1.0;   // compressive-sensing constant C_ab
  double gamma = 1.0;  // compressive-sensing constant gamma
};

/// lambda_{m+1} + c_dm * N / sqrt(m)
double dm_upper(double n, double m, double lambda_m_plus_1, double c_dm);

/// 16 [ln(2/delta)]^2 N^2 / (m lambda_r) + lambda_{r+1}
double thm5_upper(double n, double m, double lambda_r, double lambda_r_plus_1, double delta);

/// (16 mu^2 r / m) * sum_{i>r} lambda_i. Warns on stderr when r > m.
double thm10_upper(double mu, index_t r, index_t m, double tail_sum);

/// Smallest m admitted by the sampling condition
/// m > mu^2 max(16 (ln N / gamma)^2, 2 C_ab ln(3N^3), 4 C_ab^2 ln^2(3N^3)).
index_t thm7_sample_threshold(double mu, index_t n, const ConstantsConfig& constants);

/// N / m^(p-1), the power-law rate with unit constant (log factors dropped).
double thm7_upper(double n, double m, double p);

struct LowerBounds {
  double lb_general = 0.0;   // N / (2(m+1)), constant from the Bernoulli construction
  double lb_powerlaw = 0.0;  // N / m^p, scaling reference with unit constant
};
LowerBounds lower_bounds(double n, double m, double p);

struct BoundContext {
  index_t n = 0;
  index_t m = 0;
  index_t r = 0;         // rank used for the thm5 evaluation
  index_t r_thm10 = 0;   // rank used for the thm10 evaluation
  double delta = 0.05;
  double mu = 0.0;
  double p = 0.0;
  double c = 0.0;
  ConstantsConfig constants;
};

struct TrialMeasurement {
  std::uint64_t seed = 0;
  double measured = 0.0;
};

/// Measured-vs-theory record for one m.
struct BoundReport {
  BoundContext context;
  std::map<std::string, double> bounds;
  std::optional<double> measured;          // median over trials
  std::vector<TrialMeasurement> trials;
  std::map<std::string, double> holds_fraction;  // measured <= bound + 1e-9
};

struct CompareParams {
  std::vector<index_t> m_grid;
  int seed_count = 10;
  std::uint64_t master_seed = 0;
  double delta = 0.05;
  std::optional<index_t> r;       // rank for thm5/thm10; default picks per bound
  std::optional<double> p;        // power-law exponent; default fits the spectrum
  std::optional<double> c;
  double rank_tol = 1e-10;
  ConstantsConfig constants;
};

/// Per-m reports with per-trial measured errors. The spectral overload works
/// in the eigenbasis and never materializes K.
std::vector<BoundReport> compare(const SymMatrix& k, std::span<const double> eigenvalues,
                                 double mu, const CompareParams& params);
std::vector<BoundReport> compare(const SpectralSystem& sys, const CompareParams& params);

/// Least-squares slope of log(median measured) against log(m) across reports.
double measured_log_slope(const std::vector<BoundReport>& reports);

std::string reports_to_json(const std::vector<BoundReport>& reports);
std::string reports_to_csv(const std::vector<BoundReport>& reports);

}  // namespace nyla
