#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nyla/matrix.hpp"
#include "nyla/nystrom.hpp"

namespace nyla {

/// Convex loss with the regularity the dual machinery needs: a Lipschitz
/// bound C on l' (which also bounds the dual domain, |alpha| <= C) and a
/// strong-convexity modulus sigma on the working domain. Hinge loss is
/// deliberately absent: it is not strongly convex.
class LossFunction {
 public:
  enum class Family { squared, logistic };

  /// l(z) = (1-z)^2 / 2. sigma = 1 everywhere; C bounds the dual domain
  /// (the working |l'| bound), generous by default so that clipping stays
  /// inactive at sane regularization levels.
  static LossFunction squared(double lipschitz = 100.0);

  /// l(z) = ln(1 + e^-z). C = 1 exactly; sigma is taken on the bounded
  /// prediction domain |z| <= pred_bound.
  static LossFunction logistic(double pred_bound = 10.0);

  /// Reconstruction from stored fields (model persistence).
  static LossFunction from_fields(Family f, double lipschitz, double sigma);

  Family family() const { return family_; }
  double lipschitz() const { return lipschitz_; }
  double strong_convexity() const { return sigma_; }

  double value(double z) const;
  double deriv(double z) const;
  double second_deriv(double z) const;

  /// Convex conjugate l*(alpha) on the dual domain Omega = [omega_min, omega_max].
  double conjugate(double alpha) const;
  double omega_min() const;
  double omega_max() const;

  std::string name() const { return family_ == Family::squared ? "squared" : "logistic"; }
  static LossFunction by_name(const std::string& name);

 private:
  LossFunction(Family f, double lip, double sigma) : family_(f), lipschitz_(lip), sigma_(sigma) {}

  Family family_;
  double lipschitz_;
  double sigma_;
};

/// Kernel classifier trained on the full Gram matrix through its dual.
/// f(x) = -(1/(N lambda)) sum_i alpha_i y_i kappa(x_i, x).
struct FullModel {
  std::vector<double> alpha;
  std::vector<int> y;
  double lambda = 0.0;
  LossFunction loss = LossFunction::squared();
  std::vector<double> k_beta;    // K (alpha o y), fixed at convergence
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;

  index_t size() const { return static_cast<index_t>(alpha.size()); }
  /// f at training point i.
  double score_training(index_t i) const;
  /// f(x) from the kernel column (kappa(x_1, x), ..., kappa(x_N, x)).
  double score(std::span<const double> kernel_column) const;
};

/// Classifier restricted to the span of the sampled landmarks. Coefficients
/// are stored in the dual-mapped parameterization
/// f(x) = -(1/(N lambda)) sum_j z_j y_j kappa(landmark_j, x)
/// with y_j the landmark labels; w holds the same function in feature
/// coordinates (f(x) = <w, phi(x)>, ||f||_H = ||w||).
struct RestrictedModel {
  std::vector<double> z;
  std::vector<double> w;
  std::vector<int> landmark_y;
  SampleSet sample;
  index_t train_n = 0;  // N of the training problem (enters the score scaling)
  double lambda = 0.0;
  LossFunction loss = LossFunction::squared();
  double objective = 0.0;      // restricted training objective at convergence
  double gradient_norm = 0.0;  // stationarity at convergence (trained models)

  index_t support_count() const;
  /// f(x) from the landmark kernel column.
  double score(std::span<const double> landmark_column) const;
};

/// Classification by sign; ties at zero go to +1.
inline int classify(double score) { return score >= 0.0 ? 1 : -1; }

struct SolveOptions {
  double tol = 1e-8;
  int max_sweeps = 20000;  // dual coordinate ascent sweeps / Newton iterations
};

/// Regularized kernel ERM via its dual, solved by cyclic dual coordinate
/// ascent with a fixed sweep order. Stops when the duality gap drops below
/// tol * (1 + |primal|).
FullModel train_full(const SymMatrix& k, std::span<const int> y, double lambda,
                     const LossFunction& loss, const SolveOptions& opts = {});

/// Dual problem with K replaced by the Nystrom approximation, solved in the
/// factored form (K_tilde = Phi Phi^T is never materialized).
struct DualApproxResult {
  std::vector<double> alpha;
  double dual_objective = 0.0;
  double mapped_objective = 0.0;  // restricted objective of the mapped solution
  double gap = 0.0;
};
DualApproxResult train_dual_approx(const NystromModel& model, std::span<const int> y,
                                   double lambda, const LossFunction& loss,
                                   const SolveOptions& opts = {});

/// The dual-to-restricted mapping: the low-rank dual solution becomes the
/// coefficients of the subspace-restricted classifier.
RestrictedModel map_dual_to_restricted(std::span<const double> alpha, const NystromModel& model,
                                       std::span<const int> y, double lambda,
                                       const LossFunction& loss);

/// Subspace-restricted ERM trained directly in feature space by damped
/// Newton; stops when the gradient norm drops below tol.
RestrictedModel train_restricted(const NystromModel& model, std::span<const int> y, double lambda,
                                 const LossFunction& loss, const SolveOptions& opts = {});
/// Points + kernel variant: fits the Nystrom featurizer on the sample first.
RestrictedModel train_restricted(const Dataset& data, std::span<const int> y,
                                 const SampleSet& sample, const KernelFunction& kernel,
                                 double lambda, const LossFunction& loss,
                                 const SolveOptions& opts = {});

/// Objective of a restricted model on the training data behind `model`.
double restricted_objective(const RestrictedModel& rm, const NystromModel& model,
                            std::span<const int> y);

/// Landmark budget m = ceil(N^(2p/(p^2-1))), capped at N. Sublinear in N
/// exactly when p > 1 + sqrt(2).
struct RecommendedBudget {
  index_t m = 0;
  double exponent = 0.0;
  bool capped = false;     // the N cap was binding
  bool sublinear = false;  // p > 1 + sqrt(2)
};
RecommendedBudget recommended_m(index_t n, double p);

/// Held-out comparison of the full and restricted classifiers on synthetic
/// power-law data, at the recommended budget and at half/double it.
struct GenExperimentConfig {
  double p = 2.8;
  index_t n_train = 2000;
  index_t n_test = 500;
  double noise = 0.05;
  std::vector<double> lambda_grid = {1e-1, 1e-2};  // smaller lambda stalls the dual solver
  LossFunction loss = LossFunction::squared();
  int seed_count = 10;
  std::uint64_t master_seed = 0;
  double rank_tol = 1e-10;
  double tol = 1e-6;
  std::optional<std::vector<index_t>> m_override;  // default: {m/2, m, 2m} at the budget
};

struct GenExperimentRow {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double full_test_loss = 0.0;
  std::vector<index_t> m_values;
  std::vector<double> restricted_test_loss;
  std::vector<double> gap;  // restricted - full
};

struct GenExperimentReport {
  RecommendedBudget budget;
  std::vector<index_t> m_values;      // {m/2, m, 2m} after capping
  std::vector<GenExperimentRow> rows;
  std::vector<double> median_gap;     // per m value
};

GenExperimentReport generalization_experiment(const GenExperimentConfig& config);

/// Model persistence. Coefficients round-trip bit-exactly.
std::string to_json(const RestrictedModel& model, const std::string& kernel_desc = "precomputed");
RestrictedModel restricted_from_json(const std::string& text);
std::string to_json(const FullModel& model, const std::string& kernel_desc = "precomputed");
FullModel full_from_json(const std::string& text);

}  // namespace nyla
