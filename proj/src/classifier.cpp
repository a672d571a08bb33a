#include "nyla/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "nyla/rng.hpp"
#include "nyla/synthetic.hpp"

namespace nyla {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

void validate_labels(std::span<const int> y) {
  for (int v : y)
    if (v != 1 && v != -1) throw std::invalid_argument("labels must be in {-1, +1}");
}

}  // namespace

LossFunction LossFunction::squared(double lipschitz) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("squared loss: lipschitz must be > 0");
  return LossFunction(Family::squared, lipschitz, 1.0);
}

LossFunction LossFunction::logistic(double pred_bound) {
  if (!(pred_bound > 0.0)) throw std::invalid_argument("logistic loss: pred_bound must be > 0");
  const double e = std::exp(pred_bound);
  return LossFunction(Family::logistic, 1.0, e / ((1.0 + e) * (1.0 + e)));
}

double LossFunction::value(double z) const {
  if (family_ == Family::squared) {
    const double d = 1.0 - z;
    return 0.5 * d * d;
  }
  return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

double LossFunction::deriv(double z) const {
  if (family_ == Family::squared) return z - 1.0;
  return -1.0 / (1.0 + std::exp(z));
}

double LossFunction::second_deriv(double z) const {
  if (family_ == Family::squared) return 1.0;
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 - s);
}

double LossFunction::conjugate(double alpha) const {
  if (family_ == Family::squared) {
    if (std::fabs(alpha) > lipschitz_ * (1.0 + 1e-12))
      throw std::invalid_argument("conjugate: alpha outside the dual domain");
    return alpha + 0.5 * alpha * alpha;
  }
  if (alpha < -1.0 - 1e-12 || alpha > 1e-12)
    throw std::invalid_argument("conjugate: alpha outside [-1, 0]");
  const double a = std::clamp(alpha, -1.0, 0.0);
  return xlogx(-a) + xlogx(1.0 + a);
}

double LossFunction::omega_min() const {
  return family_ == Family::squared ? -lipschitz_ : -1.0;
}

double LossFunction::omega_max() const { return family_ == Family::squared ? lipschitz_ : 0.0; }

LossFunction LossFunction::from_fields(Family f, double lipschitz, double sigma) {
  return LossFunction(f, lipschitz, sigma);
}

LossFunction LossFunction::by_name(const std::string& name) {
  if (name == "squared") return squared();
  if (name == "logistic") return logistic();
  throw std::invalid_argument("unknown loss: '" + name + "' (expected squared or logistic)");
}

double FullModel::score_training(index_t i) const {
  return -k_beta[static_cast<std::size_t>(i)] / (lambda * static_cast<double>(size()));
}

double FullModel::score(std::span<const double> kernel_column) const {
  const index_t n = size();
  if (static_cast<index_t>(kernel_column.size()) != n)
    throw std::invalid_argument("FullModel::score: kernel column has wrong length");
  double acc = 0.0;
  for (index_t j = 0; j < n; ++j)
    acc += alpha[static_cast<std::size_t>(j)] * static_cast<double>(y[static_cast<std::size_t>(j)]) *
           kernel_column[static_cast<std::size_t>(j)];
  return -acc / (lambda * static_cast<double>(n));
}

index_t RestrictedModel::support_count() const {
  index_t c = 0;
  for (double v : z)
    if (v != 0.0) ++c;
  return c;
}

double RestrictedModel::score(std::span<const double> landmark_column) const {
  const index_t m = static_cast<index_t>(z.size());
  if (static_cast<index_t>(landmark_column.size()) != m)
    throw std::invalid_argument("RestrictedModel::score: landmark column has wrong length");
  double acc = 0.0;
  for (index_t j = 0; j < m; ++j)
    acc += z[static_cast<std::size_t>(j)] *
           static_cast<double>(landmark_y[static_cast<std::size_t>(j)]) *
           landmark_column[static_cast<std::size_t>(j)];
  return -acc / (lambda * static_cast<double>(train_n));
}

namespace {

/// Exact coordinate maximizer of the dual at coordinate i:
///   max_a -(1/N) l*(a) - (1/(2 lambda N^2)) (K_ii a^2 + 2 a y_i s_other)
/// For the squared loss this is a clipped closed form; for logistic the
/// strictly increasing stationarity function is bisected.
double coordinate_max(const LossFunction& loss, double kii, double yi_s_other, double lambda_n) {
  if (loss.family() == LossFunction::Family::squared) {
    const double a = -(1.0 + yi_s_other / lambda_n) / (1.0 + kii / lambda_n);
    return std::clamp(a, loss.omega_min(), loss.omega_max());
  }
  auto g = [&](double a) {
    return std::log((1.0 + a) / (-a)) + (kii * a + yi_s_other) / lambda_n;
  };
  double lo = -1.0 + 1e-15;
  double hi = -1e-15;
  if (g(lo) >= 0.0) return lo;
  if (g(hi) <= 0.0) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Objectives {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

/// Primal/dual objectives for the regularized-ERM pair given the quadratic
/// form value q = beta^T K beta and margins f_i = -s_i / (lambda N).
Objectives objectives(const LossFunction& loss, std::span<const double> alpha,
                      std::span<const int> y, std::span<const double> s, double q,
                      double lambda) {
  const double n = static_cast<double>(alpha.size());
  double loss_sum = 0.0;
  double conj_sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double fi = -s[i] / (lambda * n);
    loss_sum += loss.value(static_cast<double>(y[i]) * fi);
    conj_sum += loss.conjugate(alpha[i]);
  }
  Objectives o;
  o.primal = 0.5 * lambda * q / (lambda * n * lambda * n) + loss_sum / n;
  o.dual = -conj_sum / n - q / (2.0 * lambda * n * n);
  o.gap = o.primal - o.dual;
  return o;
}

}  // namespace

FullModel train_full(const SymMatrix& k, std::span<const int> y, double lambda,
                     const LossFunction& loss, const SolveOptions& opts) {
  const index_t n = k.size();
  if (static_cast<index_t>(y.size()) != n)
    throw std::invalid_argument("train_full: label count does not match K");
  if (!(lambda > 0.0)) throw std::invalid_argument("train_full: lambda must be > 0");
  validate_labels(y);
  if (!k.all_finite()) throw std::invalid_argument("train_full: non-finite kernel entries");

  const double lambda_n = lambda * static_cast<double>(n);
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double> beta(static_cast<std::size_t>(n), 0.0);
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);  // s = K beta, updated incrementally

  auto refresh_s = [&]() { k.apply(beta, s); };

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (index_t i = 0; i < n; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const double kii = k(i, i);
      const double yi = static_cast<double>(y[ii]);
      const double s_other = s[ii] - kii * beta[ii];
      const double a = coordinate_max(loss, kii, yi * s_other, lambda_n);
      const double dbeta = a * yi - beta[ii];
      if (dbeta != 0.0) {
        const auto row = k.row(i);
        for (index_t j = 0; j < n; ++j) s[static_cast<std::size_t>(j)] += dbeta * row[static_cast<std::size_t>(j)];
        beta[ii] += dbeta;
        alpha[ii] = a;
      }
    }
    if (sweep % 32 == 0) refresh_s();

    const Objectives o = objectives(loss, alpha, y, s, dot(beta, s), lambda);
    if (o.gap <= opts.tol * (1.0 + std::fabs(o.primal))) {
      refresh_s();
      const Objectives exact = objectives(loss, alpha, y, s, dot(beta, s), lambda);
      if (exact.gap <= opts.tol * (1.0 + std::fabs(exact.primal))) {
        FullModel model{std::move(alpha), std::vector<int>(y.begin(), y.end()), lambda, loss,
                        std::move(s), exact.primal, exact.dual, exact.gap};
        return model;
      }
    }
  }
  throw std::runtime_error("train_full: duality gap did not reach tolerance within " +
                           std::to_string(opts.max_sweeps) + " sweeps");
}

DualApproxResult train_dual_approx(const NystromModel& model, std::span<const int> y,
                                   double lambda, const LossFunction& loss,
                                   const SolveOptions& opts) {
  const index_t n = model.data_size();
  const index_t r = model.rank;
  if (static_cast<index_t>(y.size()) != n)
    throw std::invalid_argument("train_dual_approx: label count does not match the model");
  if (!(lambda > 0.0)) throw std::invalid_argument("train_dual_approx: lambda must be > 0");
  validate_labels(y);

  const double lambda_n = lambda * static_cast<double>(n);
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double> beta(static_cast<std::size_t>(n), 0.0);
  std::vector<double> t(static_cast<std::size_t>(r), 0.0);  // t = Phi^T beta
  std::vector<double> ktilde_diag(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) {
    const auto row = model.phi.row(i);
    ktilde_diag[static_cast<std::size_t>(i)] = dot(row, row);
  }
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);  // K_tilde beta, for objective evals

  auto objectives_now = [&]() {
    model.phi.apply_transposed(beta, t);
    model.phi.apply(t, s);
    return objectives(loss, alpha, y, s, dot(t, t), lambda);
  };

  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (index_t i = 0; i < n; ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const auto row = model.phi.row(i);
      const double kii = ktilde_diag[ii];
      const double yi = static_cast<double>(y[ii]);
      const double si = dot(row, t);
      const double s_other = si - kii * beta[ii];
      const double a = coordinate_max(loss, kii, yi * s_other, lambda_n);
      const double dbeta = a * yi - beta[ii];
      if (dbeta != 0.0) {
        for (index_t q = 0; q < r; ++q)
          t[static_cast<std::size_t>(q)] += dbeta * row[static_cast<std::size_t>(q)];
        beta[ii] += dbeta;
        alpha[ii] = a;
      }
    }
    const Objectives o = objectives_now();  // refreshes t and s exactly
    if (o.gap <= opts.tol * (1.0 + std::fabs(o.primal))) {
      DualApproxResult res;
      res.alpha = std::move(alpha);
      res.dual_objective = o.dual;
      res.mapped_objective = o.primal;
      res.gap = o.gap;
      return res;
    }
  }
  throw std::runtime_error("train_dual_approx: duality gap did not reach tolerance within " +
                           std::to_string(opts.max_sweeps) + " sweeps");
}

namespace {

/// Solves H x = b for symmetric positive definite H (dense Cholesky).
std::vector<double> spd_solve(Matrix h, std::vector<double> b) {
  const index_t n = h.rows();
  for (index_t j = 0; j < n; ++j) {
    double d = h(j, j);
    for (index_t k = 0; k < j; ++k) d -= h(j, k) * h(j, k);
    if (!(d > 0.0)) throw std::runtime_error("spd_solve: matrix is not positive definite");
    const double ljj = std::sqrt(d);
    h(j, j) = ljj;
    for (index_t i = j + 1; i < n; ++i) {
      double v = h(i, j);
      for (index_t k = 0; k < j; ++k) v -= h(i, k) * h(j, k);
      h(i, j) = v / ljj;
    }
  }
  for (index_t i = 0; i < n; ++i) {
    double v = b[static_cast<std::size_t>(i)];
    for (index_t k = 0; k < i; ++k) v -= h(i, k) * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = v / h(i, i);
  }
  for (index_t i = n - 1; i >= 0; --i) {
    double v = b[static_cast<std::size_t>(i)];
    for (index_t k = i + 1; k < n; ++k) v -= h(k, i) * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = v / h(i, i);
  }
  return b;
}

/// z and landmark labels from feature-space coordinates w: the natural
/// coefficients are c = W w, stored as z_j = -lambda N c_j y_j so that the
/// model's score formula reproduces f.
RestrictedModel pack_restricted(const std::vector<double>& w, const NystromModel& model,
                                std::span<const int> y, double lambda, const LossFunction& loss) {
  const index_t m = model.sample.count();
  const index_t n = model.data_size();
  RestrictedModel rm;
  rm.w = w;
  rm.sample = model.sample;
  rm.lambda = lambda;
  rm.loss = loss;
  rm.train_n = n;
  rm.landmark_y.resize(static_cast<std::size_t>(m));
  for (index_t j = 0; j < m; ++j)
    rm.landmark_y[static_cast<std::size_t>(j)] =
        y[static_cast<std::size_t>(model.sample.indices[static_cast<std::size_t>(j)])];
  std::vector<double> c(static_cast<std::size_t>(m), 0.0);
  if (model.rank > 0) model.w.apply(w, c);
  rm.z.resize(static_cast<std::size_t>(m));
  for (index_t j = 0; j < m; ++j)
    rm.z[static_cast<std::size_t>(j)] = -lambda * static_cast<double>(n) *
                                        c[static_cast<std::size_t>(j)] *
                                        static_cast<double>(rm.landmark_y[static_cast<std::size_t>(j)]);
  return rm;
}

double objective_of_w(const std::vector<double>& w, const NystromModel& model,
                      std::span<const int> y, double lambda, const LossFunction& loss) {
  const index_t n = model.data_size();
  double loss_sum = 0.0;
  for (index_t i = 0; i < n; ++i) {
    const double fi = model.rank > 0 ? dot(model.phi.row(i), w) : 0.0;
    loss_sum += loss.value(static_cast<double>(y[static_cast<std::size_t>(i)]) * fi);
  }
  return 0.5 * lambda * dot(w, w) + loss_sum / static_cast<double>(n);
}

double gradient_of_w(const std::vector<double>& w, const NystromModel& model,
                     std::span<const int> y, double lambda, const LossFunction& loss,
                     std::vector<double>& grad_out) {
  const index_t n = model.data_size();
  const index_t r = model.rank;
  grad_out.assign(static_cast<std::size_t>(r), 0.0);
  for (index_t i = 0; i < n; ++i) {
    const auto row = model.phi.row(i);
    const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
    const double g = loss.deriv(yi * dot(row, w)) * yi / static_cast<double>(n);
    for (index_t q = 0; q < r; ++q)
      grad_out[static_cast<std::size_t>(q)] += g * row[static_cast<std::size_t>(q)];
  }
  for (index_t q = 0; q < r; ++q) grad_out[static_cast<std::size_t>(q)] += lambda * w[static_cast<std::size_t>(q)];
  return norm2(grad_out);
}

}  // namespace

RestrictedModel map_dual_to_restricted(std::span<const double> alpha, const NystromModel& model,
                                       std::span<const int> y, double lambda,
                                       const LossFunction& loss) {
  const index_t n = model.data_size();
  if (static_cast<index_t>(alpha.size()) != n || static_cast<index_t>(y.size()) != n)
    throw std::invalid_argument("map_dual_to_restricted: dimension mismatch");
  validate_labels(y);
  const index_t r = model.rank;
  std::vector<double> beta(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i)
    beta[static_cast<std::size_t>(i)] =
        alpha[static_cast<std::size_t>(i)] * static_cast<double>(y[static_cast<std::size_t>(i)]);
  std::vector<double> w(static_cast<std::size_t>(r), 0.0);
  if (r > 0) {
    model.phi.apply_transposed(beta, w);
    const double scale = -1.0 / (lambda * static_cast<double>(n));
    for (auto& v : w) v *= scale;
  }
  RestrictedModel rm = pack_restricted(w, model, y, lambda, loss);
  rm.objective = objective_of_w(w, model, y, lambda, loss);
  std::vector<double> grad;
  rm.gradient_norm = gradient_of_w(w, model, y, lambda, loss, grad);
  return rm;
}

RestrictedModel train_restricted(const NystromModel& model, std::span<const int> y, double lambda,
                                 const LossFunction& loss, const SolveOptions& opts) {
  const index_t n = model.data_size();
  if (static_cast<index_t>(y.size()) != n)
    throw std::invalid_argument("train_restricted: label count does not match the model");
  if (!(lambda > 0.0)) throw std::invalid_argument("train_restricted: lambda must be > 0");
  validate_labels(y);
  const index_t r = model.rank;

  std::vector<double> w(static_cast<std::size_t>(r), 0.0);
  if (r == 0) {
    RestrictedModel rm = pack_restricted(w, model, y, lambda, loss);
    rm.objective = objective_of_w(w, model, y, lambda, loss);
    rm.gradient_norm = 0.0;
    return rm;
  }

  std::vector<double> grad;
  double fw = objective_of_w(w, model, y, lambda, loss);
  const int max_newton = std::max(opts.max_sweeps / 100, 50);
  for (int it = 0; it < max_newton; ++it) {
    const double gn = gradient_of_w(w, model, y, lambda, loss, grad);
    if (gn <= opts.tol) {
      RestrictedModel rm = pack_restricted(w, model, y, lambda, loss);
      rm.objective = fw;
      rm.gradient_norm = gn;
      return rm;
    }

    // Hessian: lambda I + (1/N) Phi^T diag(l'') Phi
    Matrix h(r, r);
    {
      std::vector<double> d(static_cast<std::size_t>(n));
      for (index_t i = 0; i < n; ++i) {
        const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
        d[static_cast<std::size_t>(i)] =
            loss.second_deriv(yi * dot(model.phi.row(i), w)) / static_cast<double>(n);
      }
#pragma omp parallel for schedule(dynamic, 4)
      for (index_t a = 0; a < r; ++a)
        for (index_t i = 0; i < n; ++i) {
          const double da = d[static_cast<std::size_t>(i)];
          if (da == 0.0) continue;
          const auto row = model.phi.row(i);
          const double va = da * row[static_cast<std::size_t>(a)];
          double* ha = h.row(a).data();
          for (index_t b = a; b < r; ++b) ha[b] += va * row[static_cast<std::size_t>(b)];
        }
      for (index_t a = 0; a < r; ++a) {
        h(a, a) += lambda;
        for (index_t b = a + 1; b < r; ++b) h(b, a) = h(a, b);
      }
    }

    std::vector<double> neg_grad(grad);
    for (auto& v : neg_grad) v = -v;
    const std::vector<double> dir = spd_solve(std::move(h), std::move(neg_grad));

    const double slope = dot(grad, dir);  // negative for a descent direction
    double step = 1.0;
    std::vector<double> trial(w.size());
    double f_trial = fw;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t q = 0; q < w.size(); ++q) trial[q] = w[q] + step * dir[q];
      f_trial = objective_of_w(trial, model, y, lambda, loss);
      if (f_trial <= fw + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // progress is below rounding noise; the iterate is numerically optimal
      throw std::runtime_error(
          "train_restricted: stalled at gradient norm " + std::to_string(gn) +
          " (tolerance " + std::to_string(opts.tol) + " is below the attainable floor)");
    }
    w = trial;
    fw = f_trial;
  }
  throw std::runtime_error("train_restricted: gradient norm did not reach tolerance");
}

RestrictedModel train_restricted(const Dataset& data, std::span<const int> y,
                                 const SampleSet& sample, const KernelFunction& kernel,
                                 double lambda, const LossFunction& loss,
                                 const SolveOptions& opts) {
  const NystromModel model = fit(data, kernel, sample);
  return train_restricted(model, y, lambda, loss, opts);
}

double restricted_objective(const RestrictedModel& rm, const NystromModel& model,
                            std::span<const int> y) {
  return objective_of_w(rm.w, model, y, rm.lambda, rm.loss);
}

RecommendedBudget recommended_m(index_t n, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("recommended_m: requires p > 1");
  if (n < 1) throw std::invalid_argument("recommended_m: N must be >= 1");
  RecommendedBudget b;
  b.exponent = 2.0 * p / (p * p - 1.0);
  b.sublinear = p > 1.0 + std::sqrt(2.0);
  const double v = std::pow(static_cast<double>(n), b.exponent);
  const double m_raw = std::ceil(v * (1.0 - 1e-12));
  b.capped = m_raw >= static_cast<double>(n);
  b.m = b.capped ? n : std::max<index_t>(1, static_cast<index_t>(m_raw));
  return b;
}

GenExperimentReport generalization_experiment(const GenExperimentConfig& config) {
  if (config.seed_count < 1) throw std::invalid_argument("generalization_experiment: need seeds");
  const index_t n_total = config.n_train + config.n_test;

  const std::uint64_t kernel_seed = derive_seed(config.master_seed, 1ULL << 32);
  const SpectrumSpec spec = SpectrumSpec::power_law(n_total, config.p, 1.0, true, kernel_seed);
  auto [k_all, es] = synth_kernel(spec);

  SymMatrix k_train(config.n_train);
  for (index_t i = 0; i < config.n_train; ++i)
    for (index_t j = i; j < config.n_train; ++j) k_train.set(i, j, k_all(i, j));

  GenExperimentReport report;
  report.budget = recommended_m(config.n_train, config.p);
  if (config.m_override) {
    for (index_t m : *config.m_override) {
      if (m < 1 || m > config.n_train)
        throw std::invalid_argument("generalization_experiment: m out of range");
      report.m_values.push_back(m);
    }
  } else {
    const index_t m0 = report.budget.m;
    for (index_t m : {std::max<index_t>(1, m0 / 2), m0, std::min(config.n_train, 2 * m0)})
      report.m_values.push_back(m);
  }

  // validation split for the lambda grid: last 20% of the training block
  const index_t n_fit = config.n_train - config.n_train / 5;
  SymMatrix k_fit(n_fit);
  for (index_t i = 0; i < n_fit; ++i)
    for (index_t j = i; j < n_fit; ++j) k_fit.set(i, j, k_train(i, j));

  const SolveOptions solve{config.tol, 20000};

  for (int s = 0; s < config.seed_count; ++s) {
    const std::uint64_t seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(s));
    const std::vector<int> y_all = gp_labels(es.vectors, es.eigenvalues, seed, config.noise);
    const std::vector<int> y_train(y_all.begin(), y_all.begin() + config.n_train);
    const std::vector<int> y_fit(y_train.begin(), y_train.begin() + n_fit);

    // pick lambda on the validation slice using the full classifier
    double best_lambda = config.lambda_grid.front();
    double best_val = std::numeric_limits<double>::infinity();
    for (double lam : config.lambda_grid) {
      const FullModel fm = train_full(k_fit, y_fit, lam, config.loss, solve);
      double val_loss = 0.0;
      std::vector<double> col(static_cast<std::size_t>(n_fit));
      for (index_t i = n_fit; i < config.n_train; ++i) {
        for (index_t j = 0; j < n_fit; ++j) col[static_cast<std::size_t>(j)] = k_train(i, j);
        val_loss += config.loss.value(static_cast<double>(y_train[static_cast<std::size_t>(i)]) *
                                      fm.score(col));
      }
      val_loss /= static_cast<double>(config.n_train - n_fit);
      if (val_loss < best_val) {
        best_val = val_loss;
        best_lambda = lam;
      }
    }

    const FullModel full = train_full(k_train, y_train, best_lambda, config.loss, solve);

    GenExperimentRow row;
    row.seed = seed;
    row.lambda = best_lambda;
    row.m_values = report.m_values;

    // held-out loss of the full model
    {
      double acc = 0.0;
      std::vector<double> col(static_cast<std::size_t>(config.n_train));
      for (index_t i = config.n_train; i < n_total; ++i) {
        for (index_t j = 0; j < config.n_train; ++j) col[static_cast<std::size_t>(j)] = k_all(i, j);
        acc += config.loss.value(static_cast<double>(y_all[static_cast<std::size_t>(i)]) *
                                 full.score(col));
      }
      row.full_test_loss = acc / static_cast<double>(config.n_test);
    }

    for (std::size_t mi = 0; mi < report.m_values.size(); ++mi) {
      const index_t m = report.m_values[mi];
      const SampleSet sample =
          sample_uniform(config.n_train, m, derive_seed(seed, 7000 + static_cast<std::uint64_t>(mi)));
      const NystromModel nm = fit(k_train, sample, {.rank = std::nullopt, .rank_tol = config.rank_tol});
      const RestrictedModel rm = train_restricted(nm, y_train, best_lambda, config.loss, solve);

      double acc = 0.0;
      std::vector<double> col(static_cast<std::size_t>(m));
      for (index_t i = config.n_train; i < n_total; ++i) {
        for (index_t j = 0; j < m; ++j)
          col[static_cast<std::size_t>(j)] =
              k_all(i, sample.indices[static_cast<std::size_t>(j)]);
        acc += config.loss.value(static_cast<double>(y_all[static_cast<std::size_t>(i)]) *
                                 rm.score(col));
      }
      const double test_loss = acc / static_cast<double>(config.n_test);
      row.restricted_test_loss.push_back(test_loss);
      row.gap.push_back(test_loss - row.full_test_loss);
    }
    report.rows.push_back(std::move(row));
  }

  for (std::size_t mi = 0; mi < report.m_values.size(); ++mi) {
    std::vector<double> gaps;
    for (const auto& row : report.rows) gaps.push_back(row.gap[mi]);
    std::sort(gaps.begin(), gaps.end());
    const std::size_t k = gaps.size() / 2;
    report.median_gap.push_back(gaps.size() % 2 ? gaps[k] : 0.5 * (gaps[k - 1] + gaps[k]));
  }
  return report;
}

namespace {

nlohmann::json loss_to_json(const LossFunction& loss) {
  return {{"family", loss.name()},
          {"lipschitz", loss.lipschitz()},
          {"strong_convexity", loss.strong_convexity()}};
}

LossFunction loss_from_json(const nlohmann::json& j) {
  const std::string family = j.at("family");
  return LossFunction::from_fields(family == "squared" ? LossFunction::Family::squared
                                                       : LossFunction::Family::logistic,
                                   j.at("lipschitz"), j.at("strong_convexity"));
}

}  // namespace

std::string to_json(const RestrictedModel& model, const std::string& kernel_desc) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["type"] = "restricted";
  j["loss"] = loss_to_json(model.loss);
  j["lambda"] = model.lambda;
  j["sample"] = {{"indices", model.sample.indices}, {"seed", model.sample.seed}};
  j["z"] = model.z;
  j["w"] = model.w;
  j["landmark_y"] = model.landmark_y;
  j["n"] = model.train_n;
  j["objective"] = model.objective;
  j["gradient_norm"] = model.gradient_norm;
  j["kernel"] = kernel_desc;
  return j.dump(2);
}

RestrictedModel restricted_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("type") != "restricted")
    throw std::invalid_argument("restricted_from_json: not a restricted model document");
  RestrictedModel m;
  m.loss = loss_from_json(j.at("loss"));
  m.lambda = j.at("lambda");
  m.sample.indices = j.at("sample").at("indices").get<std::vector<index_t>>();
  m.sample.seed = j.at("sample").at("seed");
  m.z = j.at("z").get<std::vector<double>>();
  m.w = j.at("w").get<std::vector<double>>();
  m.landmark_y = j.at("landmark_y").get<std::vector<int>>();
  m.train_n = j.at("n");
  m.objective = j.at("objective");
  m.gradient_norm = j.at("gradient_norm");
  return m;
}

std::string to_json(const FullModel& model, const std::string& kernel_desc) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["type"] = "full";
  j["loss"] = loss_to_json(model.loss);
  j["lambda"] = model.lambda;
  j["alpha"] = model.alpha;
  j["y"] = model.y;
  j["k_beta"] = model.k_beta;
  j["primal_objective"] = model.primal_objective;
  j["dual_objective"] = model.dual_objective;
  j["gap"] = model.gap;
  j["kernel"] = kernel_desc;
  return j.dump(2);
}

FullModel full_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("type") != "full") throw std::invalid_argument("full_from_json: not a full model document");
  FullModel m;
  m.loss = loss_from_json(j.at("loss"));
  m.lambda = j.at("lambda");
  m.alpha = j.at("alpha").get<std::vector<double>>();
  m.y = j.at("y").get<std::vector<int>>();
  m.k_beta = j.at("k_beta").get<std::vector<double>>();
  m.primal_objective = j.at("primal_objective");
  m.dual_objective = j.at("dual_objective");
  m.gap = j.at("gap");
  return m;
}

}  // namespace nyla
