#include <doctest.h>

#include <cmath>

#include "nyla/classifier.hpp"
#include "nyla/linalg.hpp"
#include "nyla/nystrom.hpp"
#include "nyla/rng.hpp"
#include "oracles.hpp"

using namespace nyla;

namespace {

std::vector<int> random_labels(index_t n, Rng& rng) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = rng.uniform() < 0.5 ? -1 : 1;
  return y;
}

struct Instance {
  SymMatrix k;
  std::vector<int> y;
};

Instance random_instance(index_t n, std::uint64_t seed) {
  Rng rng(seed);
  Instance inst{oracles::random_psd(n, rng, 0.05), random_labels(n, rng)};
  // keep kappa(x,x) <= 1, the normalized-kernel scale
  double dmax = 0.0;
  for (index_t i = 0; i < n; ++i) dmax = std::max(dmax, inst.k(i, i));
  SymMatrix kn(n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = i; j < n; ++j) kn.set(i, j, inst.k(i, j) / dmax);
  inst.k = std::move(kn);
  return inst;
}

}  // namespace

TEST_CASE("loss functions: values, derivatives, conjugates") {
  const LossFunction sq = LossFunction::squared();
  CHECK(sq.value(1.0) == 0.0);
  CHECK(sq.value(0.0) == doctest::Approx(0.5));
  CHECK(sq.deriv(0.0) == doctest::Approx(-1.0));
  CHECK(sq.conjugate(-1.0) == doctest::Approx(-0.5));
  CHECK(sq.strong_convexity() == 1.0);

  const LossFunction lg = LossFunction::logistic();
  CHECK(lg.value(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(lg.deriv(0.0) == doctest::Approx(-0.5));
  CHECK(lg.lipschitz() == 1.0);
  CHECK(lg.conjugate(-0.5) == doctest::Approx(-std::log(2.0)));
  CHECK(lg.conjugate(0.0) == doctest::Approx(0.0));
  CHECK(lg.conjugate(-1.0) == doctest::Approx(0.0));
  // Fenchel-Young equality at alpha = l'(z)
  for (double z : {-1.5, 0.3, 2.0}) {
    const double a = lg.deriv(z);
    CHECK(lg.value(z) == doctest::Approx(a * z - lg.conjugate(a)).epsilon(1e-12));
  }
}

TEST_CASE("train_full: huge lambda drives alpha to the loss gradient at zero") {
  const Instance inst = random_instance(12, 101);
  const FullModel sq = train_full(inst.k, inst.y, 1e7, LossFunction::squared(), {1e-10, 20000});
  const FullModel lg = train_full(inst.k, inst.y, 1e7, LossFunction::logistic(), {1e-10, 20000});
  for (index_t i = 0; i < 12; ++i) {
    CHECK(sq.alpha[static_cast<std::size_t>(i)] == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(lg.alpha[static_cast<std::size_t>(i)] == doctest::Approx(-0.5).epsilon(1e-5));
    CHECK(std::fabs(sq.score_training(i)) < 1e-5);
  }
  CHECK(sq.primal_objective == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(lg.primal_objective == doctest::Approx(std::log(2.0)).epsilon(1e-5));
}

TEST_CASE("train_full: squared loss matches the linear-system oracle") {
  const index_t n = 6;
  const Instance inst = random_instance(n, 102);
  const double lambda = 0.05;
  // a 1e-6 match on alpha needs a gap around sigma * (1e-6)^2 / 2
  const FullModel model =
      train_full(inst.k, inst.y, lambda, LossFunction::squared(), {1e-13, 200000});

  // oracle: (I + K/(lambda N)) beta = -y, alpha_i = y_i beta_i
  Matrix a(n, n);
  std::vector<double> rhs(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) {
    rhs[static_cast<std::size_t>(i)] = -static_cast<double>(inst.y[static_cast<std::size_t>(i)]);
    for (index_t j = 0; j < n; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) + inst.k(i, j) / (lambda * static_cast<double>(n));
  }
  const std::vector<double> beta = oracles::gauss_solve(a, rhs);
  for (index_t i = 0; i < n; ++i) {
    const double want = static_cast<double>(inst.y[static_cast<std::size_t>(i)]) *
                        beta[static_cast<std::size_t>(i)];
    CHECK(std::fabs(model.alpha[static_cast<std::size_t>(i)] - want) < 1e-6);
  }
}

TEST_CASE("train_full: dual feasibility and weak duality at several tolerances") {
  const Instance inst = random_instance(40, 103);
  for (const LossFunction& loss : {LossFunction::squared(), LossFunction::logistic()})
    for (double tol : {1e-2, 1e-5, 1e-8}) {
      const FullModel model = train_full(inst.k, inst.y, 1e-2, loss, {tol, 50000});
      CHECK(model.gap <= tol * (1.0 + std::fabs(model.primal_objective)));
      CHECK(model.gap >= -1e-10);  // dual never exceeds primal
      for (double a : model.alpha) CHECK(std::fabs(a) <= loss.lipschitz() + 1e-12);
    }
}

TEST_CASE("train_full: iteration budget is enforced") {
  const Instance inst = random_instance(30, 104);
  CHECK_THROWS_AS(train_full(inst.k, inst.y, 1e-6, LossFunction::logistic(), {1e-12, 1}),
                  std::runtime_error);
}

TEST_CASE("train_dual_approx: full-rank sample reproduces the exact dual") {
  const index_t n = 25;
  const Instance inst = random_instance(n, 105);
  const double lambda = 0.02, tol = 1e-9;
  const FullModel full = train_full(inst.k, inst.y, lambda, LossFunction::squared(), {tol, 50000});
  const NystromModel nm = fit(inst.k, sample_uniform(n, n, 1));
  const DualApproxResult approx =
      train_dual_approx(nm, inst.y, lambda, LossFunction::squared(), {tol, 50000});
  CHECK(std::fabs(approx.dual_objective - full.dual_objective) <= 2 * tol * (1 + std::fabs(full.dual_objective)));
  for (index_t i = 0; i < n; ++i)
    CHECK(approx.alpha[static_cast<std::size_t>(i)] ==
          doctest::Approx(full.alpha[static_cast<std::size_t>(i)]).epsilon(1e-4));
}

TEST_CASE("train_dual_approx: rank-1 approximation matches a scalar line search") {
  const index_t n = 18;
  const Instance inst = random_instance(n, 106);
  const double lambda = 0.05, tol = 1e-10;
  const NystromModel nm = fit(inst.k, sample_uniform(n, 1, 2));
  REQUIRE(nm.rank == 1);
  const DualApproxResult res =
      train_dual_approx(nm, inst.y, lambda, LossFunction::logistic(), {tol, 50000});

  // scalar oracle for the 1-d restricted primal: min_w lambda/2 w^2 + mean loss(y phi w)
  auto obj = [&](double w) {
    double acc = 0.0;
    for (index_t i = 0; i < n; ++i)
      acc += LossFunction::logistic().value(static_cast<double>(inst.y[static_cast<std::size_t>(i)]) *
                                            nm.phi(i, 0) * w);
    return 0.5 * lambda * w * w + acc / static_cast<double>(n);
  };
  double lo = -1e3, hi = 1e3;
  for (int it = 0; it < 300; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (obj(m1) < obj(m2))
      hi = m2;
    else
      lo = m1;
  }
  CHECK(res.mapped_objective == doctest::Approx(obj(0.5 * (lo + hi))).epsilon(1e-7));
}

TEST_CASE("train_dual_approx: approximate dual dominates the exact dual minus the error term") {
  const index_t n = 40;
  const Instance inst = random_instance(n, 107);
  const double lambda = 0.05, tol = 1e-9;
  for (const LossFunction& loss : {LossFunction::squared(4.0), LossFunction::logistic()}) {
    const FullModel full = train_full(inst.k, inst.y, lambda, loss, {tol, 50000});
    const NystromModel nm = fit(inst.k, sample_uniform(n, 10, 3));
    const DualApproxResult approx = train_dual_approx(nm, inst.y, lambda, loss, {tol, 50000});
    const double err = approximation_error(nm, inst.k, 1e-10);
    const double c = loss.lipschitz();
    CHECK(approx.dual_objective >=
          full.dual_objective - c * c * err / (2.0 * lambda * static_cast<double>(n)) - 1e-9);
  }
}

TEST_CASE("map_dual_to_restricted: full-rank mapping reproduces the exact classifier") {
  const index_t n = 20;
  const Instance inst = random_instance(n, 108);
  const double lambda = 0.02, tol = 1e-10;
  const FullModel full = train_full(inst.k, inst.y, lambda, LossFunction::squared(), {tol, 50000});
  const NystromModel nm = fit(inst.k, sample_uniform(n, n, 4));
  const DualApproxResult approx =
      train_dual_approx(nm, inst.y, lambda, LossFunction::squared(), {tol, 50000});
  const RestrictedModel rm =
      map_dual_to_restricted(approx.alpha, nm, inst.y, lambda, LossFunction::squared());

  std::vector<double> col(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) {
    for (index_t j = 0; j < n; ++j)
      col[static_cast<std::size_t>(j)] = inst.k(i, nm.sample.indices[static_cast<std::size_t>(j)]);
    CHECK(std::fabs(rm.score(col) - full.score_training(i)) < 1e-6);
  }
}

TEST_CASE("map_dual_to_restricted: mapped objective equals the direct optimum") {
  for (int rep = 0; rep < 5; ++rep) {
    const index_t n = 60;
    const Instance inst = random_instance(n, 200 + static_cast<std::uint64_t>(rep));
    const double lambda = 0.05, tol = 1e-10;
    const LossFunction loss = rep % 2 ? LossFunction::logistic() : LossFunction::squared();
    const NystromModel nm =
        fit(inst.k, sample_uniform(n, 14, derive_seed(5, static_cast<std::uint64_t>(rep))));
    const DualApproxResult approx = train_dual_approx(nm, inst.y, lambda, loss, {tol, 100000});
    const RestrictedModel mapped = map_dual_to_restricted(approx.alpha, nm, inst.y, lambda, loss);
    const RestrictedModel direct = train_restricted(nm, inst.y, lambda, loss, {1e-12, 50000});
    CHECK(std::fabs(mapped.objective - direct.objective) <= 2e-9 * (1 + std::fabs(direct.objective)));
    CHECK(mapped.objective >= direct.objective - 2e-9);  // direct is the optimum
  }
}

TEST_CASE("map_dual_to_restricted: zero dual maps to the zero predictor") {
  const index_t n = 10;
  const Instance inst = random_instance(n, 109);
  const NystromModel nm = fit(inst.k, sample_uniform(n, 4, 6));
  const std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  const RestrictedModel rm =
      map_dual_to_restricted(alpha, nm, inst.y, 0.1, LossFunction::squared());
  for (double v : rm.z) CHECK(v == 0.0);
  const std::vector<double> col(4, 0.5);
  CHECK(rm.score(col) == 0.0);
  CHECK(classify(rm.score(col)) == 1);  // tie goes to +1
}

TEST_CASE("train_restricted: full-span sample matches the full objective") {
  const index_t n = 22;
  const Instance inst = random_instance(n, 110);
  const double lambda = 0.03, tol = 1e-9;
  for (const LossFunction& loss : {LossFunction::squared(), LossFunction::logistic()}) {
    const FullModel full = train_full(inst.k, inst.y, lambda, loss, {tol, 50000});
    const NystromModel nm = fit(inst.k, sample_uniform(n, n, 7));
    const RestrictedModel rm = train_restricted(nm, inst.y, lambda, loss, {tol, 50000});
    CHECK(std::fabs(rm.objective - full.primal_objective) <=
          2 * tol * (1.0 + std::fabs(full.primal_objective)) + 1e-9);
  }
}

TEST_CASE("train_restricted: never beats the full optimum") {
  for (int rep = 0; rep < 20; ++rep) {
    const index_t n = 30;
    const Instance inst = random_instance(n, 300 + static_cast<std::uint64_t>(rep));
    const double lambda = 0.05;
    const LossFunction loss = rep % 2 ? LossFunction::logistic() : LossFunction::squared();
    const FullModel full = train_full(inst.k, inst.y, lambda, loss, {1e-9, 50000});
    const NystromModel nm =
        fit(inst.k, sample_uniform(n, 6, derive_seed(8, static_cast<std::uint64_t>(rep))));
    const RestrictedModel rm = train_restricted(nm, inst.y, lambda, loss, {1e-9, 50000});
    CHECK(rm.objective >= full.primal_objective - 1e-8);
    CHECK(rm.support_count() <= 6);
  }
}

TEST_CASE("train_restricted: squared loss matches the normal-equation oracle") {
  const index_t n = 35, m = 9;
  const Instance inst = random_instance(n, 111);
  const double lambda = 0.04;
  const NystromModel nm = fit(inst.k, sample_uniform(n, m, 9));
  const index_t r = nm.rank;
  const RestrictedModel rm =
      train_restricted(nm, inst.y, lambda, LossFunction::squared(), {1e-11, 50000});

  // oracle: (lambda I + Phi^T Phi / N) w = Phi^T y / N by Gaussian elimination
  Matrix a(r, r);
  std::vector<double> rhs(static_cast<std::size_t>(r), 0.0);
  for (index_t i = 0; i < n; ++i) {
    const auto row = nm.phi.row(i);
    const double yi = static_cast<double>(inst.y[static_cast<std::size_t>(i)]);
    for (index_t p = 0; p < r; ++p) {
      rhs[static_cast<std::size_t>(p)] += yi * row[static_cast<std::size_t>(p)] / static_cast<double>(n);
      for (index_t q = 0; q < r; ++q)
        a(p, q) += row[static_cast<std::size_t>(p)] * row[static_cast<std::size_t>(q)] /
                   static_cast<double>(n);
    }
  }
  for (index_t p = 0; p < r; ++p) a(p, p) += lambda;
  const std::vector<double> w_star = oracles::gauss_solve(a, rhs);
  for (index_t p = 0; p < r; ++p)
    CHECK(std::fabs(rm.w[static_cast<std::size_t>(p)] - w_star[static_cast<std::size_t>(p)]) < 1e-7);
}

TEST_CASE("predict: scores agree between parameterizations and the direct sum") {
  const index_t n = 26, m = 8;
  const Instance inst = random_instance(n, 112);
  const double lambda = 0.05;
  const NystromModel nm = fit(inst.k, sample_uniform(n, m, 10));
  const RestrictedModel rm =
      train_restricted(nm, inst.y, lambda, LossFunction::logistic(), {1e-9, 50000});

  std::vector<double> col(static_cast<std::size_t>(m));
  for (index_t i = 0; i < n; ++i) {
    for (index_t j = 0; j < m; ++j)
      col[static_cast<std::size_t>(j)] = inst.k(i, nm.sample.indices[static_cast<std::size_t>(j)]);
    // direct recomputation of -(1/(N lambda)) sum_j z_j y_j kappa(x_hat_j, x)
    double acc = 0.0;
    for (index_t j = 0; j < m; ++j)
      acc += rm.z[static_cast<std::size_t>(j)] *
             static_cast<double>(rm.landmark_y[static_cast<std::size_t>(j)]) *
             col[static_cast<std::size_t>(j)];
    const double direct = -acc / (static_cast<double>(n) * lambda);
    CHECK(rm.score(col) == doctest::Approx(direct).epsilon(1e-12));
    // feature-space route gives the same function
    const std::vector<double> phi = feature_map(nm, col);
    CHECK(rm.score(col) == doctest::Approx(dot(rm.w, phi)).epsilon(1e-8));
  }
}

TEST_CASE("predict: full model matches the matrix-product oracle at training points") {
  const index_t n = 30;
  const Instance inst = random_instance(n, 113);
  const double lambda = 0.05;
  const FullModel full = train_full(inst.k, inst.y, lambda, LossFunction::squared(), {1e-9, 50000});
  std::vector<double> beta(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i)
    beta[static_cast<std::size_t>(i)] = full.alpha[static_cast<std::size_t>(i)] *
                                        static_cast<double>(inst.y[static_cast<std::size_t>(i)]);
  inst.k.apply(beta, s);
  for (index_t i = 0; i < n; ++i) {
    const double want = -s[static_cast<std::size_t>(i)] / (static_cast<double>(n) * lambda);
    CHECK(full.score_training(i) == doctest::Approx(want).epsilon(1e-9));
    std::vector<double> col(static_cast<std::size_t>(n));
    for (index_t j = 0; j < n; ++j) col[static_cast<std::size_t>(j)] = inst.k(i, j);
    CHECK(full.score(col) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("full objective within the approximation-error term of the restricted one") {
  for (int rep = 0; rep < 6; ++rep) {
    const index_t n = 40;
    const Instance inst = random_instance(n, 400 + static_cast<std::uint64_t>(rep));
    const double lambda = 0.05;
    const LossFunction loss = rep % 2 ? LossFunction::logistic() : LossFunction::squared(4.0);
    const FullModel full = train_full(inst.k, inst.y, lambda, loss, {1e-10, 50000});
    const NystromModel nm =
        fit(inst.k, sample_uniform(n, 8, derive_seed(14, static_cast<std::uint64_t>(rep))));
    const DualApproxResult approx = train_dual_approx(nm, inst.y, lambda, loss, {1e-10, 100000});
    const RestrictedModel mapped = map_dual_to_restricted(approx.alpha, nm, inst.y, lambda, loss);
    const double err = approximation_error(nm, inst.k, 1e-10);
    const double c = loss.lipschitz();
    CHECK(full.primal_objective <=
          mapped.objective + c * c * err / (2.0 * lambda * static_cast<double>(n)) + 1e-8);
  }
}

TEST_CASE("recommended_m: arithmetic, boundary, and limits") {
  const RecommendedBudget b = recommended_m(10000, 3.0);
  CHECK(b.m == 1000);
  CHECK(b.exponent == doctest::Approx(0.75));
  CHECK(b.sublinear);
  CHECK_FALSE(b.capped);

  const RecommendedBudget boundary = recommended_m(500, 1.0 + std::sqrt(2.0));
  CHECK(boundary.exponent == doctest::Approx(1.0));
  CHECK(boundary.m == 500);
  CHECK(boundary.capped);
  CHECK_FALSE(boundary.sublinear);

  const RecommendedBudget huge_p = recommended_m(1000, 50.0);
  CHECK(huge_p.m >= 1);
  CHECK(huge_p.m <= 2);

  CHECK_THROWS_AS(recommended_m(100, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(recommended_m(100, 0.5), std::invalid_argument);
}

TEST_CASE("model persistence: bit-exact round trip") {
  const index_t n = 24, m = 7;
  const Instance inst = random_instance(n, 114);
  const NystromModel nm = fit(inst.k, sample_uniform(n, m, 11));
  const RestrictedModel rm =
      train_restricted(nm, inst.y, 0.03, LossFunction::logistic(), {1e-9, 50000});
  const RestrictedModel back = restricted_from_json(to_json(rm, "rbf(width=1)"));
  REQUIRE(back.z.size() == rm.z.size());
  for (std::size_t i = 0; i < rm.z.size(); ++i) CHECK(back.z[i] == rm.z[i]);
  for (std::size_t i = 0; i < rm.w.size(); ++i) CHECK(back.w[i] == rm.w[i]);
  CHECK(back.lambda == rm.lambda);
  CHECK(back.train_n == rm.train_n);
  CHECK(back.sample.indices == rm.sample.indices);
  std::vector<double> col(static_cast<std::size_t>(m), 0.3);
  CHECK(back.score(col) == rm.score(col));

  const FullModel full = train_full(inst.k, inst.y, 0.03, LossFunction::squared(), {1e-8, 50000});
  const FullModel fback = full_from_json(to_json(full));
  for (std::size_t i = 0; i < full.alpha.size(); ++i) CHECK(fback.alpha[i] == full.alpha[i]);
  CHECK(fback.gap == full.gap);
}

TEST_CASE("train_restricted: points + kernel variant matches the prefit route") {
  Rng rng(115);
  Dataset ds;
  ds.points = Matrix(30, 3);
  for (index_t i = 0; i < 30; ++i)
    for (index_t j = 0; j < 3; ++j) ds.points(i, j) = rng.normal();
  const std::vector<int> y = random_labels(30, rng);
  const KernelFunction kernel = KernelFunction::rbf(1.0);
  const SampleSet sample = sample_uniform(30, 8, 12);

  const RestrictedModel direct =
      train_restricted(ds, y, sample, kernel, 0.05, LossFunction::squared(), {1e-9, 50000});
  const NystromModel nm = fit(ds, kernel, sample);
  const RestrictedModel prefit =
      train_restricted(nm, y, 0.05, LossFunction::squared(), {1e-9, 50000});
  for (std::size_t i = 0; i < direct.z.size(); ++i)
    CHECK(direct.z[i] == doctest::Approx(prefit.z[i]).epsilon(1e-12));
}

TEST_CASE("generalization_experiment: smoke run at toy scale") {
  GenExperimentConfig config;
  config.p = 2.8;
  config.n_train = 150;
  config.n_test = 60;
  config.seed_count = 2;
  config.master_seed = 21;
  config.lambda_grid = {1e-2, 1e-3};
  config.tol = 1e-6;
  const GenExperimentReport report = generalization_experiment(config);
  REQUIRE(report.rows.size() == 2);
  REQUIRE(report.m_values.size() == 3);
  CHECK(report.budget.m >= 1);
  for (const auto& row : report.rows) {
    CHECK(std::isfinite(row.full_test_loss));
    for (double g : row.gap) CHECK(std::isfinite(g));
  }
  CHECK(report.median_gap.size() == 3);
}
