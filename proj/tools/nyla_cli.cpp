// nyla: Nystrom approximation and kernel classification experiments.
//
// Subcommands: approx, bounds, spectrum, lowerbound, classify, scaling.
// Reports are written atomically (temp file + rename) as JSON or CSV and are
// byte-identical for a fixed config and master seed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nyla/bounds.hpp"
#include "nyla/classifier.hpp"
#include "nyla/dataset_io.hpp"
#include "nyla/kernels.hpp"
#include "nyla/linalg.hpp"
#include "nyla/nystrom.hpp"
#include "nyla/rng.hpp"
#include "nyla/spectrum.hpp"
#include "nyla/synthetic.hpp"

namespace {

using json = nlohmann::json;
using namespace nyla;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

/// Configuration mistakes detected after flag parsing.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOpts {
  std::string data_path;
  std::string format = "csv";
  std::string kernel = "rbf";
  double width = 1.0;
  index_t n = 0;
  double p = 0.0;
  double c = 1.0;
  double rho = -1.0;
  index_t r = 0;
  index_t m_ref = 0;
  index_t m = 0;
  std::vector<index_t> m_grid;
  int seeds = 10;
  std::uint64_t master_seed = 0;
  double delta = 0.05;
  double rank_tol = 1e-10;
  double lambda = 0.0;  // 0 = auto
  std::string loss = "squared";
  double c_dm = 1.0;
  double c_ab = 1.0;
  double gamma = 1.0;
  std::string out;
  std::string out_format = "json";
  int samplings = 10;
  double noise = 0.05;
  index_t n_test = 0;
  std::string model_out;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--data", o.data_path, "dataset file (one source: --data or --N)");
  cmd->add_option("--format", o.format, "dataset format: csv or sparse-index-value");
  cmd->add_option("--kernel", o.kernel, "kernel family: rbf, linear, polynomial");
  cmd->add_option("--width", o.width, "rbf width");
  cmd->add_option("--N", o.n, "synthetic source size");
  cmd->add_option("--p", o.p, "power-law exponent for the synthetic spectrum");
  cmd->add_option("--c", o.c, "power-law scale");
  cmd->add_option("--rho", o.rho, "eigengap synthetic: rho in (0, 1/2]");
  cmd->add_option("--r", o.r, "eigengap rank r (also the bound-evaluation rank)");
  cmd->add_option("--m-ref", o.m_ref, "reference m for the eigengap spectrum");
  cmd->add_option("--m", o.m, "landmark count");
  cmd->add_option("--m-grid", o.m_grid, "landmark counts (comma-separated list)")->delimiter(',');
  cmd->add_option("--seeds", o.seeds, "number of trial seeds");
  cmd->add_option("--master-seed", o.master_seed, "master seed; trial seeds derive from it");
  cmd->add_option("--delta", o.delta, "failure probability for the probabilistic bounds");
  cmd->add_option("--rank-tol", o.rank_tol, "relative eigenvalue cutoff for K_hat");
  cmd->add_option("--lambda", o.lambda, "regularization (0 = pick on a validation grid)");
  cmd->add_option("--loss", o.loss, "loss: squared or logistic");
  cmd->add_option("--c-dm", o.c_dm, "constant for the O(N/sqrt(m)) reference bound");
  cmd->add_option("--c-ab", o.c_ab, "compressive-sensing constant C_ab");
  cmd->add_option("--gamma", o.gamma, "compressive-sensing constant gamma");
  cmd->add_option("--out", o.out, "output path (stdout when omitted)");
  cmd->add_option("--out-format", o.out_format, "json or csv");
  cmd->add_option("--samplings", o.samplings, "lowerbound: samplings per seed");
  cmd->add_option("--noise", o.noise, "classify synthetic: label flip fraction");
  cmd->add_option("--n-test", o.n_test, "classify synthetic: held-out size");
  cmd->add_option("--model-out", o.model_out, "classify: write the restricted model JSON here");
}

json config_json(const CommonOpts& o, const std::string& command) {
  json j;
  j["command"] = command;
  j["data"] = o.data_path;
  j["format"] = o.format;
  j["kernel"] = o.kernel;
  j["width"] = o.width;
  j["N"] = o.n;
  j["p"] = o.p;
  j["c"] = o.c;
  j["rho"] = o.rho;
  j["r"] = o.r;
  j["m_ref"] = o.m_ref;
  j["m"] = o.m;
  j["m_grid"] = o.m_grid;
  j["seeds"] = o.seeds;
  j["master_seed"] = o.master_seed;
  j["delta"] = o.delta;
  j["rank_tol"] = o.rank_tol;
  j["lambda"] = o.lambda;
  j["loss"] = o.loss;
  j["constants"] = {{"c_dm", o.c_dm}, {"C_ab", o.c_ab}, {"gamma", o.gamma}};
  j["samplings"] = o.samplings;
  j["noise"] = o.noise;
  j["n_test"] = o.n_test;
  return j;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw io_error(path + ": cannot open for writing");
    out << content;
    if (!out) throw io_error(path + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw io_error(path + ": rename failed");
}

void emit(const CommonOpts& o, const std::string& content) {
  if (o.out.empty())
    std::fwrite(content.data(), 1, content.size(), stdout);
  else
    write_atomic(o.out, content);
}

KernelFunction make_kernel(const CommonOpts& o) {
  if (o.kernel == "rbf") return KernelFunction::rbf(o.width);
  if (o.kernel == "linear") return KernelFunction::linear();
  if (o.kernel == "polynomial") return KernelFunction::polynomial(2, 1.0);
  throw config_error("unknown kernel: '" + o.kernel + "'");
}

bool has_synthetic(const CommonOpts& o) { return o.n > 0; }
bool has_data(const CommonOpts& o) { return !o.data_path.empty(); }

void require_one_source(const CommonOpts& o) {
  if (has_synthetic(o) == has_data(o))
    throw config_error("exactly one source required: --data <file> or --N <size>");
}

std::vector<index_t> resolved_m_grid(const CommonOpts& o) {
  std::vector<index_t> grid = o.m_grid;
  if (grid.empty() && o.m > 0) grid.push_back(o.m);
  if (grid.empty()) throw config_error("need --m or --m-grid");
  return grid;
}

/// Synthetic spectrum from the flags: an eigengap profile when --rho is set,
/// a power law otherwise.
SpectrumSpec synth_spec(const CommonOpts& o) {
  if (o.rho > 0.0) {
    if (o.rho > 0.5) throw config_error("--rho must be in (0, 1/2]");
    if (o.r < 1 || o.r >= o.n) throw config_error("eigengap spectrum needs --r in [1, N)");
    index_t m_ref = o.m_ref > 0 ? o.m_ref : o.m;
    if (m_ref == 0 && !o.m_grid.empty())
      m_ref = o.m_grid[o.m_grid.size() / 2];
    if (m_ref < 2) throw config_error("eigengap spectrum needs --m-ref (or --m) >= 2");
    SpectrumSpec spec;
    spec.n = o.n;
    spec.seed = derive_seed(o.master_seed, 1ULL << 33);
    spec.eigenvalues.assign(static_cast<std::size_t>(o.n), 0.0);
    const double nd = static_cast<double>(o.n);
    const double md = static_cast<double>(m_ref);
    for (index_t i = 0; i < o.n; ++i)
      spec.eigenvalues[static_cast<std::size_t>(i)] =
          nd * std::pow(md, i < o.r ? -o.rho : o.rho - 1.0);
    return spec;
  }
  if (!(o.p > 0.0)) throw config_error("synthetic source needs --p > 0 (or --rho)");
  return SpectrumSpec::power_law(o.n, o.p, o.c, true, derive_seed(o.master_seed, 1ULL << 33));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// ---------------------------------------------------------------------------

int run_approx(const CommonOpts& o) {
  require_one_source(o);
  const std::vector<index_t> grid = resolved_m_grid(o);
  if (grid.size() != 1) throw config_error("approx takes a single --m");
  const index_t m = grid[0];

  json results;
  std::vector<double> errs;
  if (has_synthetic(o)) {
    if (m > o.n) throw config_error("--m exceeds --N");
    const SpectralSystem sys = synth_system(synth_spec(o));
    for (int s = 0; s < o.seeds; ++s) {
      const SampleSet sample =
          sample_uniform(o.n, m, derive_seed(o.master_seed, static_cast<std::uint64_t>(s)));
      errs.push_back(
          nystrom_error_from_spectrum(sys.vectors, sys.eigenvalues, sample, o.rank_tol));
    }
  } else {
    const Dataset ds = ingest(o.data_path, parse_format(o.format));
    if (m > ds.size()) throw config_error("--m exceeds the dataset size");
    const SymMatrix k = gram(ds, make_kernel(o));
    for (int s = 0; s < o.seeds; ++s) {
      const SampleSet sample =
          sample_uniform(ds.size(), m, derive_seed(o.master_seed, static_cast<std::uint64_t>(s)));
      const NystromModel model = fit(k, sample, {.rank = std::nullopt, .rank_tol = o.rank_tol});
      errs.push_back(approximation_error(model, k));
    }
  }
  json trials = json::array();
  for (int s = 0; s < o.seeds; ++s)
    trials.push_back({{"seed", derive_seed(o.master_seed, static_cast<std::uint64_t>(s))},
                      {"measured", errs[static_cast<std::size_t>(s)]}});
  results["trials"] = trials;
  results["median"] = median_of(errs);

  json report;
  report["schema_version"] = 1;
  report["config"] = config_json(o, "approx");
  report["results"] = results;
  if (o.out_format == "csv") {
    std::string csv = "seed,measured\n";
    char buf[128];
    for (int s = 0; s < o.seeds; ++s) {
      std::snprintf(buf, sizeof(buf), "%llu,%.17g\n",
                    static_cast<unsigned long long>(
                        derive_seed(o.master_seed, static_cast<std::uint64_t>(s))),
                    errs[static_cast<std::size_t>(s)]);
      csv += buf;
    }
    emit(o, csv);
  } else {
    emit(o, report.dump(2) + "\n");
  }
  return kExitOk;
}

std::vector<BoundReport> run_compare_from(const CommonOpts& o) {
  CompareParams params;
  params.m_grid = resolved_m_grid(o);
  params.seed_count = o.seeds;
  params.master_seed = o.master_seed;
  params.delta = o.delta;
  params.rank_tol = o.rank_tol;
  params.constants = {o.c_dm, o.c_ab, o.gamma};
  if (o.r > 0) params.r = o.r;
  if (o.p > 0.0) {
    params.p = o.p;
    params.c = o.c;
  }

  if (has_synthetic(o)) {
    for (index_t m : params.m_grid)
      if (m > o.n) throw config_error("--m exceeds --N");
    return compare(synth_system(synth_spec(o)), params);
  }
  const Dataset ds = ingest(o.data_path, parse_format(o.format));
  for (index_t m : params.m_grid)
    if (m > ds.size()) throw config_error("--m exceeds the dataset size");
  const SymMatrix k = gram(ds, make_kernel(o));
  const EigenSystem es = eigh_descending(k);
  const double mu = coherence(es.vectors);
  return compare(k, es.eigenvalues, mu, params);
}

int run_bounds(const CommonOpts& o) {
  require_one_source(o);
  const std::vector<BoundReport> reports = run_compare_from(o);
  if (o.out_format == "csv") {
    emit(o, reports_to_csv(reports));
  } else {
    json report;
    report["schema_version"] = 1;
    report["config"] = config_json(o, "bounds");
    report["results"] = json::parse(reports_to_json(reports));
    emit(o, report.dump(2) + "\n");
  }
  return kExitOk;
}

int run_scaling(const CommonOpts& o) {
  require_one_source(o);
  const std::vector<BoundReport> reports = run_compare_from(o);
  const double slope = measured_log_slope(reports);
  if (o.out_format == "csv") {
    std::string csv = reports_to_csv(reports);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "# slope,%.17g\n", slope);
    emit(o, csv + buf);
  } else {
    json report;
    report["schema_version"] = 1;
    report["config"] = config_json(o, "scaling");
    report["results"]["slope"] = slope;
    json per_m = json::array();
    for (const auto& rep : reports)
      per_m.push_back({{"m", rep.context.m}, {"median", *rep.measured}});
    report["results"]["median_error"] = per_m;
    report["results"]["reports"] = json::parse(reports_to_json(reports));
    emit(o, report.dump(2) + "\n");
  }
  return kExitOk;
}

int run_spectrum(const CommonOpts& o) {
  require_one_source(o);
  std::vector<double> eigs;
  double mu = 0.0;
  index_t n = 0;
  if (has_synthetic(o)) {
    const SpectralSystem sys = synth_system(synth_spec(o));
    eigs = sys.eigenvalues;
    mu = coherence(sys.vectors);
    n = o.n;
  } else {
    const Dataset ds = ingest(o.data_path, parse_format(o.format));
    const SymMatrix k = gram(ds, make_kernel(o));
    const EigenSystem es = eigh_descending(k);
    eigs = es.eigenvalues;
    mu = coherence(es.vectors);
    n = ds.size();
  }

  json results;
  results["n"] = n;
  results["coherence"] = mu;
  results["eigenvalues"] = eigs;
  try {
    const PowerLawFit fit = fit_power_law(eigs);
    results["power_law"] = {{"p", fit.p},
                            {"c", fit.c},
                            {"fit_range", {fit.first, fit.last}},
                            {"residual", fit.residual}};
  } catch (const std::invalid_argument& e) {
    results["power_law"] = {{"error", e.what()}};
  }
  if (o.r > 0 && o.m > 0) {
    const auto prof = eigengap_profile(eigs, n, o.m, o.r);
    if (prof)
      results["eigengap"] = {{"r", prof->r},
                             {"rho", prof->rho},
                             {"lambda_r", prof->lambda_r},
                             {"lambda_r_plus_1", prof->lambda_r_plus_1}};
    else
      results["eigengap"] = {{"no_gap", true}, {"r", o.r}};
  }
  const FixedPointEpsilon fp = fixed_point_epsilon(eigs, n);
  results["fixed_point"] = {{"epsilon_tilde", fp.epsilon_tilde},
                            {"epsilon", fp.epsilon},
                            {"floor", fp.floor},
                            {"floor_active", fp.floor_active}};

  json report;
  report["schema_version"] = 1;
  report["config"] = config_json(o, "spectrum");
  report["results"] = results;
  if (o.out_format == "csv") {
    std::string csv = "k,lambda\n";
    char buf[96];
    for (std::size_t i = 0; i < eigs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, eigs[i]);
      csv += buf;
    }
    emit(o, csv);
  } else {
    emit(o, report.dump(2) + "\n");
  }
  return kExitOk;
}

int run_lowerbound(const CommonOpts& o) {
  if (!has_synthetic(o)) throw config_error("lowerbound is a synthetic experiment: needs --N");
  const std::vector<index_t> grid = resolved_m_grid(o);
  if (grid.size() != 1) throw config_error("lowerbound takes a single --m");
  const index_t m = grid[0];
  if (o.n < m + 1) throw config_error("lowerbound needs N >= m+1");

  const double lb = lower_bounds(static_cast<double>(o.n), static_cast<double>(m), 1.0).lb_general;
  const double lo = static_cast<double>(o.n) / (2.0 * static_cast<double>(m + 1));
  const double hi = 3.0 * static_cast<double>(o.n) / (2.0 * static_cast<double>(m + 1));

  json trials = json::array();
  int sandwich_hits = 0;
  int witnesses = 0;
  for (int s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed = derive_seed(o.master_seed, static_cast<std::uint64_t>(s));
    const Matrix u = bernoulli_pm1_factor(o.n, m, seed);

    // top m+1 eigenvalues of K from the small Gram of the factor
    SymMatrix small(m + 1);
    for (index_t a = 0; a <= m; ++a)
      for (index_t b = a; b <= m; ++b) {
        double acc = 0.0;
        for (index_t i = 0; i < o.n; ++i) acc += u(i, a) * u(i, b);
        small.set(a, b, acc / static_cast<double>(m + 1));
      }
    const EigenSystem es = eigh_descending(small);
    bool sandwich = true;
    for (double lam : es.eigenvalues) sandwich = sandwich && lam >= lo && lam <= hi;
    if (sandwich) ++sandwich_hits;

    // measured Nystrom error through the factored source, median over samplings
    Matrix a_scaled(o.n, m + 1);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(m + 1));
    for (index_t i = 0; i < o.n; ++i)
      for (index_t j = 0; j <= m; ++j) a_scaled(i, j) = u(i, j) * inv_sqrt;
    const FactorKernelSource source(std::move(a_scaled));
    std::vector<double> errs;
    for (int t = 0; t < o.samplings; ++t) {
      const SampleSet sample =
          sample_uniform(o.n, m, derive_seed(seed, static_cast<std::uint64_t>(t)));
      const NystromModel model = fit(source, sample, {.rank = std::nullopt, .rank_tol = o.rank_tol});
      errs.push_back(approximation_error(model, source));
    }
    const double med = median_of(errs);
    const bool witness = sandwich && med >= lb - 1e-6;
    if (witness) ++witnesses;
    trials.push_back({{"seed", seed},
                      {"eigen_sandwich", sandwich},
                      {"median_error", med},
                      {"witness", witness}});
  }

  json results;
  results["lb_general"] = lb;
  results["eigenvalue_window"] = {lo, hi};
  results["sandwich_fraction"] = static_cast<double>(sandwich_hits) / o.seeds;
  results["witness_fraction"] = static_cast<double>(witnesses) / o.seeds;
  results["trials"] = trials;

  json report;
  report["schema_version"] = 1;
  report["config"] = config_json(o, "lowerbound");
  report["results"] = results;
  if (o.out_format == "csv") {
    std::string csv = "seed,eigen_sandwich,median_error,witness\n";
    char buf[160];
    for (const auto& t : trials) {
      std::snprintf(buf, sizeof(buf), "%llu,%d,%.17g,%d\n",
                    static_cast<unsigned long long>(t["seed"].get<std::uint64_t>()),
                    t["eigen_sandwich"].get<bool>() ? 1 : 0, t["median_error"].get<double>(),
                    t["witness"].get<bool>() ? 1 : 0);
      csv += buf;
    }
    emit(o, csv);
  } else {
    emit(o, report.dump(2) + "\n");
  }
  return kExitOk;
}

int run_classify(const CommonOpts& o) {
  require_one_source(o);
  const LossFunction loss = LossFunction::by_name(o.loss);

  if (has_synthetic(o)) {
    if (!(o.p > 1.0)) throw config_error("synthetic classify needs --p > 1");
    GenExperimentConfig config;
    config.p = o.p;
    config.n_train = o.n;
    config.n_test = o.n_test > 0 ? o.n_test : std::max<index_t>(1, o.n / 4);
    config.noise = o.noise;
    config.loss = loss;
    config.seed_count = o.seeds;
    config.master_seed = o.master_seed;
    config.rank_tol = o.rank_tol;
    if (o.lambda > 0.0) config.lambda_grid = {o.lambda};
    if (o.m > 0) {
      if (o.m > o.n) throw config_error("--m exceeds --N");
      config.m_override = std::vector<index_t>{o.m};
    }
    const GenExperimentReport rep = generalization_experiment(config);

    json rows = json::array();
    for (const auto& row : rep.rows)
      rows.push_back({{"seed", row.seed},
                      {"lambda", row.lambda},
                      {"full_test_loss", row.full_test_loss},
                      {"restricted_test_loss", row.restricted_test_loss},
                      {"gap", row.gap}});
    json results;
    results["recommended_m"] = {{"m", rep.budget.m},
                                {"exponent", rep.budget.exponent},
                                {"capped", rep.budget.capped},
                                {"sublinear", rep.budget.sublinear}};
    results["m_values"] = rep.m_values;
    results["median_gap"] = rep.median_gap;
    results["rows"] = rows;

    json report;
    report["schema_version"] = 1;
    report["config"] = config_json(o, "classify");
    report["results"] = results;
    if (o.out_format == "csv") {
      std::string csv = "seed,lambda,m,restricted_test_loss,full_test_loss,gap\n";
      char buf[256];
      for (const auto& row : rep.rows)
        for (std::size_t mi = 0; mi < rep.m_values.size(); ++mi) {
          std::snprintf(buf, sizeof(buf), "%llu,%.17g,%lld,%.17g,%.17g,%.17g\n",
                        static_cast<unsigned long long>(row.seed), row.lambda,
                        static_cast<long long>(rep.m_values[mi]), row.restricted_test_loss[mi],
                        row.full_test_loss, row.gap[mi]);
          csv += buf;
        }
      emit(o, csv);
    } else {
      emit(o, report.dump(2) + "\n");
    }
    return kExitOk;
  }

  // dataset route: deterministic 80/20 split, full vs restricted at --m
  const Dataset ds = ingest(o.data_path, parse_format(o.format));
  if (!ds.labels) throw io_error(o.data_path + ": classify needs labels");
  const index_t n_train = ds.size() - ds.size() / 5;
  if (n_train < 2 || ds.size() - n_train < 1)
    throw config_error("dataset too small for a train/test split");
  index_t m = o.m;
  if (m == 0) throw config_error("classify on a dataset needs --m");
  if (m > n_train) throw config_error("--m exceeds the training size");

  const KernelFunction kernel = make_kernel(o);
  const SymMatrix k_all = gram(ds, kernel);
  SymMatrix k_train(n_train);
  for (index_t i = 0; i < n_train; ++i)
    for (index_t j = i; j < n_train; ++j) k_train.set(i, j, k_all(i, j));
  const std::vector<int> y_train(ds.labels->begin(), ds.labels->begin() + n_train);

  const double lambda = o.lambda > 0.0 ? o.lambda : 1e-2;
  const SolveOptions solve{1e-8, 50000};
  const FullModel full = train_full(k_train, y_train, lambda, loss, solve);

  auto test_loss_full = [&]() {
    double acc = 0.0;
    std::vector<double> col(static_cast<std::size_t>(n_train));
    for (index_t i = n_train; i < ds.size(); ++i) {
      for (index_t j = 0; j < n_train; ++j) col[static_cast<std::size_t>(j)] = k_all(i, j);
      acc += loss.value(static_cast<double>((*ds.labels)[static_cast<std::size_t>(i)]) *
                        full.score(col));
    }
    return acc / static_cast<double>(ds.size() - n_train);
  };
  const double full_loss = test_loss_full();

  json trials = json::array();
  std::vector<double> gaps;
  std::string saved_model;
  for (int s = 0; s < o.seeds; ++s) {
    const std::uint64_t seed = derive_seed(o.master_seed, static_cast<std::uint64_t>(s));
    const SampleSet sample = sample_uniform(n_train, m, seed);
    const NystromModel nm = fit(k_train, sample, {.rank = std::nullopt, .rank_tol = o.rank_tol});
    const RestrictedModel rm = train_restricted(nm, y_train, lambda, loss, solve);
    double acc = 0.0;
    std::vector<double> col(static_cast<std::size_t>(m));
    for (index_t i = n_train; i < ds.size(); ++i) {
      for (index_t j = 0; j < m; ++j)
        col[static_cast<std::size_t>(j)] = k_all(i, sample.indices[static_cast<std::size_t>(j)]);
      acc += loss.value(static_cast<double>((*ds.labels)[static_cast<std::size_t>(i)]) *
                        rm.score(col));
    }
    const double rloss = acc / static_cast<double>(ds.size() - n_train);
    gaps.push_back(rloss - full_loss);
    trials.push_back({{"seed", seed},
                      {"restricted_test_loss", rloss},
                      {"gap", rloss - full_loss},
                      {"objective", rm.objective},
                      {"support_count", rm.support_count()}});
    if (s == 0 && !o.model_out.empty()) saved_model = to_json(rm, kernel.describe());
  }
  if (!o.model_out.empty()) write_atomic(o.model_out, saved_model);

  json results;
  results["n_train"] = n_train;
  results["n_test"] = ds.size() - n_train;
  results["m"] = m;
  results["full_test_loss"] = full_loss;
  results["full_objective"] = full.primal_objective;
  results["full_gap"] = full.gap;
  results["median_gap"] = median_of(gaps);
  results["trials"] = trials;
  try {
    const EigenSystem es = eigh_descending(k_train);
    const PowerLawFit fit = fit_power_law(es.eigenvalues);
    if (fit.p > 1.0) {
      const RecommendedBudget b = recommended_m(n_train, fit.p);
      results["recommended_m"] = {{"m", b.m},
                                  {"p_hat", fit.p},
                                  {"exponent", b.exponent},
                                  {"capped", b.capped},
                                  {"sublinear", b.sublinear}};
    }
  } catch (const std::invalid_argument&) {
    // spectrum not power-law-fittable; omit the recommendation
  }

  json report;
  report["schema_version"] = 1;
  report["config"] = config_json(o, "classify");
  report["results"] = results;
  emit(o, report.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nystrom low-rank approximation and kernel classification experiments"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a key-value config file");
  app.get_config_formatter_base()->valueSeparator('=');

  CommonOpts opts;
  CLI::App* approx = app.add_subcommand("approx", "fit + measured approximation error");
  CLI::App* bounds = app.add_subcommand("bounds", "measured error against every bound");
  CLI::App* spectrum = app.add_subcommand("spectrum", "coherence, power-law fit, eigengap, fixed point");
  CLI::App* lowerbound = app.add_subcommand("lowerbound", "adversarial Bernoulli construction witness");
  CLI::App* classify = app.add_subcommand("classify", "full vs restricted kernel classifiers");
  CLI::App* scaling = app.add_subcommand("scaling", "error vs m with fitted log-log slope");
  for (CLI::App* cmd : {approx, bounds, spectrum, lowerbound, classify, scaling})
    add_common_options(cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (approx->parsed()) return run_approx(opts);
    if (bounds->parsed()) return run_bounds(opts);
    if (spectrum->parsed()) return run_spectrum(opts);
    if (lowerbound->parsed()) return run_lowerbound(opts);
    if (classify->parsed()) return run_classify(opts);
    if (scaling->parsed()) return run_scaling(opts);
    std::fprintf(stderr, "error: no command\n");
    return kExitConfig;
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const io_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
}
