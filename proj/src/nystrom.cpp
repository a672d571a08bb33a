#include "nyla/nystrom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "nyla/rng.hpp"

namespace nyla {

SampleSet sample_uniform(index_t n, index_t m, std::uint64_t seed) {
  if (m < 1 || m > n)
    throw std::invalid_argument("sample_uniform: need 1 <= m <= N, got m=" + std::to_string(m) +
                                ", N=" + std::to_string(n));
  Rng rng(seed);
  std::vector<index_t> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), index_t{0});
  // partial Fisher-Yates: first m entries are a uniform m-subset
  for (index_t i = 0; i < m; ++i) {
    const index_t j = i + static_cast<index_t>(rng.uniform_index(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  SampleSet s;
  s.indices.assign(pool.begin(), pool.begin() + m);
  s.seed = seed;
  return s;
}

namespace {

void validate_sample(const SampleSet& sample, index_t n) {
  if (sample.count() < 1) throw std::invalid_argument("fit: empty sample");
  std::vector<index_t> seen(sample.indices);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw std::invalid_argument("fit: sample indices must be distinct");
  if (seen.front() < 0 || seen.back() >= n)
    throw std::invalid_argument("fit: sample index out of range");
}

/// Shared tail of fit: eigendecompose K_hat, pick the truncation rank and
/// build the featurizer.
NystromModel assemble(SymMatrix khat, Matrix kb, const SampleSet& sample,
                      const FitOptions& opts) {
  const index_t m = khat.size();
  if (opts.rank && (*opts.rank < 1 || *opts.rank > m))
    throw std::invalid_argument("fit: rank must be in [1, m]");

  NystromModel model;
  model.sample = sample;
  model.rank_tol = opts.rank_tol;
  model.khat_eig = eigh_descending(khat);
  model.kb = std::move(kb);

  const double lam_max = model.khat_eig.eigenvalues.front();
  const double lam_min = model.khat_eig.eigenvalues.back();
  if (lam_min < -1e-8 * std::max(lam_max, 0.0))
    throw std::runtime_error("fit: sampled block K_hat is significantly indefinite (lambda_min=" +
                             std::to_string(lam_min) + ")");

  const double cut = opts.rank_tol * std::max(lam_max, 0.0);
  index_t rank = 0;
  for (double lam : model.khat_eig.eigenvalues)
    if (lam >= cut && lam > 0.0) ++rank;  // ties at the threshold are kept
  if (opts.rank) rank = std::min(rank, *opts.rank);
  model.rank = rank;

  if (rank == 0) {
    std::fprintf(stderr,
                 "nystrom: warning: all K_hat eigenvalues below tolerance; "
                 "approximation is the zero matrix\n");
    model.w = Matrix(m, 0);
    model.phi = Matrix(model.kb.rows(), 0);
    return model;
  }

  model.w = Matrix(m, rank);
  for (index_t k = 0; k < rank; ++k) {
    const double inv_sqrt = 1.0 / std::sqrt(model.khat_eig.eigenvalues[static_cast<std::size_t>(k)]);
    for (index_t i = 0; i < m; ++i) model.w(i, k) = model.khat_eig.vectors(i, k) * inv_sqrt;
  }
  model.phi = matmul(model.kb, model.w);
  return model;
}

}  // namespace

NystromModel fit(const KernelSource& source, const SampleSet& sample, const FitOptions& opts) {
  const index_t n = source.size();
  validate_sample(sample, n);
  const index_t m = sample.count();

  SymMatrix khat(m);
  for (index_t i = 0; i < m; ++i)
    for (index_t j = i; j < m; ++j)
      khat.set(i, j, source.entry(sample.indices[static_cast<std::size_t>(i)],
                                  sample.indices[static_cast<std::size_t>(j)]));

  Matrix kb(n, m);
  std::vector<double> col(static_cast<std::size_t>(n));
  for (index_t j = 0; j < m; ++j) {
    source.column(sample.indices[static_cast<std::size_t>(j)], col);
    for (index_t i = 0; i < n; ++i) kb(i, j) = col[static_cast<std::size_t>(i)];
  }
  return assemble(std::move(khat), std::move(kb), sample, opts);
}

NystromModel fit(const SymMatrix& k, const SampleSet& sample, const FitOptions& opts) {
  DenseKernelSource src(k);
  return fit(src, sample, opts);
}

NystromModel fit(const Dataset& data, const KernelFunction& kernel, const SampleSet& sample,
                 const FitOptions& opts) {
  validate_sample(sample, data.size());
  const Dataset lm = data.select(sample.indices);
  SymMatrix khat = gram(lm, kernel);
  Matrix kb = cross_gram(data, lm, kernel);
  NystromModel model = assemble(std::move(khat), std::move(kb), sample, opts);
  model.landmarks = lm;
  model.kernel = kernel;
  return model;
}

SymMatrix approximate(const NystromModel& model) {
  const index_t n = model.data_size();
  if (model.degenerate()) return SymMatrix(n);
  return SymMatrix::from_full(matmul_nt(model.phi, model.phi));
}

namespace {

double residual_norm(const NystromModel& model,
                     const std::function<void(std::span<const double>, std::span<double>)>& apply_k,
                     double tol) {
  const index_t n = model.data_size();
  const index_t r = model.rank;
  std::vector<double> t(static_cast<std::size_t>(r));
  const SymOp op = [&](std::span<const double> in, std::span<double> out) {
    apply_k(in, out);
    if (r == 0) return;
    model.phi.apply_transposed(in, t);
    // out -= Phi t
    for (index_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] -= dot(model.phi.row(i), t);
  };
  return spectral_norm_op(op, n, tol);
}

}  // namespace

double approximation_error(const NystromModel& model, const SymMatrix& k, double tol) {
  if (k.size() != model.data_size())
    throw std::invalid_argument("approximation_error: K size does not match the model");
  return residual_norm(
      model, [&k](std::span<const double> in, std::span<double> out) { k.apply(in, out); }, tol);
}

double approximation_error(const NystromModel& model, const KernelSource& k, double tol) {
  if (k.size() != model.data_size())
    throw std::invalid_argument("approximation_error: source size does not match the model");
  return residual_norm(
      model, [&k](std::span<const double> in, std::span<double> out) { k.apply(in, out); }, tol);
}

double nystrom_error_from_spectrum(const Matrix& v, std::span<const double> lams,
                                   const SampleSet& sample, double rank_tol, double tol) {
  const index_t n = v.rows();
  validate_sample(sample, n);
  const index_t m = sample.count();

  // Rows of V at the sampled indices, scaled by sqrt(lambda): K_hat = B B^T.
  Matrix b(m, n);
  std::vector<double> sq(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k)
    sq[static_cast<std::size_t>(k)] = std::sqrt(std::max(lams[static_cast<std::size_t>(k)], 0.0));
  for (index_t i = 0; i < m; ++i) {
    const auto row = v.row(sample.indices[static_cast<std::size_t>(i)]);
    for (index_t k = 0; k < n; ++k)
      b(i, k) = row[static_cast<std::size_t>(k)] * sq[static_cast<std::size_t>(k)];
  }
  const SymMatrix khat = SymMatrix::from_full(matmul_nt(b, b));
  const EigenSystem es = eigh_descending(khat);
  const double lam_max = es.eigenvalues.front();
  const double cut = rank_tol * std::max(lam_max, 0.0);
  index_t rank = 0;
  for (double lam : es.eigenvalues)
    if (lam >= cut && lam > 0.0) ++rank;

  // P = V_r D_r^{-1/2}: pinv_r(K_hat) = P P^T
  Matrix p(m, rank);
  for (index_t k = 0; k < rank; ++k) {
    const double inv_sqrt = 1.0 / std::sqrt(es.eigenvalues[static_cast<std::size_t>(k)]);
    for (index_t i = 0; i < m; ++i) p(i, k) = es.vectors(i, k) * inv_sqrt;
  }

  // Rows of V at the samples (unscaled), for K_b = V Lambda Vs^T in the
  // eigenbasis: residual u -> Lambda u - Lambda Vs^T pinv(K_hat) Vs Lambda u.
  Matrix vs(m, n);
  for (index_t i = 0; i < m; ++i) {
    const auto row = v.row(sample.indices[static_cast<std::size_t>(i)]);
    std::copy(row.begin(), row.end(), vs.row(i).begin());
  }

  std::vector<double> t1(static_cast<std::size_t>(n));
  std::vector<double> t2(static_cast<std::size_t>(m));
  std::vector<double> t3(static_cast<std::size_t>(rank));
  std::vector<double> t4(static_cast<std::size_t>(m));
  std::vector<double> t5(static_cast<std::size_t>(n));
  const SymOp op = [&](std::span<const double> in, std::span<double> out) {
    for (index_t i = 0; i < n; ++i)
      t1[static_cast<std::size_t>(i)] = lams[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(i)];
    vs.apply(t1, t2);
    p.apply_transposed(t2, t3);
    p.apply(t3, t4);
    vs.apply_transposed(t4, t5);
    for (index_t i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] =
          t1[static_cast<std::size_t>(i)] -
          lams[static_cast<std::size_t>(i)] * t5[static_cast<std::size_t>(i)];
  };
  return spectral_norm_op(op, n, tol);
}

std::vector<double> feature_map(const NystromModel& model,
                                std::span<const double> landmark_column) {
  if (static_cast<index_t>(landmark_column.size()) != model.sample.count())
    throw std::invalid_argument("feature_map: kernel column has wrong length");
  std::vector<double> out(static_cast<std::size_t>(model.rank));
  model.w.apply_transposed(landmark_column, out);
  return out;
}

std::vector<double> feature_map_point(const NystromModel& model, std::span<const double> x) {
  if (!model.landmarks || !model.kernel)
    throw std::invalid_argument("feature_map_point: model was not fit from points");
  const index_t m = model.sample.count();
  std::vector<double> col(static_cast<std::size_t>(m));
  for (index_t j = 0; j < m; ++j)
    col[static_cast<std::size_t>(j)] = (*model.kernel)(model.landmarks->points.row(j), x);
  return feature_map(model, col);
}

}  // namespace nyla
