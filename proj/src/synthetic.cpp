#include "nyla/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "nyla/rng.hpp"

namespace nyla {

SpectrumSpec SpectrumSpec::power_law(index_t n, double p, double c, bool scale_n,
                                     std::uint64_t seed) {
  SpectrumSpec s;
  s.n = n;
  s.eigenvalues = power_law_spectrum(n, p, c, scale_n);
  s.source = VectorSource::random_orthogonal;
  s.seed = seed;
  return s;
}

std::vector<double> power_law_spectrum(index_t n, double p, double c, bool scale_n) {
  if (n < 1) throw std::invalid_argument("power_law_spectrum: n must be >= 1");
  if (!(p > 0.0) || !(c > 0.0))
    throw std::invalid_argument("power_law_spectrum: p and c must be > 0");
  std::vector<double> lams(static_cast<std::size_t>(n));
  const double scale = scale_n ? static_cast<double>(n) : 1.0;
  for (index_t k = 1; k <= n; ++k)
    lams[static_cast<std::size_t>(k - 1)] = scale * c * std::pow(static_cast<double>(k), -p);
  return lams;
}

Matrix hadamard_matrix(index_t n) {
  if (n < 1 || (n & (n - 1)) != 0)
    throw std::invalid_argument("hadamard_matrix: n must be a power of 2, got " +
                                std::to_string(n));
  Matrix h(n, n);
  h(0, 0) = 1.0;
  for (index_t b = 1; b < n; b <<= 1)
    for (index_t i = 0; i < b; ++i)
      for (index_t j = 0; j < b; ++j) {
        h(i + b, j) = h(i, j);
        h(i, j + b) = h(i, j);
        h(i + b, j + b) = -h(i, j);
      }
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) h(i, j) *= s;
  return h;
}

namespace {

void validate(const SpectrumSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("synth_kernel: n must be >= 1");
  if (static_cast<index_t>(spec.eigenvalues.size()) != spec.n)
    throw std::invalid_argument("synth_kernel: eigenvalue count does not match n");
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    if (spec.eigenvalues[i] < 0.0)
      throw std::invalid_argument("synth_kernel: eigenvalues must be >= 0");
    if (i > 0 && spec.eigenvalues[i] > spec.eigenvalues[i - 1])
      throw std::invalid_argument("synth_kernel: eigenvalues must be descending");
  }
}

}  // namespace

SpectralSystem synth_system(const SpectrumSpec& spec) {
  validate(spec);
  SpectralSystem sys;
  sys.eigenvalues = spec.eigenvalues;
  switch (spec.source) {
    case SpectrumSpec::VectorSource::random_orthogonal:
      sys.vectors = random_orthogonal(spec.n, spec.seed);
      break;
    case SpectrumSpec::VectorSource::hadamard:
      sys.vectors = hadamard_matrix(spec.n);
      break;
    case SpectrumSpec::VectorSource::identity:
      sys.vectors = Matrix::identity(spec.n);
      break;
    case SpectrumSpec::VectorSource::explicit_matrix:
      if (!spec.vectors || spec.vectors->rows() != spec.n || spec.vectors->cols() != spec.n)
        throw std::invalid_argument("synth_kernel: explicit vector matrix missing or mis-sized");
      sys.vectors = *spec.vectors;
      break;
  }
  return sys;
}

std::pair<SymMatrix, EigenSystem> synth_kernel(const SpectrumSpec& spec) {
  SpectralSystem sys = synth_system(spec);
  const index_t n = spec.n;
  Matrix scaled(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t k = 0; k < n; ++k)
      scaled(i, k) = sys.vectors(i, k) * sys.eigenvalues[static_cast<std::size_t>(k)];
  SymMatrix k = SymMatrix::from_full(matmul_nt(scaled, sys.vectors));
  EigenSystem es;
  es.eigenvalues = std::move(sys.eigenvalues);
  es.vectors = std::move(sys.vectors);
  return {std::move(k), std::move(es)};
}

Matrix bernoulli_pm1_factor(index_t n, index_t m, std::uint64_t seed) {
  if (n < m + 1) throw std::invalid_argument("bernoulli kernel: requires N >= m+1");
  Rng rng(seed);
  Matrix u(n, m + 1);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < m + 1; ++j) u(i, j) = rng.sign();
  return u;
}

SymMatrix bernoulli_lower_bound_kernel(index_t n, index_t m, std::uint64_t seed) {
  const Matrix u = bernoulli_pm1_factor(n, m, seed);
  const double inv = 1.0 / static_cast<double>(m + 1);
  SymMatrix k(n);
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < n; ++i)
    for (index_t j = i; j < n; ++j) {
      // dot of +-1 rows is an exact integer, so the diagonal is exactly 1
      k.set(i, j, dot(u.row(i), u.row(j)) * inv);
    }
  return k;
}

std::vector<int> gp_labels(const Matrix& vectors, std::span<const double> eigenvalues,
                           std::uint64_t seed, double noise) {
  const index_t n = vectors.rows();
  Rng rng(seed);
  std::vector<double> weighted(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k)
    weighted[static_cast<std::size_t>(k)] =
        std::sqrt(std::max(eigenvalues[static_cast<std::size_t>(k)], 0.0)) * rng.normal();
  std::vector<double> g(static_cast<std::size_t>(n));
  vectors.apply(weighted, g);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i)
    y[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(i)] >= 0.0 ? 1 : -1;
  for (index_t i = 0; i < n; ++i)
    if (rng.uniform() < noise) y[static_cast<std::size_t>(i)] = -y[static_cast<std::size_t>(i)];
  return y;
}

}  // namespace nyla
