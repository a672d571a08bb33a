#include "nyla/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace nyla {

Dataset Dataset::select(std::span<const index_t> idx) const {
  Dataset out;
  out.points = Matrix(static_cast<index_t>(idx.size()), dim());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = points.row(idx[r]);
    auto dst = out.points.row(static_cast<index_t>(r));
    std::copy(src.begin(), src.end(), dst.begin());
  }
  if (labels) {
    out.labels.emplace();
    out.labels->reserve(idx.size());
    for (index_t i : idx) out.labels->push_back((*labels)[static_cast<std::size_t>(i)]);
  }
  return out;
}

KernelFunction KernelFunction::rbf(double width) {
  if (!(width > 0.0)) throw std::invalid_argument("rbf kernel: width must be > 0");
  return KernelFunction(Family::rbf, width, 1, 0.0, false);
}

KernelFunction KernelFunction::linear(bool normalize) {
  return KernelFunction(Family::linear, 1.0, 1, 0.0, normalize);
}

KernelFunction KernelFunction::polynomial(int degree, double offset, bool normalize) {
  if (degree < 1) throw std::invalid_argument("polynomial kernel: degree must be >= 1");
  if (offset < 0.0) throw std::invalid_argument("polynomial kernel: offset must be >= 0");
  return KernelFunction(Family::polynomial, 1.0, degree, offset, normalize);
}

double KernelFunction::raw(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != y.size())
    throw std::invalid_argument("kernel: points have different dimensions");
  switch (family_) {
    case Family::rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        d2 += d * d;
      }
      return std::exp(-d2 / (2.0 * width_ * width_));
    }
    case Family::linear:
      return dot(x, y);
    case Family::polynomial:
      return std::pow(dot(x, y) + offset_, degree_);
  }
  return 0.0;
}

double KernelFunction::operator()(std::span<const double> x, std::span<const double> y) const {
  const double v = raw(x, y);
  if (!normalize_) return v;
  const double sx = raw(x, x);
  const double sy = raw(y, y);
  if (sx <= 0.0 || sy <= 0.0) return 0.0;
  return v / std::sqrt(sx * sy);
}

std::string KernelFunction::describe() const {
  switch (family_) {
    case Family::rbf:
      return "rbf(width=" + std::to_string(width_) + ")";
    case Family::linear:
      return normalize_ ? "linear(normalized)" : "linear";
    case Family::polynomial:
      return "polynomial(degree=" + std::to_string(degree_) +
             ",offset=" + std::to_string(offset_) + (normalize_ ? ",normalized)" : ")");
  }
  return "?";
}

SymMatrix gram(const Dataset& data, const KernelFunction& k) {
  const index_t n = data.size();
  if (n < 1) throw std::invalid_argument("gram: empty dataset");
  SymMatrix g(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (index_t i = 0; i < n; ++i)
    for (index_t j = i; j < n; ++j) {
      const double v = k(data.points.row(i), data.points.row(j));
      g.set(i, j, v);
    }
  return g;
}

Matrix cross_gram(const Dataset& data, const Dataset& landmarks, const KernelFunction& k) {
  if (data.dim() != landmarks.dim())
    throw std::invalid_argument("cross_gram: feature dimensions differ");
  Matrix g(data.size(), landmarks.size());
#pragma omp parallel for schedule(static)
  for (index_t i = 0; i < data.size(); ++i)
    for (index_t j = 0; j < landmarks.size(); ++j)
      g(i, j) = k(data.points.row(i), landmarks.points.row(j));
  return g;
}

void KernelSource::column(index_t j, std::span<double> out) const {
  const index_t n = size();
  for (index_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = entry(i, j);
}

void KernelSource::apply(std::span<const double> x, std::span<double> y) const {
  const index_t n = size();
  std::vector<double> col(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = 0.0;
  for (index_t j = 0; j < n; ++j) {
    const double xj = x[static_cast<std::size_t>(j)];
    if (xj == 0.0) continue;
    column(j, col);
    for (index_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += xj * col[static_cast<std::size_t>(i)];
  }
}

void DenseKernelSource::column(index_t j, std::span<double> out) const {
  const auto r = k_->row(j);  // symmetric: row j == column j
  std::copy(r.begin(), r.end(), out.begin());
}

void DenseKernelSource::apply(std::span<const double> x, std::span<double> y) const {
  k_->apply(x, y);
}

void FactorKernelSource::apply(std::span<const double> x, std::span<double> y) const {
  std::vector<double> t(static_cast<std::size_t>(a_.cols()));
  a_.apply_transposed(x, t);
  a_.apply(t, y);
}

}  // namespace nyla
