#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nyla/matrix.hpp"

namespace nyla {

/// Labelled or unlabelled point set. Points are rows of `points`; labels,
/// when present, are in {-1, +1}.
struct Dataset {
  Matrix points;
  std::optional<std::vector<int>> labels;

  index_t size() const { return points.rows(); }
  index_t dim() const { return points.cols(); }

  Dataset select(std::span<const index_t> idx) const;
};

/// Kernel function over feature vectors. `normalize` rescales by
/// kappa(x,y)/sqrt(kappa(x,x) kappa(y,y)) so that kappa(x,x) <= 1.
class KernelFunction {
 public:
  enum class Family { rbf, linear, polynomial };

  static KernelFunction rbf(double width);
  static KernelFunction linear(bool normalize = false);
  static KernelFunction polynomial(int degree, double offset, bool normalize = false);

  Family family() const { return family_; }
  double width() const { return width_; }
  int degree() const { return degree_; }
  double offset() const { return offset_; }
  bool normalized() const { return normalize_; }

  double operator()(std::span<const double> x, std::span<const double> y) const;

  std::string describe() const;

 private:
  KernelFunction(Family f, double width, int degree, double offset, bool normalize)
      : family_(f), width_(width), degree_(degree), offset_(offset), normalize_(normalize) {}

  double raw(std::span<const double> x, std::span<const double> y) const;

  Family family_;
  double width_ = 1.0;
  int degree_ = 1;
  double offset_ = 0.0;
  bool normalize_ = false;
};

/// N x N kernel matrix for a dataset. Computes the upper triangle and
/// mirrors, so floating-point symmetry is exact.
SymMatrix gram(const Dataset& data, const KernelFunction& k);

/// N x m kernel block between a dataset and a set of landmarks.
Matrix cross_gram(const Dataset& data, const Dataset& landmarks, const KernelFunction& k);

/// Column/apply access to an implicit PSD matrix. Lets the Nystrom code run
/// against a dense matrix, a low-rank factor, or a lazily evaluated kernel
/// without materializing anything it does not need.
class KernelSource {
 public:
  virtual ~KernelSource() = default;
  virtual index_t size() const = 0;
  virtual double entry(index_t i, index_t j) const = 0;
  /// out[i] = K(i, j) for all i
  virtual void column(index_t j, std::span<double> out) const;
  /// y = K x
  virtual void apply(std::span<const double> x, std::span<double> y) const;
};

/// Wraps a dense symmetric matrix (not owned; caller keeps it alive).
class DenseKernelSource final : public KernelSource {
 public:
  explicit DenseKernelSource(const SymMatrix& k) : k_(&k) {}
  index_t size() const override { return k_->size(); }
  double entry(index_t i, index_t j) const override { return (*k_)(i, j); }
  void column(index_t j, std::span<double> out) const override;
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const SymMatrix* k_;
};

/// K = A A^T for a tall factor A (N x r). apply costs O(N r).
class FactorKernelSource final : public KernelSource {
 public:
  explicit FactorKernelSource(Matrix a) : a_(std::move(a)) {}
  index_t size() const override { return a_.rows(); }
  double entry(index_t i, index_t j) const override { return dot(a_.row(i), a_.row(j)); }
  void apply(std::span<const double> x, std::span<double> y) const override;
  const Matrix& factor() const { return a_; }

 private:
  Matrix a_;
};

/// Lazy kernel evaluation over a point set.
class PointsKernelSource final : public KernelSource {
 public:
  PointsKernelSource(const Dataset& data, KernelFunction k) : data_(&data), k_(std::move(k)) {}
  index_t size() const override { return data_->size(); }
  double entry(index_t i, index_t j) const override {
    return k_(data_->points.row(i), data_->points.row(j));
  }
  const Dataset& data() const { return *data_; }
  const KernelFunction& kernel() const { return k_; }

 private:
  const Dataset* data_;
  KernelFunction k_;
};

}  // namespace nyla
