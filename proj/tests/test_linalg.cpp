#include <doctest.h>

#include <cmath>

#include "nyla/linalg.hpp"
#include "nyla/rng.hpp"
#include "oracles.hpp"

using namespace nyla;

namespace {

SymMatrix make2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return SymMatrix::from_full(m);
}

double orthonormality_defect(const Matrix& v) {
  const Matrix g = matmul_tn(v, v);
  return frobenius_distance(g, Matrix::identity(v.rows()));
}

}  // namespace

TEST_CASE("eigh: analytic 2x2") {
  const EigenSystem es = eigh_descending(make2(2, 1, 1, 2));
  CHECK(es.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(es.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(orthonormality_defect(es.vectors) < 1e-12);
}

TEST_CASE("eigh: diagonal matrix is sorted with permuted-identity vectors") {
  std::vector<double> d = {5, 2, 9};
  const EigenSystem es = eigh_descending(SymMatrix::diagonal(d));
  CHECK(es.eigenvalues[0] == doctest::Approx(9.0));
  CHECK(es.eigenvalues[1] == doctest::Approx(5.0));
  CHECK(es.eigenvalues[2] == doctest::Approx(2.0));
  // eigenvector for 9 is e_2, for 5 is e_0, for 2 is e_1 (positive sign)
  CHECK(es.vectors(2, 0) == doctest::Approx(1.0));
  CHECK(es.vectors(0, 1) == doctest::Approx(1.0));
  CHECK(es.vectors(1, 2) == doctest::Approx(1.0));
  for (index_t k = 0; k < 3; ++k) {
    double off = 0.0;
    for (index_t i = 0; i < 3; ++i) off += std::fabs(es.vectors(i, k));
    CHECK(off == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("eigh: random 50x50 PSD reconstructs") {
  Rng rng(11);
  const SymMatrix a = oracles::random_psd(50, rng);
  const EigenSystem es = eigh_descending(a);
  const Matrix rec = es.reconstruct();
  CHECK(frobenius_distance(rec, a.to_matrix()) < 1e-7 * frobenius_norm(a.to_matrix()));
  CHECK(orthonormality_defect(es.vectors) < 1e-8);
  for (std::size_t i = 1; i < es.eigenvalues.size(); ++i)
    CHECK(es.eigenvalues[i] <= es.eigenvalues[i - 1]);
}

TEST_CASE("eigh: spectra are idempotent under reconstruction") {
  Rng rng(12);
  const SymMatrix a = oracles::random_symmetric(40, rng);
  const EigenSystem es = eigh_descending(a);
  const EigenSystem es2 = eigh_descending(SymMatrix::from_full(es.reconstruct()));
  for (std::size_t i = 0; i < es.eigenvalues.size(); ++i) {
    const double scale = std::max(std::fabs(es.eigenvalues.front()), 1.0);
    CHECK(std::fabs(es2.eigenvalues[i] - es.eigenvalues[i]) < 1e-7 * scale);
  }
}

TEST_CASE("eigh: Jacobi and QL paths agree") {
  Rng rng(13);
  const SymMatrix a = oracles::random_symmetric(60, rng);
  const EigenSystem ja = detail::eigh_jacobi(a);
  const EigenSystem ql = detail::eigh_tridiagonal_ql(a);
  const double scale = std::max(std::fabs(ja.eigenvalues.front()), 1.0);
  for (std::size_t i = 0; i < ja.eigenvalues.size(); ++i)
    CHECK(std::fabs(ja.eigenvalues[i] - ql.eigenvalues[i]) < 1e-9 * scale);
  CHECK(frobenius_distance(ql.reconstruct(), a.to_matrix()) < 1e-8 * scale * 60);
}

TEST_CASE("eigh: QL path on a 600x600 PSD matrix") {
  Rng rng(14);
  const SymMatrix a = oracles::random_psd(600, rng);
  const EigenSystem es = eigh_descending(a);
  CHECK(frobenius_distance(es.reconstruct(), a.to_matrix()) <
        1e-7 * frobenius_norm(a.to_matrix()));
  CHECK(orthonormality_defect(es.vectors) < 1e-8);
}

TEST_CASE("eigh: deterministic across calls") {
  Rng rng(15);
  const SymMatrix a = oracles::random_symmetric(20, rng);
  const EigenSystem e1 = eigh_descending(a);
  const EigenSystem e2 = eigh_descending(a);
  for (index_t i = 0; i < 20; ++i)
    for (index_t k = 0; k < 20; ++k) CHECK(e1.vectors(i, k) == e2.vectors(i, k));
}

TEST_CASE("eigh: rejects non-finite input") {
  SymMatrix a(2);
  a.set(0, 0, std::nan(""));
  CHECK_THROWS_AS(eigh_descending(a), std::invalid_argument);
}

TEST_CASE("pinv_psd: identity") {
  const SymMatrix p = pinv_psd(SymMatrix::identity(4));
  for (index_t i = 0; i < 4; ++i)
    for (index_t j = 0; j < 4; ++j) CHECK(p(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("pinv_psd: unit rank-1 projector is its own pseudo-inverse") {
  Rng rng(21);
  std::vector<double> v(6);
  for (auto& x : v) x = rng.normal();
  double nrm = norm2(v);
  for (auto& x : v) x /= nrm;
  SymMatrix a(6);
  for (index_t i = 0; i < 6; ++i)
    for (index_t j = i; j < 6; ++j)
      a.set(i, j, v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)]);
  const SymMatrix p = pinv_psd(a);
  for (index_t i = 0; i < 6; ++i)
    for (index_t j = 0; j < 6; ++j) CHECK(p(i, j) == doctest::Approx(a(i, j)).epsilon(1e-10));
}

TEST_CASE("pinv_psd: matches the direct-inverse oracle on invertible input") {
  Rng rng(22);
  const SymMatrix a = oracles::random_psd(20, rng, 0.1);
  const SymMatrix p = pinv_psd(a);
  const Matrix inv = oracles::gauss_inverse(a.to_matrix());
  for (index_t i = 0; i < 20; ++i)
    for (index_t j = 0; j < 20; ++j) CHECK(std::fabs(p(i, j) - inv(i, j)) < 1e-8);
}

TEST_CASE("pinv_psd: double pseudo-inverse restores the matrix on its range") {
  Rng rng(23);
  const SymMatrix a = oracles::random_psd(20, rng, 0.05);
  const SymMatrix p = pinv_psd(pinv_psd(a));
  CHECK(frobenius_distance(p.to_matrix(), a.to_matrix()) < 1e-6);
  // rank-deficient case: the involution still holds
  const SymMatrix low = oracles::random_psd_rank(20, 6, rng);
  const SymMatrix p2 = pinv_psd(pinv_psd(low));
  CHECK(frobenius_distance(p2.to_matrix(), low.to_matrix()) < 1e-6);
}

TEST_CASE("pinv_psd: rejects significantly indefinite input") {
  std::vector<double> d = {1.0, -1.0};
  CHECK_THROWS_AS(pinv_psd(SymMatrix::diagonal(d)), std::domain_error);
}

TEST_CASE("spectral_norm: trivial cases") {
  CHECK(spectral_norm(SymMatrix::identity(7)) == doctest::Approx(1.0).epsilon(1e-10));
  std::vector<double> d = {3, 1, 2};
  CHECK(spectral_norm(SymMatrix::diagonal(d)) == doctest::Approx(3.0).epsilon(1e-10));
  std::vector<double> neg = {2, -5, 1};
  CHECK(spectral_norm(SymMatrix::diagonal(neg)) == doctest::Approx(5.0).epsilon(1e-10));
  std::vector<double> pm = {3, -3, 1};
  CHECK(spectral_norm(SymMatrix::diagonal(pm)) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("spectral_norm: matches the full eigendecomposition on random matrices") {
  Rng rng(31);
  for (int rep = 0; rep < 4; ++rep) {
    const SymMatrix a = oracles::random_symmetric(100, rng);
    const EigenSystem es = eigh_descending(a);
    double want = 0.0;
    for (double lam : es.eigenvalues) want = std::max(want, std::fabs(lam));
    CHECK(oracles::rel_err(spectral_norm(a), want) < 1e-8);
  }
}

TEST_CASE("spectral_norm: Rayleigh quotient envelope") {
  Rng rng(32);
  const SymMatrix a = oracles::random_symmetric(3, rng);
  const double norm = spectral_norm(a);
  std::vector<double> u(3), au(3);
  double best = 0.0;
  for (int it = 0; it < 10000; ++it) {
    for (auto& x : u) x = rng.normal();
    const double nrm = norm2(u);
    for (auto& x : u) x /= nrm;
    a.apply(u, au);
    const double q = std::fabs(dot(u, au));
    CHECK(q <= norm * (1.0 + 1e-12));
    best = std::max(best, q);
  }
  CHECK(best >= (1.0 - 1e-3) * norm);
}

TEST_CASE("spectral_norm_op: zero operator") {
  const SymOp op = [](std::span<const double>, std::span<double> out) {
    for (auto& v : out) v = 0.0;
  };
  CHECK(spectral_norm_op(op, 12) == 0.0);
}

TEST_CASE("random_orthogonal: n=1 gives a sign") {
  const Matrix q1 = random_orthogonal(1, 5);
  CHECK(std::fabs(std::fabs(q1(0, 0)) - 1.0) < 1e-15);
}

TEST_CASE("random_orthogonal: deterministic in the seed") {
  const Matrix a = random_orthogonal(16, 99);
  const Matrix b = random_orthogonal(16, 99);
  const Matrix c = random_orthogonal(16, 100);
  CHECK(frobenius_distance(a, b) == 0.0);
  CHECK(frobenius_distance(a, c) > 1e-3);
}

TEST_CASE("random_orthogonal: orthogonal and incoherent") {
  const Matrix q = random_orthogonal(64, 7);
  CHECK(orthonormality_defect(q) < 1e-10);
  double mx = 0.0;
  for (index_t i = 0; i < 64; ++i)
    for (index_t j = 0; j < 64; ++j) mx = std::max(mx, std::fabs(q(i, j)));
  CHECK(std::sqrt(64.0) * mx < 6.0);
}
