#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "exset/cholesky.hpp"
#include "exset/errors.hpp"
#include "exset/normal.hpp"
#include "exset/sparse.hpp"
#include "oracles.hpp"

using namespace exset;

namespace {

GaussianPosterior sparse_posterior(const SparseSymmetricMatrix& q) {
  return GaussianPosterior(Vector::Zero(q.dim()), q);
}

Matrix reconstruct(const CholeskyFactor& f) {
  const Matrix l = f.dense_lower();
  return l * l.transpose();
}

}  // namespace

TEST_CASE("cholesky of the identity is the identity") {
  auto q = SparseSymmetricMatrix::identity(3);
  auto f = cholesky_sparse(q, Permutation::identity(3));
  CHECK(f.dense_lower().isApprox(Matrix::Identity(3, 3), 1e-14));
  CHECK(f.fill_in() == 0);
}

TEST_CASE("cholesky matches the hand factor of a 2x2") {
  std::vector<Eigen::Triplet<double>> tr{
      {0, 0, 2.0}, {1, 1, 2.0}, {1, 0, -1.0}};
  auto q = SparseSymmetricMatrix::from_triplets(2, tr);
  auto f = cholesky_sparse(q, Permutation::identity(2));
  CHECK(f.diag(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(f.offdiag_values(0)[0] ==
        doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(f.diag(1) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-14));
}

TEST_CASE("banded precision factors without fill under the natural order") {
  auto q = oracle::tridiag_precision(100);
  auto f = cholesky_sparse(q, Permutation::identity(100));
  CHECK(f.fill_in() == 0);
  for (int j = 0; j < 99; ++j) {
    auto rows = f.offdiag_rows(j);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == j + 1);
  }
}

TEST_CASE("factor reconstructs the permuted precision") {
  RngStream rng(7, "recon");
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 12;
    Matrix dense = oracle::random_spd(n, rng, 0.5);
    auto q = SparseSymmetricMatrix::from_dense(dense);
    // Random permutation.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.below(i + 1)]);
    auto perm = Permutation::from_order(order);
    auto f = cholesky_sparse(q, perm);
    Matrix qp(n, n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) qp(k, l) = dense(order[k], order[l]);
    CHECK((reconstruct(f) - qp).norm() <= 1e-10 * qp.norm());
  }
}

TEST_CASE("not positive definite reports the pivot") {
  std::vector<Eigen::Triplet<double>> tr{
      {0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {1, 0, 0.999}, {2, 1, 0.999},
      {2, 0, -0.9}};
  auto q = SparseSymmetricMatrix::from_triplets(3, tr);
  CHECK_THROWS_AS(cholesky_sparse(q, Permutation::identity(3)),
                  not_positive_definite);
  try {
    cholesky_sparse(q, Permutation::identity(3));
  } catch (const not_positive_definite& e) {
    CHECK(e.pivot == 2);
  }
}

TEST_CASE("conditional coefficients follow the backward autoregression") {
  SUBCASE("identity: unit variance, no neighbors") {
    auto f = cholesky_sparse(SparseSymmetricMatrix::identity(4),
                             Permutation::identity(4));
    auto c = conditional_coeffs(f, 1);
    CHECK(c.variance == doctest::Approx(1.0));
    CHECK(c.neighbors.empty());
  }
  SUBCASE("2x2 worked example") {
    std::vector<Eigen::Triplet<double>> tr{
        {0, 0, 2.0}, {1, 1, 2.0}, {1, 0, -1.0}};
    auto q = SparseSymmetricMatrix::from_triplets(2, tr);
    auto f = cholesky_sparse(q, Permutation::identity(2));
    auto c0 = conditional_coeffs(f, 0);
    CHECK(c0.variance == doctest::Approx(0.5).epsilon(1e-14));
    REQUIRE(c0.neighbors.size() == 1);
    CHECK(c0.neighbors[0] == 1);
    CHECK(c0.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
    // Last variable: variance is the inverse of the last pivot.
    auto c1 = conditional_coeffs(f, 1);
    CHECK(c1.variance == doctest::Approx(1.0 / 1.5).epsilon(1e-14));
    CHECK(c1.neighbors.empty());
  }
}

TEST_CASE("marginal variances") {
  SUBCASE("diagonal covariance reads off the diagonal") {
    Matrix cov = Eigen::Vector3d{1.0, 4.0, 9.0}.asDiagonal();
    GaussianPosterior p(Vector::Zero(3), cov);
    Vector v = marginal_variances(p);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(4.0));
    CHECK(v[2] == doctest::Approx(9.0));
  }
  SUBCASE("identity precision gives unit variances") {
    Vector v = marginal_variances(sparse_posterior(SparseSymmetricMatrix::identity(5)));
    for (int i = 0; i < 5; ++i) CHECK(v[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("tridiagonal matches the dense inverse diagonal") {
    auto q = oracle::tridiag_precision(20);
    Vector v = marginal_variances(sparse_posterior(q));
    Vector ref = oracle::dense_inverse_diagonal(q.dense());
    for (int i = 0; i < 20; ++i)
      CHECK(v[i] == doctest::Approx(ref[i]).epsilon(1e-8));
  }
  SUBCASE("random sparse patterns match the dense inverse diagonal") {
    RngStream rng(3, "margvar");
    for (int rep = 0; rep < 8; ++rep) {
      const int n = 40;
      // Random sparse SPD: band + a few long-range couplings.
      std::vector<Eigen::Triplet<double>> tr;
      for (int i = 0; i < n; ++i) tr.emplace_back(i, i, 4.0 + rng.uniform());
      for (int i = 0; i + 1 < n; ++i) tr.emplace_back(i + 1, i, -1.0);
      for (int e = 0; e < 15; ++e) {
        int i = static_cast<int>(rng.below(n)), j = static_cast<int>(rng.below(n));
        if (i == j) continue;
        tr.emplace_back(std::max(i, j), std::min(i, j), -0.3);
      }
      auto q = SparseSymmetricMatrix::from_triplets(n, tr);
      Vector v = marginal_variances(sparse_posterior(q));
      Vector ref = oracle::dense_inverse_diagonal(q.dense());
      for (int i = 0; i < n; ++i)
        CHECK(v[i] == doctest::Approx(ref[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("sampling matches the requested moments") {
  SUBCASE("fixed seed reproduces the draw") {
    auto q = oracle::tridiag_precision(10);
    GaussianPosterior p(Vector::Constant(10, 1.5), q);
    auto f = cholesky_sparse(q, Permutation::identity(10));
    RngStream r1(42, "sample"), r2(42, "sample");
    Vector a = sample(p, f, r1);
    Vector b = sample(p, f, r2);
    CHECK(a == b);
  }
  SUBCASE("identity precision: empirical covariance near identity") {
    const int n = 4, draws = 100000;
    auto q = SparseSymmetricMatrix::identity(n);
    GaussianPosterior p(Vector::Zero(n), q);
    auto f = cholesky_sparse(q, Permutation::identity(n));
    RngStream rng(11, "cov-check");
    Matrix acc = Matrix::Zero(n, n);
    Vector mean = Vector::Zero(n);
    for (int s = 0; s < draws; ++s) {
      Vector x = sample(p, f, rng);
      mean += x;
      acc += x * x.transpose();
    }
    mean /= draws;
    Matrix cov = acc / draws - mean * mean.transpose();
    // 3 MC standard errors: sd of x_i x_j is ~1 (offdiag) / sqrt(2) scale.
    const double tol = 3.0 * std::sqrt(2.0 / draws);
    CHECK((cov - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= tol + 1e-3);
  }
  SUBCASE("mean recovery") {
    const int draws = 100000;
    std::vector<Eigen::Triplet<double>> tr{
        {0, 0, 2.0}, {1, 1, 2.0}, {1, 0, -0.8}};
    auto q = SparseSymmetricMatrix::from_triplets(2, tr);
    GaussianPosterior p(Vector::Constant(2, 7.0), q);
    auto f = cholesky_sparse(q, Permutation::identity(2));
    RngStream rng(5, "mean-check");
    Vector mean = Vector::Zero(2);
    for (int s = 0; s < draws; ++s) mean += sample(p, f, rng);
    mean /= draws;
    const double sd = std::sqrt(marginal_variances(p)[0] / draws);
    CHECK(std::abs(mean[0] - 7.0) <= 3.0 * sd);
    CHECK(std::abs(mean[1] - 7.0) <= 3.0 * sd);
  }
  SUBCASE("probability transform passes a chi-square check over seeds") {
    // Standardized marginals of repeated draws, binned through the CDF;
    // Pearson statistic should stay below the 0.001 critical value.
    auto q = oracle::tridiag_precision(6);
    GaussianPosterior p(Vector::Zero(6), q);
    auto f = cholesky_sparse(q, Permutation::identity(6));
    Vector sds = marginal_variances(p).cwiseSqrt();
    const int bins = 20, draws = 4000;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
      RngStream rng(seed, "gof");
      std::vector<int> count(bins, 0);
      for (int s = 0; s < draws; ++s) {
        Vector x = sample(p, f, rng);
        const double u = normal_cdf(x[2] / sds[2]);
        ++count[std::min(bins - 1, static_cast<int>(u * bins))];
      }
      double chi2 = 0.0;
      const double expect = static_cast<double>(draws) / bins;
      for (int c : count) chi2 += (c - expect) * (c - expect) / expect;
      // chi2_{19} upper 0.001 quantile = 43.82.
      CHECK(chi2 < 43.82);
    }
  }
}

TEST_CASE("dense covariance posteriors route through the same interface") {
  RngStream rng(9, "dense");
  const int n = 8;
  Matrix cov = oracle::random_spd(n, rng, 0.3);
  GaussianPosterior p(Vector::Zero(n), cov);
  auto f = cholesky(p, Permutation::identity(n));
  // L L' should reproduce the inverse covariance.
  Matrix q = cov.inverse();
  CHECK((reconstruct(f) - q).norm() <= 1e-8 * q.norm());
  Vector v = marginal_variances(p);
  for (int i = 0; i < n; ++i) CHECK(v[i] == doctest::Approx(cov(i, i)));
}

TEST_CASE("permutation is a bijection with matching inverse") {
  auto p = Permutation::from_order({2, 0, 1});
  CHECK(p.forward(0) == 2);
  CHECK(p.inverse(2) == 0);
  for (int k = 0; k < 3; ++k) CHECK(p.inverse(p.forward(k)) == k);
  CHECK_THROWS_AS(Permutation::from_order({0, 0, 1}), input_error);
}
