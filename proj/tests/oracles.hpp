#pragma once

// Test-only reference computations, kept independent of the library paths
// they are used to check.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "exset/rng.hpp"
#include "exset/sparse.hpp"

namespace oracle {

using exset::Matrix;
using exset::Vector;

// Closed-form orthant probability for an equicorrelated trivariate normal:
// 1/8 + 3/(4*pi) * asin(rho).
inline double trivariate_orthant(double rho) {
  return 0.125 + 3.0 / (4.0 * std::numbers::pi) * std::asin(rho);
}

// Random dense SPD matrix with unit-ish scale.
inline Matrix random_spd(int n, exset::RngStream& rng, double diag_boost = 0.0) {
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Matrix s = a * a.transpose() / n + Matrix::Identity(n, n) * (0.1 + diag_boost);
  return s;
}

// Dense inverse through Eigen, used as the reference for marginal variances.
inline Vector dense_inverse_diagonal(const Matrix& q) {
  return q.inverse().diagonal();
}

// Tridiagonal random-walk-like precision: 2 on the diagonal (1 at the ends),
// -1 off diagonal, plus a small ridge for positive definiteness.
inline exset::SparseSymmetricMatrix tridiag_precision(int n, double ridge = 0.05) {
  std::vector<Eigen::Triplet<double>> tr;
  for (int i = 0; i < n; ++i) {
    double d = ridge + ((i == 0 || i == n - 1) ? 1.0 : 2.0);
    tr.emplace_back(i, i, d);
    if (i + 1 < n) tr.emplace_back(i + 1, i, -1.0);
  }
  return exset::SparseSymmetricMatrix::from_triplets(n, tr);
}

// Monte Carlo mean of f over standard normal draws mapped by chol(Sigma).
inline double mc_box_probability(const Matrix& sigma, const Vector& mean,
                                 const Vector& a, const Vector& b,
                                 int n_samples, exset::RngStream& rng) {
  const int n = static_cast<int>(mean.size());
  Eigen::LLT<Matrix> llt(sigma);
  int hits = 0;
  Vector z(n);
  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    Vector x = mean + llt.matrixL() * z;
    bool in = true;
    for (int i = 0; i < n && in; ++i) in = x[i] > a[i] && x[i] < b[i];
    hits += in ? 1 : 0;
  }
  return static_cast<double>(hits) / n_samples;
}

}  // namespace oracle
