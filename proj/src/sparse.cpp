#include "exset/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <algorithm>
#include <cmath>

namespace exset {

Permutation Permutation::identity(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return from_order(std::move(v));
}

Permutation Permutation::from_order(std::vector<int> order) {
  const int n = static_cast<int>(order.size());
  std::vector<int> inv(n, -1);
  for (int k = 0; k < n; ++k) {
    const int o = order[k];
    if (o < 0 || o >= n || inv[o] != -1)
      throw input_error("permutation is not a bijection on 0.." +
                        std::to_string(n - 1));
    inv[o] = k;
  }
  Permutation p;
  p.forward_ = std::move(order);
  p.inverse_ = std::move(inv);
  return p;
}

SparseSymmetricMatrix SparseSymmetricMatrix::from_triplets(
    int n, const std::vector<Eigen::Triplet<double>>& entries) {
  // Symmetrize: keep the larger-magnitude of (i,j)/(j,i) when both given
  // (they should be equal; this makes one-triangle input work directly).
  std::vector<Eigen::Triplet<double>> full;
  full.reserve(entries.size() * 2);
  for (const auto& t : entries) {
    if (t.row() < 0 || t.row() >= n || t.col() < 0 || t.col() >= n)
      throw input_error("matrix entry out of range");
    full.emplace_back(t.row(), t.col(), t.value());
    if (t.row() != t.col()) full.emplace_back(t.col(), t.row(), t.value());
  }
  SparseMat m(n, n);
  // Duplicates collapse by keeping the last value seen.
  m.setFromTriplets(full.begin(), full.end(),
                    [](const double&, const double& b) { return b; });
  m.makeCompressed();
  SparseSymmetricMatrix out(std::move(m));
  out.validate();
  return out;
}

SparseSymmetricMatrix SparseSymmetricMatrix::from_eigen(const SparseMat& m) {
  std::vector<Eigen::Triplet<double>> tr;
  tr.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMat::InnerIterator it(m, k); it; ++it)
      tr.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                      it.value());
  return from_triplets(static_cast<int>(m.rows()), tr);
}

SparseSymmetricMatrix SparseSymmetricMatrix::from_dense(const Matrix& m) {
  std::vector<Eigen::Triplet<double>> tr;
  const int n = static_cast<int>(m.rows());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (m(i, j) != 0.0 || i == j) tr.emplace_back(i, j, m(i, j));
  return from_triplets(n, tr);
}

SparseSymmetricMatrix SparseSymmetricMatrix::identity(int n) {
  std::vector<Eigen::Triplet<double>> tr;
  tr.reserve(n);
  for (int i = 0; i < n; ++i) tr.emplace_back(i, i, 1.0);
  return from_triplets(n, tr);
}

void SparseSymmetricMatrix::validate() const {
  const int n = dim();
  if (n < 1) throw input_error("matrix dimension must be >= 1");
  for (int i = 0; i < n; ++i) {
    const double d = mat_.coeff(i, i);
    if (!(d > 0.0))
      throw input_error("diagonal entry " + std::to_string(i) +
                        " missing or not positive");
  }
  // Pattern symmetry with matching values.
  for (int j = 0; j < n; ++j)
    for (SparseMat::InnerIterator it(mat_, j); it; ++it) {
      const double other = mat_.coeff(j, static_cast<int>(it.row()));
      if (std::abs(other - it.value()) >
          1e-12 * std::max(1.0, std::abs(it.value())))
        throw input_error("matrix is not symmetric");
    }
}

SparseSymmetricMatrix SparseSymmetricMatrix::permuted(
    const Permutation& p) const {
  const int n = dim();
  std::vector<Eigen::Triplet<double>> tr;
  tr.reserve(mat_.nonZeros());
  for (int j = 0; j < n; ++j)
    for (SparseMat::InnerIterator it(mat_, j); it; ++it)
      tr.emplace_back(p.inverse(static_cast<int>(it.row())), p.inverse(j),
                      it.value());
  SparseMat m(n, n);
  m.setFromTriplets(tr.begin(), tr.end());
  m.makeCompressed();
  return SparseSymmetricMatrix(std::move(m));
}

SparseSymmetricMatrix SparseSymmetricMatrix::submatrix(
    const std::vector<int>& keep) const {
  const int m = static_cast<int>(keep.size());
  std::vector<int> pos(dim(), -1);
  for (int k = 0; k < m; ++k) pos[keep[k]] = k;
  std::vector<Eigen::Triplet<double>> tr;
  for (int k = 0; k < m; ++k) {
    const int j = keep[k];
    for (SparseMat::InnerIterator it(mat_, j); it; ++it) {
      const int pi = pos[it.row()];
      if (pi >= 0) tr.emplace_back(pi, k, it.value());
    }
  }
  SparseMat sm(m, m);
  sm.setFromTriplets(tr.begin(), tr.end());
  sm.makeCompressed();
  return SparseSymmetricMatrix(std::move(sm));
}

GaussianPosterior::GaussianPosterior(Vector mean,
                                     SparseSymmetricMatrix precision)
    : mean_(std::move(mean)), shape_(std::move(precision)) {
  if (mean_.size() != std::get<SparseSymmetricMatrix>(shape_).dim())
    throw input_error("mean length does not match precision dimension");
}

GaussianPosterior::GaussianPosterior(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), shape_(std::move(covariance)) {
  const auto& c = std::get<Matrix>(shape_);
  if (c.rows() != c.cols())
    throw input_error("covariance matrix is not square");
  if (mean_.size() != c.rows())
    throw input_error("mean length does not match covariance dimension");
  const int n = static_cast<int>(c.rows());
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    // Locate the offending pivot for the error report.
    Matrix l = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      const double d = c(j, j) - l.row(j).head(j).squaredNorm();
      if (!(d > 1e-300)) throw not_positive_definite(j, d);
      l(j, j) = std::sqrt(d);
      for (int i = j + 1; i < n; ++i)
        l(i, j) = (c(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  Matrix prec = llt.solve(Matrix::Identity(n, n));
  prec = (0.5 * (prec + prec.transpose())).eval();
  dense_precision_ = std::make_shared<const Matrix>(std::move(prec));
}

std::vector<int> amd_order(const SparseSymmetricMatrix& m) {
  Eigen::AMDOrdering<int> amd;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
  SparseMat a = m.eigen();
  amd(a, perm);
  // Eigen's convention: position k of the permuted matrix holds original
  // index perm.indices()[i] == k.
  const int n = m.dim();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[perm.indices()(i)] = i;
  return order;
}

}  // namespace exset
