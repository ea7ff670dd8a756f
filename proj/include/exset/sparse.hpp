#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <variant>
#include <vector>

#include "exset/errors.hpp"

namespace exset {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;  // compressed column

// Bijection on 0..n-1. forward[k] is the original index placed at permuted
// position k; inverse is its inverse map.
class Permutation {
 public:
  Permutation() = default;
  static Permutation identity(int n);
  // Builds from the position->original map; validates bijectivity.
  static Permutation from_order(std::vector<int> order);

  int size() const { return static_cast<int>(forward_.size()); }
  int forward(int pos) const { return forward_[pos]; }
  int inverse(int orig) const { return inverse_[orig]; }
  const std::vector<int>& order() const { return forward_; }

 private:
  std::vector<int> forward_;
  std::vector<int> inverse_;
};

// Symmetric sparse matrix in CSC layout with the full (both triangles)
// pattern stored, so that column access yields the whole row/column of the
// symmetric matrix. Valid precisions have all diagonal entries present
// and positive.
class SparseSymmetricMatrix {
 public:
  SparseSymmetricMatrix() = default;
  // Accepts any triplet set covering at least one triangle; symmetrizes.
  static SparseSymmetricMatrix from_triplets(
      int n, const std::vector<Eigen::Triplet<double>>& entries);
  static SparseSymmetricMatrix from_eigen(const SparseMat& m);
  static SparseSymmetricMatrix from_dense(const Matrix& m);
  static SparseSymmetricMatrix identity(int n);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const SparseMat& eigen() const { return mat_; }
  double diagonal(int i) const { return mat_.coeff(i, i); }
  std::int64_t nonzeros() const { return mat_.nonZeros(); }

  // Symmetric permutation: result(k,l) = (*this)(order[k], order[l]).
  SparseSymmetricMatrix permuted(const Permutation& p) const;
  // Induced principal submatrix on the given original indices (in order).
  SparseSymmetricMatrix submatrix(const std::vector<int>& keep) const;

  Matrix dense() const { return Matrix(mat_); }

 private:
  explicit SparseSymmetricMatrix(SparseMat m) : mat_(std::move(m)) {}
  void validate() const;
  SparseMat mat_;
};

// Gaussian distribution for the latent vector: mean plus either a sparse
// precision (Markov case) or a dense covariance. Covariance posteriors
// carry an eagerly inverted dense precision so repeated factorizations
// under different orderings stay cheap; instances are immutable after
// construction.
class GaussianPosterior {
 public:
  GaussianPosterior(Vector mean, SparseSymmetricMatrix precision);
  GaussianPosterior(Vector mean, Matrix covariance);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  bool has_precision() const {
    return std::holds_alternative<SparseSymmetricMatrix>(shape_);
  }
  const SparseSymmetricMatrix& precision() const {
    return std::get<SparseSymmetricMatrix>(shape_);
  }
  const Matrix& covariance() const { return std::get<Matrix>(shape_); }
  // Dense covariance posteriors only: the cached inverse covariance.
  const Matrix& dense_precision() const { return *dense_precision_; }

 private:
  Vector mean_;
  std::variant<SparseSymmetricMatrix, Matrix> shape_;
  std::shared_ptr<const Matrix> dense_precision_;
};

// Approximate-minimum-degree ordering of a symmetric pattern; returns the
// elimination order as original indices.
std::vector<int> amd_order(const SparseSymmetricMatrix& m);

}  // namespace exset
