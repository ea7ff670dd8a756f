#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "exset/rng.hpp"
#include "exset/sparse.hpp"

namespace exset {

// Lower-triangular factor L with P'QP = L L' under the recorded
// permutation, stored CSC with the diagonal first in every column.
// The stored pattern is the symbolic fill pattern, so entries that are
// numerically zero are kept; the partial-inverse recursion relies on that.
class CholeskyFactor {
 public:
  int dim() const { return n_; }
  const Permutation& permutation() const { return perm_; }

  double diag(int col) const { return values_[col_ptr_[col]]; }
  // Off-diagonal rows/values of a column (rows strictly below the diagonal,
  // ascending).
  std::span<const int> offdiag_rows(int col) const {
    return {row_idx_.data() + col_ptr_[col] + 1,
            static_cast<std::size_t>(col_ptr_[col + 1] - col_ptr_[col] - 1)};
  }
  std::span<const double> offdiag_values(int col) const {
    return {values_.data() + col_ptr_[col] + 1,
            static_cast<std::size_t>(col_ptr_[col + 1] - col_ptr_[col] - 1)};
  }

  std::int64_t nonzeros() const {
    return static_cast<std::int64_t>(values_.size());
  }
  // Entries created beyond the lower triangle of the input pattern.
  std::int64_t fill_in() const { return fill_in_; }

  double log_det() const;  // of the factored matrix, 2*sum(log diag)

  // Solves L y = b (forward) and L' x = y (backward) in permuted coordinates.
  Vector solve_lower(const Vector& b) const;
  Vector solve_upper(const Vector& b) const;
  // Solves (P'QP) z = b given in original coordinates.
  Vector solve(const Vector& b_original) const;

  Matrix dense_lower() const;

  friend CholeskyFactor cholesky(const GaussianPosterior&,
                                 const Permutation&);
  friend CholeskyFactor cholesky_sparse(const SparseSymmetricMatrix&,
                                        const Permutation&);

 private:
  int n_ = 0;
  Permutation perm_;
  std::vector<int> col_ptr_;
  std::vector<int> row_idx_;
  std::vector<double> values_;
  std::int64_t fill_in_ = 0;
};

// Factorizes the posterior's precision under the given ordering. Dense
// covariances are inverted to a precision first so that every downstream
// consumer sees the same backward autoregressive interface.
// Throws not_positive_definite when a pivot is <= 0 or below 1e-300.
CholeskyFactor cholesky(const GaussianPosterior& posterior,
                        const Permutation& perm);
CholeskyFactor cholesky_sparse(const SparseSymmetricMatrix& q,
                               const Permutation& perm);

struct ConditionalCoeffs {
  double variance = 0.0;  // Var(x_i | x_{i+1..n-1}) = 1/L_ii^2
  // Positions j > i (permuted) and weights w_j = -L_ji / L_ii; the
  // conditional mean is mu_i + sum_j w_j (x_j - mu_j).
  std::vector<int> neighbors;
  std::vector<double> weights;
};

// Backward autoregressive coefficients of variable i in permuted order.
ConditionalCoeffs conditional_coeffs(const CholeskyFactor& factor, int i);

// Per-node posterior variances in original order. Sparse precisions use the
// partial-inverse recursion over the factor pattern; dense covariances read
// the diagonal.
Vector marginal_variances(const GaussianPosterior& posterior);

// Partial inverse over the factor pattern; returns the diagonal of the
// inverse of the factored matrix, in permuted coordinates.
Vector partial_inverse_diagonal(const CholeskyFactor& factor);

// One exact draw x = mu + P L^{-T} z in original coordinates.
Vector sample(const GaussianPosterior& posterior, const CholeskyFactor& factor,
              RngStream& rng);

}  // namespace exset
