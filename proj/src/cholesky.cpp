#include "exset/cholesky.hpp"

#include <algorithm>
#include <cmath>

namespace exset {

namespace {

constexpr double kPivotFloor = 1e-300;

// Elimination tree of a symmetric CSC pattern (upper entries drive it).
std::vector<int> elimination_tree(const SparseMat& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> parent(n, -1), ancestor(n, -1);
  for (int k = 0; k < n; ++k) {
    for (SparseMat::InnerIterator it(a, k); it; ++it) {
      int i = static_cast<int>(it.row());
      if (i >= k) continue;
      // Climb with path compression.
      while (i != -1 && i != k) {
        const int next = ancestor[i];
        ancestor[i] = k;
        if (next == -1) {
          parent[i] = k;
          break;
        }
        i = next;
      }
    }
  }
  return parent;
}

}  // namespace

CholeskyFactor cholesky_sparse(const SparseSymmetricMatrix& q,
                               const Permutation& perm) {
  const SparseSymmetricMatrix qp = q.permuted(perm);
  const SparseMat& a = qp.eigen();
  const int n = qp.dim();

  const std::vector<int> parent = elimination_tree(a);

  // Up-looking factorization; columns grow by appending row k as it is
  // eliminated, so row indices stay ascending with the diagonal first.
  std::vector<std::vector<int>> col_rows(n);
  std::vector<std::vector<double>> col_vals(n);
  std::vector<double> x(n, 0.0);
  std::vector<int> flag(n, -1), pattern(n);

  std::int64_t lower_nnz = 0;
  for (int k = 0; k < n; ++k) {
    int top = n;
    flag[k] = k;
    double d = 0.0;
    for (SparseMat::InnerIterator it(a, k); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i > k) continue;
      ++lower_nnz;
      if (i == k) {
        d = it.value();
        continue;
      }
      x[i] = it.value();
      int len = 0, node = i;
      while (flag[node] != k) {
        pattern[len++] = node;
        flag[node] = k;
        node = parent[node];
      }
      while (len > 0) pattern[--top] = pattern[--len];
    }
    // Sparse triangular solve against the built part of L.
    for (int t = top; t < n; ++t) {
      const int j = pattern[t];
      const double lkj = x[j] / col_vals[j][0];
      x[j] = 0.0;
      const auto& rows = col_rows[j];
      const auto& vals = col_vals[j];
      for (std::size_t p = 1; p < rows.size(); ++p) {
        if (rows[p] < k) x[rows[p]] -= vals[p] * lkj;
      }
      d -= lkj * lkj;
      col_rows[j].push_back(k);
      col_vals[j].push_back(lkj);
    }
    if (!(d > kPivotFloor)) throw not_positive_definite(k, d);
    col_rows[k].push_back(k);
    col_vals[k].push_back(std::sqrt(d));
  }

  CholeskyFactor f;
  f.n_ = n;
  f.perm_ = perm;
  f.col_ptr_.assign(n + 1, 0);
  std::int64_t nnz = 0;
  for (int j = 0; j < n; ++j) nnz += static_cast<std::int64_t>(col_rows[j].size());
  f.row_idx_.reserve(nnz);
  f.values_.reserve(nnz);
  for (int j = 0; j < n; ++j) {
    f.col_ptr_[j] = static_cast<int>(f.row_idx_.size());
    f.row_idx_.insert(f.row_idx_.end(), col_rows[j].begin(), col_rows[j].end());
    f.values_.insert(f.values_.end(), col_vals[j].begin(), col_vals[j].end());
  }
  f.col_ptr_[n] = static_cast<int>(f.row_idx_.size());
  f.fill_in_ = nnz - lower_nnz;
  return f;
}

CholeskyFactor cholesky(const GaussianPosterior& posterior,
                        const Permutation& perm) {
  if (posterior.has_precision())
    return cholesky_sparse(posterior.precision(), perm);

  // Dense covariance: factor the permuted cached precision densely.
  const Matrix& prec = posterior.dense_precision();
  const int n = static_cast<int>(prec.rows());
  Matrix qp(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      qp(k, l) = prec(perm.forward(k), perm.forward(l));

  Matrix lo = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double d = qp(j, j) - lo.row(j).head(j).squaredNorm();
    if (!(d > kPivotFloor)) throw not_positive_definite(j, d);
    lo(j, j) = std::sqrt(d);
    const double inv = 1.0 / lo(j, j);
    for (int i = j + 1; i < n; ++i)
      lo(i, j) = (qp(i, j) - lo.row(i).head(j).dot(lo.row(j).head(j))) * inv;
  }

  CholeskyFactor f;
  f.n_ = n;
  f.perm_ = perm;
  f.col_ptr_.assign(n + 1, 0);
  const std::int64_t nnz =
      static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(n) + 1) / 2;
  f.row_idx_.reserve(nnz);
  f.values_.reserve(nnz);
  for (int j = 0; j < n; ++j) {
    f.col_ptr_[j] = static_cast<int>(f.row_idx_.size());
    for (int i = j; i < n; ++i) {
      f.row_idx_.push_back(i);
      f.values_.push_back(lo(i, j));
    }
  }
  f.col_ptr_[n] = static_cast<int>(f.row_idx_.size());
  f.fill_in_ = 0;
  return f;
}

double CholeskyFactor::log_det() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += std::log(diag(j));
  return 2.0 * s;
}

Vector CholeskyFactor::solve_lower(const Vector& b) const {
  Vector y = b;
  for (int j = 0; j < n_; ++j) {
    y[j] /= diag(j);
    const auto rows = offdiag_rows(j);
    const auto vals = offdiag_values(j);
    for (std::size_t p = 0; p < rows.size(); ++p) y[rows[p]] -= vals[p] * y[j];
  }
  return y;
}

Vector CholeskyFactor::solve_upper(const Vector& b) const {
  Vector x = b;
  for (int i = n_ - 1; i >= 0; --i) {
    const auto rows = offdiag_rows(i);
    const auto vals = offdiag_values(i);
    double acc = 0.0;
    for (std::size_t p = 0; p < rows.size(); ++p) acc += vals[p] * x[rows[p]];
    x[i] = (x[i] - acc) / diag(i);
  }
  return x;
}

Vector CholeskyFactor::solve(const Vector& b_original) const {
  Vector bp(n_);
  for (int k = 0; k < n_; ++k) bp[k] = b_original[perm_.forward(k)];
  Vector xp = solve_upper(solve_lower(bp));
  Vector x(n_);
  for (int k = 0; k < n_; ++k) x[perm_.forward(k)] = xp[k];
  return x;
}

Matrix CholeskyFactor::dense_lower() const {
  Matrix l = Matrix::Zero(n_, n_);
  for (int j = 0; j < n_; ++j) {
    l(j, j) = diag(j);
    const auto rows = offdiag_rows(j);
    const auto vals = offdiag_values(j);
    for (std::size_t p = 0; p < rows.size(); ++p) l(rows[p], j) = vals[p];
  }
  return l;
}

ConditionalCoeffs conditional_coeffs(const CholeskyFactor& factor, int i) {
  ConditionalCoeffs c;
  const double lii = factor.diag(i);
  c.variance = 1.0 / (lii * lii);
  const auto rows = factor.offdiag_rows(i);
  const auto vals = factor.offdiag_values(i);
  c.neighbors.assign(rows.begin(), rows.end());
  c.weights.resize(vals.size());
  for (std::size_t p = 0; p < vals.size(); ++p) c.weights[p] = -vals[p] / lii;
  return c;
}

Vector partial_inverse_diagonal(const CholeskyFactor& factor) {
  const int n = factor.dim();
  // sigma[col] holds inverse entries on the factor pattern of that column.
  std::vector<std::vector<double>> sigma(n);
  const auto lookup = [&](int r, int c) -> double {
    if (r < c) std::swap(r, c);
    if (r == c) return sigma[c][0];
    const auto rows = factor.offdiag_rows(c);
    const auto it = std::lower_bound(rows.begin(), rows.end(), r);
    if (it == rows.end() || *it != r)
      throw numeric_error("partial inverse pattern closure violated");
    return sigma[c][1 + static_cast<std::size_t>(it - rows.begin())];
  };

  for (int i = n - 1; i >= 0; --i) {
    const auto rows = factor.offdiag_rows(i);
    const auto vals = factor.offdiag_values(i);
    const double lii = factor.diag(i);
    const int m = static_cast<int>(rows.size());
    sigma[i].assign(m + 1, 0.0);
    // Entries (j, i) for j in the column pattern, farthest first, then the
    // diagonal itself.
    for (int t = m - 1; t >= -1; --t) {
      const int j = (t == -1) ? i : rows[t];
      double acc = 0.0;
      for (int p = 0; p < m; ++p) acc += vals[p] * lookup(rows[p], j);
      double v = -acc / lii;
      if (t == -1) v += 1.0 / (lii * lii);
      sigma[i][t + 1] = v;
    }
  }

  Vector diag(n);
  for (int i = 0; i < n; ++i) diag[i] = sigma[i][0];
  return diag;
}

Vector marginal_variances(const GaussianPosterior& posterior) {
  const int n = posterior.dim();
  if (!posterior.has_precision()) {
    return posterior.covariance().diagonal();
  }
  const auto order = amd_order(posterior.precision());
  const CholeskyFactor f =
      cholesky_sparse(posterior.precision(), Permutation::from_order(order));
  const Vector dp = partial_inverse_diagonal(f);
  Vector out(n);
  for (int k = 0; k < n; ++k) out[f.permutation().forward(k)] = dp[k];
  return out;
}

Vector sample(const GaussianPosterior& posterior, const CholeskyFactor& factor,
              RngStream& rng) {
  const int n = factor.dim();
  Vector z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  const Vector v = factor.solve_upper(z);
  Vector x(n);
  for (int k = 0; k < n; ++k) {
    const int o = factor.permutation().forward(k);
    x[o] = posterior.mean()[o] + v[k];
  }
  return x;
}

}  // namespace exset
