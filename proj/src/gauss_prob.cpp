#include "exset/gauss_prob.hpp"

#include <algorithm>
#include <cmath>

#include "exset/errors.hpp"

namespace exset {

namespace {

constexpr double kMassFloor = 1e-300;

double log_sum_exp(const Eigen::ArrayXd& v) {
  const double m = v.maxCoeff();
  if (m == -kInf) return -kInf;
  return m + std::log((v - m).exp().sum());
}

// First primes, enough for the QMC dimension cap.
std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  int candidate = 2;
  while (static_cast<int>(primes.size()) < count) {
    bool is_prime = true;
    for (int p : primes) {
      if (p * p > candidate) break;
      if (candidate % p == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes.push_back(candidate);
    ++candidate;
  }
  return primes;
}

}  // namespace

void IntegrationConfig::validate() const {
  if (n_particles < 2) throw input_error("n_particles must be >= 2");
  if (!(ess_fraction > 0.0 && ess_fraction <= 1.0))
    throw input_error("ess_fraction must lie in (0,1]");
  if (qmc_points < 16) throw input_error("qmc_points must be >= 16");
  if (qmc_randomizations < 2)
    throw input_error("qmc_randomizations must be >= 2");
}

Bounds::Bounds(Vector lower, Vector upper)
    : a(std::move(lower)), b(std::move(upper)) {
  if (a.size() != b.size()) throw input_error("bound vectors differ in length");
}

Bounds Bounds::unbounded(int n) {
  return Bounds(Vector::Constant(n, -kInf), Vector::Constant(n, kInf));
}

std::string to_string(ProbMethod m) {
  switch (m) {
    case ProbMethod::GHK:
      return "GHK";
    case ProbMethod::QMC:
      return "QMC(richtmyer)";
    case ProbMethod::MC:
      return "MC";
  }
  return "?";
}

double ghk_truncate_sample(double mean, double sd, double a, double b,
                           double u) {
  if (!(sd > 0.0)) throw numeric_error("truncated sampling needs sd > 0");
  if (a >= b) throw empty_interval(0);
  if (!(u > 0.0 && u < 1.0)) throw numeric_error("u must lie in (0,1)");
  const double lo = (a == -kInf) ? -kInf : (a - mean) / sd;
  const double hi = (b == kInf) ? kInf : (b - mean) / sd;
  return mean + sd * truncated_normal_quantile(lo, hi, u);
}

ParticleSystem ghk_init(const GaussianPosterior& posterior,
                        std::shared_ptr<const CholeskyFactor> factor,
                        const Bounds& bounds, const IntegrationConfig& config) {
  config.validate();
  if (factor->dim() != bounds.dim() || factor->dim() != posterior.dim())
    throw input_error("factor, bounds and posterior dimensions differ");

  ParticleSystem s;
  s.factor_ = std::move(factor);
  s.mean_ = posterior.mean();
  s.bounds_ = bounds;
  s.config_ = config;
  s.stream_ = substream(config.seed, "ghk");
  s.n_ = config.n_particles;
  s.logw_ = Eigen::ArrayXd::Zero(s.n_);
  s.depth_ = 0;
  s.extend_one();
  return s;
}

ParticleSystem& ghk_extend(ParticleSystem& state, int count) {
  state.extend(count);
  return state;
}

void ParticleSystem::extend(int count) {
  if (depth_ + count > dim())
    throw std::out_of_range("extension past the last variable");
  for (int c = 0; c < count; ++c) {
    extend_one();
    maybe_resample();
  }
}

void ParticleSystem::extend_one() {
  const int n = dim();
  const int pos = n - 1 - depth_;
  const int node = factor_->permutation().forward(pos);
  const double ai = bounds_.a[node];
  const double bi = bounds_.b[node];
  if (ai >= bi) throw empty_interval(node);

  const double lii = factor_->diag(pos);
  const double sd = 1.0 / lii;

  // Conditional mean via the backward autoregression: contributions come
  // from already-sampled variables in the column pattern below pos.
  Eigen::ArrayXd cm = Eigen::ArrayXd::Zero(n_);
  const auto rows = factor_->offdiag_rows(pos);
  const auto vals = factor_->offdiag_values(pos);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const int d = n - 1 - rows[p];
    const double mu_r = mean_[factor_->permutation().forward(rows[p])];
    cm += vals[p] * (rows_[d] - mu_r);
  }

  Eigen::ArrayXd x(n_);
  const double mu_i = mean_[node];
  bool any_alive = false;
  for (int j = 0; j < n_; ++j) {
    if (logw_[j] == -kInf) {
      x[j] = std::clamp(mu_i, ai, bi);
      continue;
    }
    const double m = mu_i - sd * cm[j];
    const double lo = (ai == -kInf) ? -kInf : (ai - m) * lii;
    const double hi = (bi == kInf) ? kInf : (bi - m) * lii;
    const double mass = normal_interval_mass(lo, hi);
    if (!(mass >= kMassFloor)) {
      logw_[j] = -kInf;
      x[j] = std::clamp(m, ai, bi);
      continue;
    }
    if (lo == -kInf && hi == kInf) {
      // Vacuous constraint: weight untouched, plain normal draw.
      const double u = counter_uniform(
          stream_, (static_cast<std::uint64_t>(node) << 32) ^
                       static_cast<std::uint64_t>(j));
      x[j] = m + sd * normal_quantile(u);
      any_alive = true;
      continue;
    }
    const double u = counter_uniform(
        stream_, (static_cast<std::uint64_t>(node) << 32) ^
                     static_cast<std::uint64_t>(j));
    x[j] = m + sd * truncated_normal_quantile(lo, hi, u);
    logw_[j] += std::log(mass);
    any_alive = true;
  }
  rows_.push_back(std::move(x));
  ++depth_;
  if (!any_alive) degenerate_ = true;
}

double ParticleSystem::ess() const {
  const double m = logw_.maxCoeff();
  if (m == -kInf) return 0.0;
  const Eigen::ArrayXd v = (logw_ - m).exp();
  const double s1 = v.sum();
  const double s2 = v.square().sum();
  return s1 * s1 / s2;
}

double ParticleSystem::current_rel_var() const {
  const double m = logw_.maxCoeff();
  if (m == -kInf) return 0.0;
  const Eigen::ArrayXd v = (logw_ - m).exp();
  const double mean = v.mean();
  if (n_ < 2 || mean <= 0.0) return 0.0;
  const double var = (v - mean).square().sum() / (n_ - 1);
  return var / (mean * mean);
}

ProbabilityEstimate ParticleSystem::estimate() const {
  ProbabilityEstimate e;
  e.method = ProbMethod::GHK;
  e.n_effective = ess();
  e.degenerate = degenerate_;
  if (degenerate_) return e;  // value 0
  const double log_est = log_accum_ + log_sum_exp(logw_) - std::log(n_);
  e.value = std::min(1.0, std::exp(log_est));
  e.std_error = e.value * std::sqrt(rel_var_accum_ + current_rel_var() / n_);
  return e;
}

void ParticleSystem::maybe_resample() {
  if (degenerate_) return;
  if (ess() >= config_.ess_fraction * n_) return;

  rel_var_accum_ += current_rel_var() / n_;
  const double log_mean = log_sum_exp(logw_) - std::log(n_);
  log_accum_ += log_mean;

  // Systematic resampling.
  const double m = logw_.maxCoeff();
  Eigen::ArrayXd w = (logw_ - m).exp();
  w /= w.sum();
  const double u0 = counter_uniform(
      stream_ ^ 0x5262535245534d50ULL,
      (static_cast<std::uint64_t>(depth_) << 24) ^
          static_cast<std::uint64_t>(resample_count_));
  std::vector<int> pick(n_);
  double cum = w[0];
  int src = 0;
  for (int j = 0; j < n_; ++j) {
    const double target = (j + u0) / n_;
    while (cum < target && src + 1 < n_) cum += w[++src];
    pick[j] = src;
  }
  Eigen::ArrayXi idx(n_);
  for (int j = 0; j < n_; ++j) idx[j] = pick[j];
  for (auto& row : rows_) row = row(idx).eval();
  logw_.setZero();
  ++resample_count_;
}

void ParticleSystem::expand(int factor) {
  if (factor < 2) return;
  if (degenerate_) return;
  rel_var_accum_ += current_rel_var() / n_;
  const double log_mean = log_sum_exp(logw_) - std::log(n_);
  log_accum_ += log_mean;

  const int big = n_ * factor;
  const double m = logw_.maxCoeff();
  Eigen::ArrayXd w = (logw_ - m).exp();
  w /= w.sum();
  const double u0 = counter_uniform(
      stream_ ^ 0x455850414e440000ULL,
      (static_cast<std::uint64_t>(depth_) << 24) ^
          static_cast<std::uint64_t>(resample_count_));
  Eigen::ArrayXi idx(big);
  double cum = w[0];
  int src = 0;
  for (int j = 0; j < big; ++j) {
    const double target = (j + u0) / big;
    while (cum < target && src + 1 < n_) cum += w[++src];
    idx[j] = src;
  }
  for (auto& row : rows_) row = row(idx).eval();
  n_ = big;
  logw_ = Eigen::ArrayXd::Zero(big);
  ++resample_count_;
}

ProbabilityEstimate qmc_genz(const Vector& mean, const Matrix& covariance,
                             const Bounds& bounds,
                             const IntegrationConfig& config) {
  config.validate();
  const int n = static_cast<int>(mean.size());
  if (n > 2000) throw input_error("qmc_genz supports n <= 2000");
  if (covariance.rows() != n || bounds.dim() != n)
    throw input_error("qmc_genz dimension mismatch");

  // Dense lower Cholesky of the covariance.
  Matrix c = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double d = covariance(j, j) - c.row(j).head(j).squaredNorm();
    if (!(d > 1e-300)) throw not_positive_definite(j, d);
    c(j, j) = std::sqrt(d);
    const double inv = 1.0 / c(j, j);
    for (int i = j + 1; i < n; ++i)
      c(i, j) =
          (covariance(i, j) - c.row(i).head(j).dot(c.row(j).head(j))) * inv;
  }

  const std::vector<int> primes = first_primes(std::max(1, n - 1));
  std::vector<double> alpha(std::max(1, n - 1));
  for (std::size_t k = 0; k < alpha.size(); ++k)
    alpha[k] = std::sqrt(static_cast<double>(primes[k]));

  RngStream shift_rng(config.seed, "qmc");
  std::vector<double> estimates(config.qmc_randomizations);
  Vector y(n);

  for (int r = 0; r < config.qmc_randomizations; ++r) {
    std::vector<double> shift(std::max(1, n - 1));
    for (auto& s : shift) s = shift_rng.uniform();

    double acc = 0.0;
    for (int k = 1; k <= config.qmc_points; ++k) {
      double f = 1.0;
      for (int i = 0; i < n && f > 0.0; ++i) {
        double t = 0.0;
        for (int j = 0; j < i; ++j) t += c(i, j) * y[j];
        const double lo = (bounds.a[i] == -kInf)
                              ? -kInf
                              : (bounds.a[i] - mean[i] - t) / c(i, i);
        const double hi = (bounds.b[i] == kInf)
                              ? kInf
                              : (bounds.b[i] - mean[i] - t) / c(i, i);
        const double d = normal_cdf(lo);
        const double e = normal_cdf(hi);
        f *= std::max(0.0, e - d);
        if (i + 1 < n) {
          double w = k * alpha[i] + shift[i];
          w -= std::floor(w);
          // Map strictly inside (0,1) to keep the quantile finite.
          const double p = d + std::max(1e-16, std::min(1.0 - 1e-16, w)) *
                                  std::max(0.0, e - d);
          y[i] = normal_quantile(std::min(1.0 - 1e-16, std::max(1e-16, p)));
        }
      }
      acc += f;
    }
    estimates[r] = acc / config.qmc_points;
  }

  ProbabilityEstimate out;
  out.method = ProbMethod::QMC;
  double m = 0.0;
  for (double e : estimates) m += e;
  m /= estimates.size();
  double v = 0.0;
  for (double e : estimates) v += (e - m) * (e - m);
  v /= (estimates.size() - 1.0) * estimates.size();
  out.value = std::min(1.0, m);
  out.std_error = std::sqrt(v);
  out.n_effective =
      static_cast<double>(config.qmc_points) * config.qmc_randomizations;
  return out;
}

ProbabilityEstimate mc_bruteforce(const GaussianPosterior& posterior,
                                  const Bounds& bounds, int n_samples,
                                  RngStream& rng) {
  const int n = posterior.dim();
  if (bounds.dim() != n) throw input_error("bounds dimension mismatch");
  Permutation perm = posterior.has_precision()
                         ? Permutation::from_order(amd_order(posterior.precision()))
                         : Permutation::identity(n);
  const CholeskyFactor f = cholesky(posterior, perm);
  int hits = 0;
  for (int s = 0; s < n_samples; ++s) {
    const Vector x = sample(posterior, f, rng);
    bool inside = true;
    for (int i = 0; i < n && inside; ++i)
      inside = x[i] > bounds.a[i] && x[i] < bounds.b[i];
    hits += inside ? 1 : 0;
  }
  ProbabilityEstimate out;
  out.method = ProbMethod::MC;
  out.value = static_cast<double>(hits) / n_samples;
  out.std_error = std::sqrt(out.value * (1.0 - out.value) / n_samples);
  out.n_effective = n_samples;
  return out;
}

}  // namespace exset
