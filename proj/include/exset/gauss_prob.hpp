#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "exset/cholesky.hpp"
#include "exset/normal.hpp"
#include "exset/rng.hpp"
#include "exset/sparse.hpp"

namespace exset {

// Knobs of the sequential integrator and its cross-checking oracles.
struct IntegrationConfig {
  int n_particles = 10000;
  double ess_fraction = 0.5;  // resample when ESS < ess_fraction * N
  std::uint64_t seed = 1;
  int qmc_points = 1 << 14;  // per randomization
  int qmc_randomizations = 8;

  void validate() const;
};

// Integration box; entries may be -inf / +inf.
struct Bounds {
  Vector a;
  Vector b;

  Bounds() = default;
  Bounds(Vector lower, Vector upper);
  static Bounds unbounded(int n);
  int dim() const { return static_cast<int>(a.size()); }
  bool vacuous(int i) const { return a[i] == -kInf && b[i] == kInf; }
};

enum class ProbMethod { GHK, QMC, MC };

std::string to_string(ProbMethod m);

struct ProbabilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double n_effective = 0.0;
  ProbMethod method = ProbMethod::GHK;
  bool degenerate = false;  // all importance weights underflowed
};

// State of the sequential importance sampler. Integration proceeds from the
// last permuted index backwards; depth counts the variables covered so far.
// Coordinate draws are counter-based on (stream, original node, particle), so
// results do not depend on the order untouched variables appear in.
class ParticleSystem {
 public:
  int depth() const { return depth_; }
  int dim() const { return factor_->dim(); }
  int n_particles() const { return n_; }
  double ess() const;
  bool degenerate() const { return degenerate_; }
  ProbabilityEstimate estimate() const;

  // Particle values of the variable integrated at step d (0-based), i.e.
  // permuted position dim()-1-d.
  const Eigen::ArrayXd& coordinates(int d) const { return rows_[d]; }
  const Eigen::ArrayXd& log_weights() const { return logw_; }

  // Integrates `count` further variables. Resamples systematically whenever
  // the ESS trigger fires; the running estimate telescopes through the
  // accumulated resampling constants.
  void extend(int count);

  // Replicates the system to `factor` times as many particles by systematic
  // resampling with uniform target weights.
  void expand(int factor);

  const CholeskyFactor& factor() const { return *factor_; }
  const Bounds& bounds() const { return bounds_; }

  friend ParticleSystem ghk_init(const GaussianPosterior&,
                                 std::shared_ptr<const CholeskyFactor>,
                                 const Bounds&, const IntegrationConfig&);

 private:
  void extend_one();
  void maybe_resample();
  double current_rel_var() const;

  std::shared_ptr<const CholeskyFactor> factor_;
  Vector mean_;    // original coordinates
  Bounds bounds_;  // original coordinates
  IntegrationConfig config_;
  std::uint64_t stream_ = 0;

  int n_ = 0;
  int depth_ = 0;
  std::vector<Eigen::ArrayXd> rows_;
  Eigen::ArrayXd logw_;
  double log_accum_ = 0.0;
  double rel_var_accum_ = 0.0;
  int resample_count_ = 0;
  bool degenerate_ = false;
};

// Starts the sampler on the last-ordered variable; the estimate at depth 1 is
// the exact univariate interval probability. Throws empty_interval when the
// variable's bounds satisfy a >= b.
ParticleSystem ghk_init(const GaussianPosterior& posterior,
                        std::shared_ptr<const CholeskyFactor> factor,
                        const Bounds& bounds, const IntegrationConfig& config);

ParticleSystem& ghk_extend(ParticleSystem& state, int count);

// Inverse-CDF draw from N(mean, sd^2) truncated to (a, b) at uniform u.
double ghk_truncate_sample(double mean, double sd, double a, double b,
                           double u);

// Separation-of-variables transform to the unit cube evaluated with a
// randomly shifted Richtmyer (Kronecker) sequence; the standard error comes
// from the independent random shifts.
ProbabilityEstimate qmc_genz(const Vector& mean, const Matrix& covariance,
                             const Bounds& bounds,
                             const IntegrationConfig& config);

// Fraction of exact joint draws inside the box, with binomial standard error.
ProbabilityEstimate mc_bruteforce(const GaussianPosterior& posterior,
                                  const Bounds& bounds, int n_samples,
                                  RngStream& rng);

}  // namespace exset
