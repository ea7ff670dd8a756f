#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "exset/excursion.hpp"
#include "exset/posterior_methods.hpp"

namespace exset {

// Reproducible simulated-data setups.
struct SimSpec {
  std::string example = "ex1";
  int grid = 0;    // ex1: prediction points (default 1000); ex2/3: lattice side
  int n_obs = 0;   // 0 picks the example default
  double lambda = 1.0;   // exponential covariance range (ex1)
  double nu = 1.0;       // Matern smoothness (lattice examples require 1)
  double kappa2 = 0.5;   // Matern scale (ex3 default 2)
  double phi2 = 1.0;     // Matern variance parameter
  double sigma = 0.1;    // measurement noise sd (ex3 default 0.5)
  std::uint64_t seed = 1;
  bool obs_at_grid = false;  // ex1: snap observation locations to grid nodes

  static SimSpec example1();
  static SimSpec example2();
  static SimSpec example3();
  void validate() const;
};

struct Simulation {
  SimSpec spec;
  GaussianPosterior posterior;  // conditional on the true parameters
  Vector truth;                 // latent field at the prediction nodes
  Vector y;
  std::vector<int> obs_nodes;  // lattice examples (repeats allowed)
  Vector obs_coords;           // ex1 observation locations
  std::shared_ptr<const Matrix> coords;  // prediction coordinates, n x d
  double spacing = 0.0;
};

// Matern covariance at distance h in d dimensions; h = 0 returns the
// analytic limit phi^2 Gamma(nu) / ((4 pi)^{d/2} Gamma(nu + d/2) kappa^{2nu}).
double matern_cov(double h, double nu, double kappa2, double phi2, int d);

// One-dimensional process with exponential covariance observed under
// Gaussian noise at random locations; dense kriging posterior on an equally
// spaced prediction grid over [0,2].
Simulation simulate_example1(const SimSpec& spec);

// Lattice Markov approximation of the nu = 1 Matern field over [0,10]^2
// observed with Gaussian noise at random nodes.
Simulation simulate_example2_3(const SimSpec& spec);

// Square-lattice precision builder: Q = tau (kappa^2 C + G) C^{-1}
// (kappa^2 C + G) with C the lumped cell areas and G the 5-point graph
// Laplacian; tau is calibrated so interior marginal variances match the
// Matern variance.
class LatticeSpde {
 public:
  LatticeSpde(int g, double side_length = 10.0);
  int dim() const { return g_ * g_; }
  int side() const { return g_; }
  double spacing() const { return h_; }
  std::shared_ptr<const Matrix> coords() const { return coords_; }
  SparseSymmetricMatrix precision(double kappa2, double phi2) const;

 private:
  SparseSymmetricMatrix precision_unscaled(double kappa2) const;
  double variance_ratio(double kappa2) const;  // interpolated calibration
  int g_ = 0;
  double h_ = 0.0;
  std::shared_ptr<const Matrix> coords_;
  Vector cell_area_;
  SparseMat stiffness_;
  std::vector<double> log_k2_grid_, log_ratio_;
};

// Observation model with hyper-parameters theta = (log sigma, log kappa,
// log phi): y = A x + e, x ~ N(0, Q(theta)^{-1}), e ~ N(0, sigma^2 I).
// Gaussian prior on theta.
struct LatentModel {
  std::function<SparseSymmetricMatrix(const Eigen::Vector3d&)> prior_precision;
  std::vector<int> obs_nodes;
  Vector y;
  Eigen::Vector3d theta_prior_mean = Eigen::Vector3d::Zero();
  double theta_prior_sd = 2.0;

  // Derived observation quantities.
  int dim = 0;
  Vector ata_diag;  // diag(A'A)
  Vector aty;       // A'y
  double yty = 0.0;

  void finalize();  // fills the derived fields
};

LatentModel lattice_model(std::shared_ptr<const LatticeSpde> lattice,
                          const Simulation& sim);

// log pi(theta | y) up to a constant (determinant and quadratic-form terms
// plus the theta prior).
double log_theta_posterior(const LatentModel& model,
                           const Eigen::Vector3d& theta);

// Conditional posterior x | y, theta.
GaussianPosterior conditional_posterior(const LatentModel& model,
                                        const Eigen::Vector3d& theta);

struct MapEstimate {
  Eigen::Vector3d mode;
  Eigen::Matrix3d hessian_inv;  // inverse negative Hessian at the mode
  double log_posterior = 0.0;
};

MapEstimate find_map(const LatentModel& model, const Eigen::Vector3d& init);

struct McmcOptions {
  int burnin = 2000;
  int thin = 5;
};

struct McmcDraws {
  Matrix x;      // n_draws rows
  Matrix theta;  // n_draws x 3
  double acceptance_rate = 0.0;
};

// Random-walk chain over theta with proposal covariance
// (2.38^2/3) * hessian_inv; a fresh latent draw is generated only when the
// proposal is accepted. Throws chain_divergence when the acceptance rate
// stays below 1% over 10^4 steps.
McmcDraws mcmc_posterior_draws(const LatentModel& model,
                               const MapEstimate& map, int n_draws,
                               const McmcOptions& options, RngStream& rng);

// Exact draws from the discrete-theta mixture defined by a configuration
// set: theta_i with probability w_i, then x | y, theta_i.
Matrix discrete_posterior_draws(const ParamConfigSet& set, int n_draws,
                                RngStream& rng);

// Hyper-parameter configurations around the mode: k = 1 (mode only),
// k = 15 (central composite style), k = 45 (product grid), weighted by the
// posterior density.
ParamConfigSet make_theta_configs(const LatentModel& model,
                                  const MapEstimate& map, int k);

struct CoverageReport {
  std::vector<double> alphas;
  std::vector<double> p_hat;
  std::vector<double> diff;  // (1 - alpha) - p_hat
  std::vector<double> se;
  int n_draws = 0;
  std::string sampler;
};

// Empirical simultaneous coverage of the alpha-indexed sets of a result:
// the fraction of posterior draws lying on the tagged side of the level at
// every member node, per alpha on the grid 0.01..0.99.
CoverageReport coverage(const ExcursionResult& result,
                        const std::function<Vector()>& next_draw, int n_draws,
                        double u, Direction direction);
CoverageReport coverage(const ExcursionResult& result, const Matrix& draws,
                        double u, Direction direction);

}  // namespace exset
