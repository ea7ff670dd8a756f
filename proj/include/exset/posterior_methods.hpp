#pragma once

#include <map>
#include <string>
#include <vector>

#include "exset/excursion.hpp"
#include "exset/families.hpp"
#include "exset/gauss_prob.hpp"

namespace exset {

// One hyper-parameter configuration with its integration weight and the
// Gaussian conditional posterior at that configuration.
struct ParamConfig {
  std::map<std::string, double> theta;
  double weight = 1.0;
  GaussianPosterior posterior;
};

// Weighted configuration set {(theta_i, w_i)}; weights are normalized to
// sum to one. A single configuration degenerates to the plug-in treatment.
class ParamConfigSet {
 public:
  explicit ParamConfigSet(std::vector<ParamConfig> configs);

  int size() const { return static_cast<int>(configs_.size()); }
  int dim() const { return configs_.front().posterior.dim(); }
  const ParamConfig& operator[](int i) const { return configs_[i]; }
  const std::vector<ParamConfig>& configs() const { return configs_; }
  // Index of the plug-in configuration: largest weight, first on ties.
  int designated() const;

 private:
  std::vector<ParamConfig> configs_;
};

// The implied marginal posterior per node: a Gaussian mixture over the
// configurations.
using MixtureMarginals = NodeMarginals;
MixtureMarginals mixture_marginals(const ParamConfigSet& set);

// Box probability under the plug-in configuration alone.
ProbabilityEstimate eb_probability(const ParamConfigSet& set,
                                   const Bounds& bounds,
                                   const IntegrationConfig& config);

// Weighted combination of per-configuration box probabilities, with
// std_error = sqrt(sum w_i^2 se_i^2).
ProbabilityEstimate ni_probability(const ParamConfigSet& set,
                                   const Bounds& bounds,
                                   const IntegrationConfig& config);

struct QcAdjustedBounds {
  Bounds bounds;
  // Nodes whose mixture CDF saturated at a finite bound; the bound was
  // widened to +-inf.
  std::vector<int> overflowed;
};

// Maps each finite bound through the mixture marginal CDF and back through
// the plug-in Gaussian marginal, so marginal probabilities agree between
// the two descriptions.
QcAdjustedBounds qc_bounds(const MixtureMarginals& mixture,
                           const GaussianPosterior& gaussian,
                           const Bounds& bounds);

// Excursion computations under the three treatments of hyper-parameter
// uncertainty. All of them accept one-parameter and avoiding families;
// the plug-in and quantile-corrected paths accept two-parameter families
// as well.
ExcursionResult eb_excursion(const ExcursionProblem& problem,
                             const ParamConfigSet& set);
ExcursionResult qc_excursion(const ExcursionProblem& problem,
                             const ParamConfigSet& set);
// k lockstep sequential passes sharing the mixture-derived admission order;
// the running probability is the weighted combination.
ExcursionResult ni_excursion(const ExcursionProblem& problem,
                             const ParamConfigSet& set);

}  // namespace exset
