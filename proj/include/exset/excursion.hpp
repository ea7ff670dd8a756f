#pragma once

#include <limits>
#include <vector>

#include "exset/families.hpp"
#include "exset/gauss_prob.hpp"

namespace exset {

// One excursion / avoidance / contour computation.
struct ExcursionProblem {
  double level = 0.0;
  double alpha = 0.05;  // in (0,1); 1 admits everything (pure function run)
  Direction direction = Direction::Positive;
  Family family;
  IntegrationConfig config;
  bool marginalize_unused = true;

  void validate() const;
};

struct TraceRow {
  int node = -1;  // -1 marks a deterministic (never integrated) member
  double prob = 1.0;
  double se = 0.0;
};

struct ExcursionResult {
  int n = 0;
  double level = 0.0;
  double alpha = 0.05;
  Direction direction = Direction::Positive;

  Vector F;           // excursion (or avoidance) function, in [0,1]
  Vector marginal_p;  // marginal probability of each node's tagged side
  std::vector<std::int8_t> side;  // +1 above the level, -1 below
  std::vector<int> set;           // members at the requested alpha, ascending
  std::vector<int> u1, l1, l2;

  // Admission order (deterministic members first) and the joint-probability
  // trace along it; F restricted to this order is non-increasing.
  std::vector<int> admission;
  std::vector<TraceRow> trace;

  double family_param = std::numeric_limits<double>::quiet_NaN();
  double set_probability = 1.0;  // estimated joint probability of `set`
  double set_std_error = 0.0;
  bool degenerate = false;

  Vector contour_function() const;  // 1 - F
  std::vector<int> side_members(int sgn) const;  // set filtered by side
  std::vector<int> set_complement() const;       // contour uncertainty region
};

// Nodes with F_i >= 1 - alpha; F_i == 0 never qualifies, so alpha = 1
// returns every node with positive function value.
std::vector<int> set_from_function(const Vector& F, double alpha);

struct WeightedPosterior {
  GaussianPosterior posterior;
  double weight = 1.0;
};

// Shared driver: runs the sequential pass (or the one-dimensional search
// around it for two-parameter families) for a weighted set of Gaussian
// configurations whose admission order comes from the given marginals.
// `level_override` replaces the common level with a per-node one when
// building integration bounds (quantile-corrected runs use it). All
// configurations consume common random numbers, so k = 1 reduces exactly
// to the plain Gaussian path.
ExcursionResult excursion_compute(const ExcursionProblem& problem,
                                  const std::vector<WeightedPosterior>& configs,
                                  const NodeMarginals& marginals,
                                  const Vector* level_override = nullptr);

// Single sequential pass with a one-parameter family.
ExcursionResult excursion_one_param(const ExcursionProblem& problem,
                                    const GaussianPosterior& posterior);

// Golden-section search over the secondary family parameter, keeping the
// best set seen; the one-parameter slice is always evaluated, so the result
// is never smaller than the one-parameter set under the same seed.
ExcursionResult excursion_two_param(const ExcursionProblem& problem,
                                    const GaussianPosterior& posterior);

// Pair of level-avoiding sets / contour uncertainty regions.
ExcursionResult level_avoid(const ExcursionProblem& problem,
                            const GaussianPosterior& posterior);

}  // namespace exset
