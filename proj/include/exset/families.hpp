#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "exset/cholesky.hpp"
#include "exset/sparse.hpp"

namespace exset {

enum class Direction { Positive, Negative, Avoid };

// Per-node one-dimensional marginal posterior: a single Gaussian, or a
// weighted mixture of Gaussians when hyper-parameter configurations are
// integrated numerically.
class NodeMarginals {
 public:
  static NodeMarginals gaussian(Vector mean, Vector sd);
  // component_means/sds: one row per mixture component, one column per node.
  static NodeMarginals mixture(Matrix component_means, Matrix component_sds,
                               Vector weights);

  int dim() const { return static_cast<int>(means_.cols()); }
  int components() const { return static_cast<int>(means_.rows()); }

  double cdf(int node, double x) const;
  double sf(int node, double x) const;  // P(x_node > x)
  // Inverts the cdf to absolute accuracy 1e-10 (bisection plus secant
  // polish; the Gaussian case is closed form).
  double quantile(int node, double rho) const;

  double mean(int node) const;
  double sd(int node) const;  // mixture: total standard deviation

 private:
  Matrix means_, sds_;
  Vector weights_;
};

// Marginal quantities at a fixed level u.
struct MarginalSummary {
  double level = 0.0;
  Vector mean;
  Vector sd;
  Vector p_above;  // P(x_i > u)
  Vector p_below;  // P(x_i < u)
  NodeMarginals marginals;

  int dim() const { return static_cast<int>(p_above.size()); }
};

MarginalSummary marginal_summary(const NodeMarginals& marginals, double u);
MarginalSummary marginal_summary(const GaussianPosterior& posterior, double u);

enum class FamilyKind {
  OneParam,
  TwoParamLevel,      // secondary = admission level v
  TwoParamSmoothing,  // secondary = averaging radius tau, needs coordinates
  LevelAvoidOne,
  LevelAvoidTwo,  // secondary = positive-side share lambda in (0,1)
};

// A nested family of candidate sets; sweeping its growth parameter admits
// nodes in a fixed order.
struct Family {
  FamilyKind kind = FamilyKind::OneParam;
  Direction direction = Direction::Positive;
  double level = 0.0;      // u
  double secondary = 0.0;  // v / tau / lambda, by kind
  std::shared_ptr<const Matrix> coords;  // n x d, smoothing kinds only

  static Family one_param(Direction d, double u);
  static Family two_param_level(Direction d, double u, double v);
  static Family two_param_smoothing(Direction d, double u, double tau,
                                    std::shared_ptr<const Matrix> coords);
  static Family level_avoid_one(double u);
  static Family level_avoid_two(double u, double lambda = 0.5);

  bool avoiding() const {
    return kind == FamilyKind::LevelAvoidOne ||
           kind == FamilyKind::LevelAvoidTwo;
  }
  Family with_secondary(double s) const {
    Family f = *this;
    f.secondary = s;
    return f;
  }
};

// Admission order plus the three-class split and the elimination order
// handed to the factorization. Admission position 0 is eliminated last.
struct NodeOrdering {
  std::vector<int> admission;       // original ids, order of admission
  std::vector<std::int8_t> side;    // per node: +1 above u, -1 below u
  std::vector<std::int8_t> node_class;  // per node: 1, 2 or 3
  std::vector<char> deterministic;  // sd below 1e-12, resolved by the mean
  std::vector<char> det_in_set;     // deterministic and satisfying the side
  Permutation perm;
  int n_integrated = 0;  // leading admission entries that enter the sampler
};

// Family-induced admission order over all nodes (most eligible first), with
// per-node sides for avoiding families. Ties break on ascending node index.
NodeOrdering admission_order(const Family& family,
                             const MarginalSummary& summary);

// Circular-average smoothing of per-node probabilities: the mean of p over
// all nodes within distance tau, always including the node itself.
Vector smooth_probs(const Vector& p, const Matrix& coords, double tau);

struct BoundSets {
  std::vector<int> u1;  // marginal upper bound
  std::vector<int> l1;  // Bonferroni lower bound
  std::vector<int> l2;  // Holm step-down lower bound
};

// Bounds from the side-appropriate marginal probabilities at miss rate
// alpha: U1 = {p >= 1-alpha}, L1 = {p >= 1-alpha/n}, L2 = Holm step-down.
BoundSets marginal_bounds(const Vector& p, double alpha);

// Side-appropriate marginal probability per node: p_above, p_below, or
// max of the two for avoiding families.
Vector side_probabilities(const Family& family, const MarginalSummary& summary);

struct OrderingOptions {
  bool marginalize_unused = true;  // false: admit excluded nodes with
                                   // vacuous bounds instead
  double deterministic_sd = 1e-12;
  double admissible_floor = 0.0;  // nodes with side probability <= floor
                                  // never enter the sampler
};

// Combines the family order with the three-class split: L2 nodes first
// (fill-reducing order on their subgraph), remaining admissible nodes in
// family order, everything else marginalized out through the leading block
// of the elimination order (or appended with vacuous bounds).
NodeOrdering build_ordering(const Family& family,
                            const MarginalSummary& summary,
                            const BoundSets& bounds, double alpha,
                            const SparseSymmetricMatrix* graph,
                            const OrderingOptions& options = {});

}  // namespace exset
