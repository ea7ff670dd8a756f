#include "exset/families.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "exset/errors.hpp"
#include "exset/normal.hpp"

namespace exset {

NodeMarginals NodeMarginals::gaussian(Vector mean, Vector sd) {
  NodeMarginals m;
  m.means_ = mean.transpose();
  m.sds_ = sd.transpose();
  m.weights_ = Vector::Ones(1);
  return m;
}

NodeMarginals NodeMarginals::mixture(Matrix component_means,
                                     Matrix component_sds, Vector weights) {
  if (component_means.rows() != weights.size() ||
      component_sds.rows() != weights.size() ||
      component_means.cols() != component_sds.cols())
    throw input_error("mixture component shapes do not match");
  if (weights.minCoeff() <= 0.0)
    throw input_error("mixture weights must be positive");
  NodeMarginals m;
  m.means_ = std::move(component_means);
  m.sds_ = std::move(component_sds);
  m.weights_ = weights / weights.sum();
  return m;
}

double NodeMarginals::cdf(int node, double x) const {
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  double acc = 0.0;
  for (int c = 0; c < components(); ++c) {
    const double sd = sds_(c, node);
    if (sd > 0.0)
      acc += weights_[c] * normal_cdf((x - means_(c, node)) / sd);
    else
      acc += weights_[c] * (x >= means_(c, node) ? 1.0 : 0.0);
  }
  return acc;
}

double NodeMarginals::sf(int node, double x) const {
  if (x == kInf) return 0.0;
  if (x == -kInf) return 1.0;
  double acc = 0.0;
  for (int c = 0; c < components(); ++c) {
    const double sd = sds_(c, node);
    if (sd > 0.0)
      acc += weights_[c] * normal_sf((x - means_(c, node)) / sd);
    else
      acc += weights_[c] * (x > means_(c, node) ? 1.0 : 0.0);
  }
  return acc;
}

double NodeMarginals::quantile(int node, double rho) const {
  if (rho <= 0.0) return -kInf;
  if (rho >= 1.0) return kInf;
  if (components() == 1)
    return means_(0, node) + sds_(0, node) * normal_quantile(rho);

  // Bracket across component supports, then bisect with a secant polish.
  double lo = kInf, hi = -kInf;
  for (int c = 0; c < components(); ++c) {
    lo = std::min(lo, means_(c, node) - 10.0 * sds_(c, node));
    hi = std::max(hi, means_(c, node) + 10.0 * sds_(c, node));
  }
  while (cdf(node, lo) > rho) lo -= std::max(1.0, hi - lo);
  while (cdf(node, hi) < rho) hi += std::max(1.0, hi - lo);
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double flo = cdf(node, lo) - rho;
    const double fhi = cdf(node, hi) - rho;
    double mid = 0.5 * (lo + hi);
    if (fhi > flo) {
      const double sec = lo - flo * (hi - lo) / (fhi - flo);
      if (sec > lo + 1e-14 && sec < hi - 1e-14) mid = sec;
    }
    if (cdf(node, mid) < rho)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double NodeMarginals::mean(int node) const {
  double m = 0.0;
  for (int c = 0; c < components(); ++c) m += weights_[c] * means_(c, node);
  return m;
}

double NodeMarginals::sd(int node) const {
  const double m = mean(node);
  double v = 0.0;
  for (int c = 0; c < components(); ++c) {
    const double d = means_(c, node) - m;
    v += weights_[c] * (sds_(c, node) * sds_(c, node) + d * d);
  }
  return std::sqrt(v);
}

MarginalSummary marginal_summary(const NodeMarginals& marginals, double u) {
  MarginalSummary s;
  s.level = u;
  s.marginals = marginals;
  const int n = marginals.dim();
  s.mean.resize(n);
  s.sd.resize(n);
  s.p_above.resize(n);
  s.p_below.resize(n);
  for (int i = 0; i < n; ++i) {
    s.mean[i] = marginals.mean(i);
    s.sd[i] = marginals.sd(i);
    s.p_above[i] = marginals.sf(i, u);
    s.p_below[i] = marginals.cdf(i, u);
  }
  return s;
}

MarginalSummary marginal_summary(const GaussianPosterior& posterior,
                                 double u) {
  const Vector sd = marginal_variances(posterior).cwiseSqrt();
  return marginal_summary(NodeMarginals::gaussian(posterior.mean(), sd), u);
}

Family Family::one_param(Direction d, double u) {
  return Family{FamilyKind::OneParam, d, u, 0.0, nullptr};
}
Family Family::two_param_level(Direction d, double u, double v) {
  return Family{FamilyKind::TwoParamLevel, d, u, v, nullptr};
}
Family Family::two_param_smoothing(Direction d, double u, double tau,
                                   std::shared_ptr<const Matrix> coords) {
  return Family{FamilyKind::TwoParamSmoothing, d, u, tau, std::move(coords)};
}
Family Family::level_avoid_one(double u) {
  return Family{FamilyKind::LevelAvoidOne, Direction::Avoid, u, 0.5, nullptr};
}
Family Family::level_avoid_two(double u, double lambda) {
  return Family{FamilyKind::LevelAvoidTwo, Direction::Avoid, u, lambda,
                nullptr};
}

Vector smooth_probs(const Vector& p, const Matrix& coords, double tau) {
  const int n = static_cast<int>(p.size());
  if (tau < 0.0) throw input_error("smoothing radius must be >= 0");
  if (tau == 0.0) return p;
  if (coords.rows() != n) throw input_error("coordinate count mismatch");
  Vector out(n);
  const double tau2 = tau * tau;
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    int count = 0;
    for (int j = 0; j < n; ++j) {
      if ((coords.row(j) - coords.row(i)).squaredNorm() <= tau2) {
        acc += p[j];
        ++count;
      }
    }
    out[i] = acc / count;
  }
  return out;
}

Vector side_probabilities(const Family& family,
                          const MarginalSummary& summary) {
  if (family.avoiding()) return summary.p_above.cwiseMax(summary.p_below);
  return family.direction == Direction::Positive ? summary.p_above
                                                 : summary.p_below;
}

namespace {

struct Keyed {
  double key;  // smaller admits earlier
  int node;
  std::int8_t side;
};

std::vector<Keyed> admission_keys(const Family& family,
                                  const MarginalSummary& summary) {
  const int n = summary.dim();
  std::vector<Keyed> keys(n);
  const auto sgn = static_cast<std::int8_t>(
      family.direction == Direction::Negative ? -1 : +1);

  switch (family.kind) {
    case FamilyKind::OneParam:
      for (int i = 0; i < n; ++i) {
        const double p = family.direction == Direction::Positive
                             ? summary.p_above[i]
                             : summary.p_below[i];
        keys[i] = {-p, i, sgn};
      }
      break;
    case FamilyKind::TwoParamLevel:
      for (int i = 0; i < n; ++i) {
        const double p = family.direction == Direction::Positive
                             ? summary.marginals.sf(i, family.secondary)
                             : summary.marginals.cdf(i, family.secondary);
        keys[i] = {-p, i, sgn};
      }
      break;
    case FamilyKind::TwoParamSmoothing: {
      if (!family.coords)
        throw input_error("smoothing family needs node coordinates");
      const Vector ps =
          smooth_probs(summary.p_above, *family.coords, family.secondary);
      for (int i = 0; i < n; ++i) {
        const double p =
            family.direction == Direction::Positive ? ps[i] : 1.0 - ps[i];
        keys[i] = {-p, i, sgn};
      }
      break;
    }
    case FamilyKind::LevelAvoidOne:
    case FamilyKind::LevelAvoidTwo: {
      const double lambda =
          family.kind == FamilyKind::LevelAvoidOne ? 0.5 : family.secondary;
      if (!(lambda > 0.0 && lambda < 1.0))
        throw input_error("avoiding-family share must lie in (0,1)");
      for (int i = 0; i < n; ++i) {
        const double kp = (1.0 - summary.p_above[i]) / lambda;
        const double km = (1.0 - summary.p_below[i]) / (1.0 - lambda);
        keys[i] = (kp <= km) ? Keyed{kp, i, +1} : Keyed{km, i, -1};
      }
      break;
    }
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](const Keyed& a, const Keyed& b) {
                     return a.key < b.key ||
                            (a.key == b.key && a.node < b.node);
                   });
  return keys;
}

// Fill-reducing order of a subset of nodes via AMD on the induced subgraph.
std::vector<int> subgraph_order(const std::vector<int>& nodes,
                                const SparseSymmetricMatrix* graph) {
  if (graph == nullptr || nodes.size() <= 2) return nodes;
  const auto sub = graph->submatrix(nodes);
  const auto sub_order = amd_order(sub);
  std::vector<int> reordered(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k)
    reordered[k] = nodes[sub_order[k]];
  return reordered;
}

}  // namespace

NodeOrdering admission_order(const Family& family,
                             const MarginalSummary& summary) {
  const int n = summary.dim();
  const auto keys = admission_keys(family, summary);
  NodeOrdering o;
  o.admission.reserve(n);
  o.side.assign(n, family.direction == Direction::Negative ? -1 : +1);
  o.node_class.assign(n, 2);
  o.deterministic.assign(n, 0);
  o.det_in_set.assign(n, 0);
  for (const auto& k : keys) {
    o.admission.push_back(k.node);
    o.side[k.node] = k.side;
  }
  o.perm = Permutation::identity(n);
  o.n_integrated = n;
  return o;
}

BoundSets marginal_bounds(const Vector& p, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw input_error("alpha must lie in (0,1)");
  const int n = static_cast<int>(p.size());
  BoundSets s;
  for (int i = 0; i < n; ++i) {
    if (p[i] >= 1.0 - alpha) s.u1.push_back(i);
    if (p[i] >= 1.0 - alpha / n) s.l1.push_back(i);
  }
  // Holm step-down on q_i = 1 - p_i ascending; rank-k threshold
  // alpha / (n - k + 1).
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double qa = 1.0 - p[a], qb = 1.0 - p[b];
    return qa < qb || (qa == qb && a < b);
  });
  int k_max = 0;
  for (int k = 1; k <= n; ++k) {
    const double q = 1.0 - p[order[k - 1]];
    if (q <= alpha / (n - k + 1))
      k_max = k;
    else
      break;
  }
  s.l2.assign(order.begin(), order.begin() + k_max);
  std::sort(s.l2.begin(), s.l2.end());
  return s;
}

NodeOrdering build_ordering(const Family& family,
                            const MarginalSummary& summary,
                            const BoundSets& bounds, double alpha,
                            const SparseSymmetricMatrix* graph,
                            const OrderingOptions& options) {
  (void)alpha;
  const int n = summary.dim();
  const Vector side_p = side_probabilities(family, summary);
  const NodeOrdering fam = admission_order(family, summary);

  NodeOrdering o;
  o.side = fam.side;
  o.node_class.assign(n, 3);
  o.deterministic.assign(n, 0);
  o.det_in_set.assign(n, 0);

  std::vector<char> in_l2(n, 0), in_u1(n, 0);
  for (int i : bounds.l2) in_l2[i] = 1;
  for (int i : bounds.u1) in_u1[i] = 1;
  for (int i = 0; i < n; ++i)
    o.node_class[i] = in_l2[i] ? 1 : (in_u1[i] ? 2 : 3);

  for (int i = 0; i < n; ++i) {
    if (summary.sd[i] < options.deterministic_sd) {
      o.deterministic[i] = 1;
      o.det_in_set[i] = side_p[i] >= 0.5 ? 1 : 0;
    }
  }

  // Class 1 first: the Holm set is known to belong to the answer, so its
  // internal order is free and chosen fill-reducing.
  std::vector<int> class1;
  for (int i : bounds.l2)
    if (!o.deterministic[i]) class1.push_back(i);
  class1 = subgraph_order(class1, graph);

  std::vector<char> placed(n, 0);
  for (int i = 0; i < n; ++i)
    if (o.deterministic[i]) placed[i] = 1;
  for (int i : class1) {
    o.admission.push_back(i);
    placed[i] = 1;
  }
  std::vector<int> tail_excluded;
  for (int i : fam.admission) {
    if (placed[i]) continue;
    if (side_p[i] > options.admissible_floor)
      o.admission.push_back(i);
    else
      tail_excluded.push_back(i);
    placed[i] = 1;
  }
  o.n_integrated = static_cast<int>(o.admission.size());
  if (!options.marginalize_unused) {
    // Appended nodes carry vacuous bounds; they are sampled but cannot
    // change the estimate.
    o.admission.insert(o.admission.end(), tail_excluded.begin(),
                       tail_excluded.end());
    tail_excluded.clear();
    o.n_integrated = static_cast<int>(o.admission.size());
  }

  // Elimination order: never-integrated nodes lead (fill-reducing among
  // themselves), then the admission sequence reversed so that the first
  // admitted node is eliminated last.
  std::vector<int> lead;
  for (int i = 0; i < n; ++i)
    if (o.deterministic[i]) lead.push_back(i);
  lead.insert(lead.end(), tail_excluded.begin(), tail_excluded.end());
  lead = subgraph_order(lead, graph);
  std::vector<int> elim = lead;
  elim.insert(elim.end(), o.admission.rbegin(), o.admission.rend());
  o.perm = Permutation::from_order(elim);
  return o;
}

}  // namespace exset
