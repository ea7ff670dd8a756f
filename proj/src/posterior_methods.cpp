#include "exset/posterior_methods.hpp"

#include <cmath>

#include "exset/errors.hpp"
#include "exset/normal.hpp"

namespace exset {

namespace {

// Tail-aware transfer of a point through the mixture CDF into the plug-in
// Gaussian marginal: picks whichever tail keeps the probability mass away
// from one, so the identity case round-trips to 1e-10.
double transfer_point(const MixtureMarginals& mixture, int node, double x,
                      double mu0, double sd0, bool* overflow) {
  const double lo = mixture.cdf(node, x);
  const double hi = mixture.sf(node, x);
  if (lo <= 0.0 || hi <= 0.0) {
    *overflow = true;
    return lo <= 0.0 ? -kInf : kInf;
  }
  *overflow = false;
  const double z = lo <= hi ? normal_quantile(lo) : normal_quantile_sf(hi);
  return mu0 + sd0 * z;
}

ProbabilityEstimate box_probability(const GaussianPosterior& posterior,
                                    const Bounds& bounds,
                                    const IntegrationConfig& config) {
  const int n = posterior.dim();
  const Permutation perm =
      posterior.has_precision()
          ? Permutation::from_order(amd_order(posterior.precision()))
          : Permutation::identity(n);
  auto factor =
      std::make_shared<const CholeskyFactor>(cholesky(posterior, perm));
  ParticleSystem sys = ghk_init(posterior, factor, bounds, config);
  sys.extend(n - 1);
  return sys.estimate();
}

}  // namespace

ParamConfigSet::ParamConfigSet(std::vector<ParamConfig> configs)
    : configs_(std::move(configs)) {
  if (configs_.empty())
    throw input_error("configuration set must hold at least one entry");
  const int n = configs_.front().posterior.dim();
  double wsum = 0.0;
  for (const auto& c : configs_) {
    if (c.posterior.dim() != n)
      throw input_error("configuration dimensions differ");
    if (!(c.weight >= 0.0))
      throw input_error("configuration weights must not be negative");
    wsum += c.weight;
  }
  if (!(wsum > 0.0)) throw input_error("configuration weights sum to zero");
  for (auto& c : configs_) c.weight /= wsum;
}

int ParamConfigSet::designated() const {
  int best = 0;
  for (int i = 1; i < size(); ++i)
    if (configs_[i].weight > configs_[best].weight) best = i;
  return best;
}

MixtureMarginals mixture_marginals(const ParamConfigSet& set) {
  const int k = set.size();
  const int n = set.dim();
  Matrix means(k, n), sds(k, n);
  Vector w(k);
  for (int c = 0; c < k; ++c) {
    means.row(c) = set[c].posterior.mean().transpose();
    sds.row(c) = marginal_variances(set[c].posterior).cwiseSqrt().transpose();
    w[c] = set[c].weight;
  }
  if (k == 1) return NodeMarginals::gaussian(means.row(0), sds.row(0));
  // Zero-weight components contribute nothing; drop them to keep the
  // mixture well formed.
  std::vector<int> keep;
  for (int c = 0; c < k; ++c)
    if (w[c] > 0.0) keep.push_back(c);
  Matrix m2(keep.size(), n), s2(keep.size(), n);
  Vector w2(keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    m2.row(c) = means.row(keep[c]);
    s2.row(c) = sds.row(keep[c]);
    w2[c] = w[keep[c]];
  }
  if (keep.size() == 1) return NodeMarginals::gaussian(m2.row(0), s2.row(0));
  return NodeMarginals::mixture(std::move(m2), std::move(s2), w2);
}

ProbabilityEstimate eb_probability(const ParamConfigSet& set,
                                   const Bounds& bounds,
                                   const IntegrationConfig& config) {
  return box_probability(set[set.designated()].posterior, bounds, config);
}

ProbabilityEstimate ni_probability(const ParamConfigSet& set,
                                   const Bounds& bounds,
                                   const IntegrationConfig& config) {
  ProbabilityEstimate out;
  out.method = ProbMethod::GHK;
  double var = 0.0, neff = 0.0;
  bool all_degenerate = true;
  for (int c = 0; c < set.size(); ++c) {
    if (set[c].weight == 0.0) continue;
    const auto e = box_probability(set[c].posterior, bounds, config);
    out.value += set[c].weight * e.value;
    var += set[c].weight * set[c].weight * e.std_error * e.std_error;
    neff += set[c].weight * e.n_effective;
    all_degenerate = all_degenerate && e.degenerate;
  }
  out.std_error = std::sqrt(var);
  out.n_effective = neff;
  out.degenerate = all_degenerate;
  return out;
}

QcAdjustedBounds qc_bounds(const MixtureMarginals& mixture,
                           const GaussianPosterior& gaussian,
                           const Bounds& bounds) {
  const int n = gaussian.dim();
  if (mixture.dim() != n || bounds.dim() != n)
    throw input_error("qc_bounds dimension mismatch");
  const Vector sd0 = marginal_variances(gaussian).cwiseSqrt();
  QcAdjustedBounds out;
  Vector a = bounds.a, b = bounds.b;
  for (int i = 0; i < n; ++i) {
    bool overflow = false;
    if (a[i] != -kInf) {
      a[i] = transfer_point(mixture, i, a[i], gaussian.mean()[i], sd0[i],
                            &overflow);
      if (overflow) out.overflowed.push_back(i);
    }
    if (b[i] != kInf) {
      b[i] = transfer_point(mixture, i, b[i], gaussian.mean()[i], sd0[i],
                            &overflow);
      if (overflow) out.overflowed.push_back(i);
    }
  }
  out.bounds = Bounds(std::move(a), std::move(b));
  return out;
}

ExcursionResult eb_excursion(const ExcursionProblem& problem,
                             const ParamConfigSet& set) {
  const GaussianPosterior& p0 = set[set.designated()].posterior;
  const Vector sd = marginal_variances(p0).cwiseSqrt();
  return excursion_compute(problem, {{p0, 1.0}},
                           NodeMarginals::gaussian(p0.mean(), sd));
}

ExcursionResult qc_excursion(const ExcursionProblem& problem,
                             const ParamConfigSet& set) {
  const GaussianPosterior& p0 = set[set.designated()].posterior;
  const MixtureMarginals mix = mixture_marginals(set);
  const Vector sd0 = marginal_variances(p0).cwiseSqrt();
  const int n = p0.dim();
  // Transferred level per node: the plug-in Gaussian assigns the same
  // marginal probability to the transferred level as the mixture does to
  // the requested one.
  Vector levels(n);
  for (int i = 0; i < n; ++i) {
    bool overflow = false;
    levels[i] = transfer_point(mix, i, problem.level, p0.mean()[i], sd0[i],
                               &overflow);
    // Saturated nodes have mixture probability exactly zero or one; a far
    // finite level keeps the bound usable and the outcome identical.
    if (overflow)
      levels[i] = levels[i] == kInf ? p0.mean()[i] + 40.0 * sd0[i]
                                    : p0.mean()[i] - 40.0 * sd0[i];
  }
  return excursion_compute(problem, {{p0, 1.0}}, mix, &levels);
}

ExcursionResult ni_excursion(const ExcursionProblem& problem,
                             const ParamConfigSet& set) {
  if (problem.family.kind == FamilyKind::TwoParamLevel ||
      problem.family.kind == FamilyKind::TwoParamSmoothing)
    throw input_error(
        "ni_excursion supports one-parameter and avoiding families");
  std::vector<WeightedPosterior> configs;
  configs.reserve(set.size());
  for (int c = 0; c < set.size(); ++c)
    configs.push_back({set[c].posterior, set[c].weight});
  return excursion_compute(problem, configs, mixture_marginals(set));
}

}  // namespace exset
