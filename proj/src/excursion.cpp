#include "exset/excursion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>

#include "exset/errors.hpp"
#include "exset/normal.hpp"

namespace exset {

namespace {

constexpr int kCheckpointEvery = 10;
constexpr int kRefineWindow = 10;
constexpr int kRefineFactor = 4;
constexpr double kEstimateFloor = 1e-12;

void check_kind_direction(const ExcursionProblem& p) {
  if (p.family.avoiding()) {
    if (p.direction != Direction::Avoid)
      throw input_error("avoiding family requires the avoid direction");
  } else if (p.family.direction != p.direction) {
    throw input_error("family direction does not match the problem direction");
  }
}

struct PassOutput {
  std::vector<double> prob;  // aggregated running probability per step
  std::vector<double> se;
  bool degenerate = false;
};

std::pair<double, double> aggregate(const std::vector<ParticleSystem>& ss,
                                    const std::vector<double>& w) {
  double v = 0.0, var = 0.0;
  for (std::size_t c = 0; c < ss.size(); ++c) {
    const auto e = ss[c].estimate();
    v += w[c] * e.value;
    var += w[c] * w[c] * e.std_error * e.std_error;
  }
  return {v, std::sqrt(var)};
}

bool all_degenerate(const std::vector<ParticleSystem>& ss) {
  for (const auto& s : ss)
    if (!s.degenerate()) return false;
  return true;
}

// Lockstep sequential pass over m admissions for every configuration.
// All configurations share one counter-based random stream, so a single
// configuration reproduces the plain path bit for bit. When the running
// estimate first drops below the target by more than one standard error,
// the boundary window is re-run from a checkpoint with kRefineFactor times
// as many particles and the refined values spliced in.
PassOutput sequential_pass(const std::vector<GaussianPosterior>& posteriors,
                           const std::vector<double>& weights,
                           const std::vector<std::shared_ptr<const CholeskyFactor>>& factors,
                           const Bounds& bounds, int m,
                           const IntegrationConfig& icfg, double target,
                           bool full) {
  PassOutput out;
  if (m <= 0) return out;
  const int k_cfg = static_cast<int>(posteriors.size());

  auto init_systems = [&](const IntegrationConfig& cfg) {
    std::vector<ParticleSystem> ss;
    ss.reserve(k_cfg);
    for (int c = 0; c < k_cfg; ++c)
      ss.push_back(ghk_init(posteriors[c], factors[c], bounds, cfg));
    return ss;
  };

  std::vector<ParticleSystem> systems = init_systems(icfg);
  std::deque<std::pair<int, std::vector<ParticleSystem>>> checkpoints;
  std::optional<std::pair<int, std::vector<ParticleSystem>>> frozen;
  bool crossed = false;
  int cross_k = -1;

  out.prob.reserve(m);
  out.se.reserve(m);
  for (int k = 0; k < m; ++k) {
    if (k > 0)
      for (auto& s : systems) s.extend(1);
    const auto [v, se] = aggregate(systems, weights);
    out.prob.push_back(v);
    out.se.push_back(se);

    if (all_degenerate(systems)) {
      out.degenerate = true;
      break;
    }
    if (!crossed && target >= 0.0 && v + se < target) {
      crossed = true;
      cross_k = k;
      // Restore point at least kRefineWindow steps back.
      const int want = (k + 1) - kRefineWindow;
      for (auto it = checkpoints.rbegin(); it != checkpoints.rend(); ++it) {
        if (it->first <= want) {
          frozen = *it;
          break;
        }
      }
      checkpoints.clear();
      if (!full) break;
    }
    if (full && v < kEstimateFloor) break;
    if (!crossed && (k + 1) % kCheckpointEvery == 0) {
      checkpoints.emplace_back(k + 1, systems);
      if (checkpoints.size() > 2) checkpoints.pop_front();
    }
  }

  if (full) {
    out.prob.resize(m, 0.0);
    out.se.resize(m, 0.0);
  }

  if (!crossed) return out;

  // Refinement of the stopping boundary.
  std::vector<ParticleSystem> refined;
  int depth0 = 0;
  if (frozen.has_value()) {
    refined = frozen->second;
    depth0 = frozen->first;
    for (auto& s : refined) s.expand(kRefineFactor);
  } else {
    IntegrationConfig big = icfg;
    big.n_particles *= kRefineFactor;
    refined = init_systems(big);
    depth0 = 1;
    const auto [v, se] = aggregate(refined, weights);
    if (out.prob.size() < 1) {
      out.prob.push_back(v);
      out.se.push_back(se);
    } else {
      out.prob[0] = v;
      out.se[0] = se;
    }
  }

  bool rcrossed = false;
  for (int k = depth0; k < m; ++k) {
    if (rcrossed && k > cross_k + kRefineWindow) break;
    for (auto& s : refined) s.extend(1);
    const auto [v, se] = aggregate(refined, weights);
    if (static_cast<int>(out.prob.size()) <= k) {
      out.prob.resize(k + 1, 0.0);
      out.se.resize(k + 1, 0.0);
    }
    out.prob[k] = v;
    out.se[k] = se;
    if (!rcrossed && v + se < target) rcrossed = true;
    if (all_degenerate(refined)) break;
  }
  if (full) {
    out.prob.resize(m, 0.0);
    out.se.resize(m, 0.0);
  }
  return out;
}

// Applies the structural clamps to the raw probability chain: non-increasing
// along the admission order, dominated by the running minimum of the tagged
// marginal probabilities, and never below 1-alpha inside the Holm prefix.
std::vector<double> clamp_chain(const std::vector<double>& raw,
                                const NodeOrdering& ord, const Vector& p_tag,
                                double alpha) {
  const std::size_t m = ord.admission.size();
  std::vector<double> f(m, 0.0);
  double run = 1.0, minp = 1.0;
  std::size_t class1_prefix = 0;
  while (class1_prefix < m &&
         ord.node_class[ord.admission[class1_prefix]] == 1)
    ++class1_prefix;
  for (std::size_t k = 0; k < m; ++k) {
    const int node = ord.admission[k];
    const double value = k < raw.size() ? raw[k] : 0.0;
    minp = std::min(minp, p_tag[node]);
    run = std::min({run, value, minp});
    f[k] = (k < class1_prefix) ? std::max(run, 1.0 - alpha) : run;
  }
  return f;
}

int chain_set_size(const std::vector<double>& clamped, double alpha) {
  int size = 0;
  for (double v : clamped) {
    if (v >= 1.0 - alpha && v > 0.0)
      ++size;
    else
      break;
  }
  return size;
}

struct Prepared {
  NodeOrdering ordering;
  Bounds bounds;
  std::vector<std::shared_ptr<const CholeskyFactor>> factors;
};

Vector tagged_probabilities(const MarginalSummary& summary,
                            const std::vector<std::int8_t>& side) {
  const int n = summary.dim();
  Vector p(n);
  for (int i = 0; i < n; ++i)
    p[i] = side[i] > 0 ? summary.p_above[i] : summary.p_below[i];
  return p;
}

Prepared prepare(const ExcursionProblem& problem,
                 const std::vector<WeightedPosterior>& configs,
                 const MarginalSummary& summary, const BoundSets& bsets,
                 const Family& family, const Vector* level_override) {
  Prepared prep;
  OrderingOptions opts;
  opts.marginalize_unused = problem.marginalize_unused;
  const SparseSymmetricMatrix* graph =
      configs[0].posterior.has_precision() ? &configs[0].posterior.precision()
                                           : nullptr;
  prep.ordering =
      build_ordering(family, summary, bsets, problem.alpha, graph, opts);
  // Class-1 nodes always carry their better side; the Holm guarantee is for
  // that side.
  for (int i : bsets.l2)
    prep.ordering.side[i] = summary.p_above[i] >= summary.p_below[i] ? 1 : -1;

  const int n = summary.dim();
  Vector a = Vector::Constant(n, -kInf);
  Vector b = Vector::Constant(n, kInf);
  const Vector p_tag = tagged_probabilities(summary, prep.ordering.side);
  for (int i = 0; i < n; ++i) {
    if (prep.ordering.deterministic[i] || p_tag[i] <= 0.0) continue;
    const double lvl =
        level_override != nullptr ? (*level_override)[i] : problem.level;
    if (prep.ordering.side[i] > 0)
      a[i] = lvl;
    else
      b[i] = lvl;
  }
  prep.bounds = Bounds(a, b);

  prep.factors.reserve(configs.size());
  for (const auto& c : configs)
    prep.factors.push_back(std::make_shared<const CholeskyFactor>(
        cholesky(c.posterior, prep.ordering.perm)));
  return prep;
}

ExcursionResult assemble(const ExcursionProblem& problem,
                         const MarginalSummary& summary,
                         const BoundSets& bsets, const NodeOrdering& ord,
                         const PassOutput& pass, double family_param) {
  const int n = summary.dim();
  ExcursionResult r;
  r.n = n;
  r.level = problem.level;
  r.alpha = problem.alpha;
  r.direction = problem.direction;
  r.side = ord.side;
  r.u1 = bsets.u1;
  r.l1 = bsets.l1;
  r.l2 = bsets.l2;
  r.family_param = family_param;
  r.degenerate = pass.degenerate;
  r.marginal_p = tagged_probabilities(summary, ord.side);

  const auto clamped =
      clamp_chain(pass.prob, ord, r.marginal_p, problem.alpha);

  r.F = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    if (ord.deterministic[i] && ord.det_in_set[i]) r.F[i] = 1.0;
  for (std::size_t k = 0; k < ord.admission.size(); ++k)
    r.F[ord.admission[k]] = clamped[k];

  // Deterministic members lead the admission order with certain membership.
  for (int i = 0; i < n; ++i)
    if (ord.deterministic[i] && ord.det_in_set[i]) {
      r.admission.push_back(i);
      r.trace.push_back({i, 1.0, 0.0});
    }
  for (std::size_t k = 0; k < ord.admission.size(); ++k) {
    r.admission.push_back(ord.admission[k]);
    r.trace.push_back({ord.admission[k],
                       k < pass.prob.size() ? pass.prob[k] : 0.0,
                       k < pass.se.size() ? pass.se[k] : 0.0});
  }

  r.set = set_from_function(r.F, problem.alpha);
  r.set_probability = 1.0;
  r.set_std_error = 0.0;
  // Joint probability of the reported set = function value at its last
  // admitted member.
  int last_k = -1;
  std::vector<char> in_set(n, 0);
  for (int i : r.set) in_set[i] = 1;
  for (std::size_t k = 0; k < ord.admission.size(); ++k)
    if (in_set[ord.admission[k]]) last_k = static_cast<int>(k);
  if (last_k >= 0) {
    r.set_probability = clamped[last_k];
    r.set_std_error =
        last_k < static_cast<int>(pass.se.size()) ? pass.se[last_k] : 0.0;
  }
  return r;
}

struct GoldenOutcome {
  double best_param = 0.0;
  int best_size = -1;
};

// Bracketed best-of search: golden-section iterations over the secondary
// parameter, always including the one-parameter slice point, keeping the
// largest set seen with ties resolved toward the smaller parameter.
GoldenOutcome golden_search(const std::function<int(double)>& size_at,
                            double slice, double lo, double hi) {
  GoldenOutcome best;
  auto consider = [&](double nu, int size) {
    if (size > best.best_size ||
        (size == best.best_size && nu < best.best_param))
      best = {nu, size};
  };
  consider(slice, size_at(slice));
  if (!(hi > lo)) return best;

  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  const double width0 = hi - lo;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  int fc = size_at(c);
  consider(c, fc);
  int fd = size_at(d);
  consider(d, fd);
  for (int it = 0; it < 30 && (b - a) > 1e-3 * width0; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = size_at(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = size_at(d);
      consider(d, fd);
    }
  }
  return best;
}

}  // namespace

void ExcursionProblem::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw input_error("alpha must lie in (0,1)");
  config.validate();
  check_kind_direction(*this);
}

std::vector<int> set_from_function(const Vector& F, double alpha) {
  std::vector<int> s;
  for (int i = 0; i < F.size(); ++i)
    if (F[i] >= 1.0 - alpha && F[i] > 0.0) s.push_back(i);
  return s;
}

Vector ExcursionResult::contour_function() const {
  return Vector::Ones(F.size()) - F;
}

std::vector<int> ExcursionResult::side_members(int sgn) const {
  std::vector<int> out;
  for (int i : set)
    if ((sgn > 0) == (side[i] > 0)) out.push_back(i);
  return out;
}

std::vector<int> ExcursionResult::set_complement() const {
  std::vector<char> in(n, 0);
  for (int i : set) in[i] = 1;
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

ExcursionResult excursion_compute(const ExcursionProblem& problem,
                                  const std::vector<WeightedPosterior>& configs,
                                  const NodeMarginals& marginals,
                                  const Vector* level_override) {
  problem.validate();
  if (configs.empty()) throw input_error("at least one configuration needed");
  const int n = configs[0].posterior.dim();
  for (const auto& c : configs)
    if (c.posterior.dim() != n)
      throw input_error("configuration dimensions differ");
  if (marginals.dim() != n)
    throw input_error("marginals dimension does not match the posterior");

  std::vector<double> weights;
  double wsum = 0.0;
  for (const auto& c : configs) {
    if (!(c.weight >= 0.0)) throw input_error("negative configuration weight");
    wsum += c.weight;
  }
  if (!(wsum > 0.0)) throw input_error("configuration weights sum to zero");
  for (const auto& c : configs) weights.push_back(c.weight / wsum);

  std::vector<GaussianPosterior> posteriors;
  posteriors.reserve(configs.size());
  for (const auto& c : configs) posteriors.push_back(c.posterior);

  const MarginalSummary summary = marginal_summary(marginals, problem.level);
  const Family base = problem.family;
  const Vector side_p = side_probabilities(base, summary);
  const BoundSets bsets = marginal_bounds(side_p, problem.alpha);
  const double target = 1.0 - problem.alpha;

  auto run_full = [&](const Family& fam) {
    Prepared prep =
        prepare(problem, configs, summary, bsets, fam, level_override);
    PassOutput pass =
        sequential_pass(posteriors, weights, prep.factors, prep.bounds,
                        prep.ordering.n_integrated, problem.config, target,
                        /*full=*/true);
    return std::pair<NodeOrdering, PassOutput>(std::move(prep.ordering),
                                               std::move(pass));
  };

  const bool two_param = base.kind == FamilyKind::TwoParamLevel ||
                         base.kind == FamilyKind::TwoParamSmoothing ||
                         base.kind == FamilyKind::LevelAvoidTwo;

  if (!two_param) {
    auto [ord, pass] = run_full(base);
    return assemble(problem, summary, bsets, ord, pass,
                    base.kind == FamilyKind::OneParam ? 0.0 : base.secondary);
  }

  // Size of the alpha-set for a candidate secondary parameter; the pass may
  // stop just past the threshold crossing.
  auto size_at = [&](double nu) {
    const Family fam = base.with_secondary(nu);
    Prepared prep =
        prepare(problem, configs, summary, bsets, fam, level_override);
    PassOutput pass =
        sequential_pass(posteriors, weights, prep.factors, prep.bounds,
                        prep.ordering.n_integrated, problem.config, target,
                        /*full=*/false);
    const Vector p_tag = tagged_probabilities(summary, prep.ordering.side);
    const auto clamped =
        clamp_chain(pass.prob, prep.ordering, p_tag, problem.alpha);
    int dets = 0;
    for (int i = 0; i < n; ++i)
      if (prep.ordering.deterministic[i] && prep.ordering.det_in_set[i])
        ++dets;
    return dets + chain_set_size(clamped, problem.alpha);
  };

  double slice = 0.0, lo = 0.0, hi = 0.0;
  switch (base.kind) {
    case FamilyKind::TwoParamLevel: {
      const double spread = 3.0 * summary.sd.maxCoeff();
      slice = problem.level;
      lo = problem.level - spread;
      hi = problem.level + spread;
      break;
    }
    case FamilyKind::TwoParamSmoothing: {
      if (!base.coords)
        throw input_error("smoothing family needs node coordinates");
      const Vector mins = base.coords->colwise().minCoeff();
      const Vector maxs = base.coords->colwise().maxCoeff();
      const double diameter = (maxs - mins).norm();
      slice = 0.0;
      lo = 0.0;
      hi = diameter / 2.0;
      break;
    }
    default: {  // LevelAvoidTwo
      slice = 0.5;
      lo = 0.05;
      hi = 0.95;
      break;
    }
  }

  const GoldenOutcome best = golden_search(size_at, slice, lo, hi);
  auto [ord, pass] = run_full(base.with_secondary(best.best_param));
  return assemble(problem, summary, bsets, ord, pass, best.best_param);
}

ExcursionResult excursion_one_param(const ExcursionProblem& problem,
                                    const GaussianPosterior& posterior) {
  if (problem.family.kind != FamilyKind::OneParam)
    throw input_error("excursion_one_param requires the one-parameter family");
  const MarginalSummary s = marginal_summary(posterior, problem.level);
  return excursion_compute(problem, {{posterior, 1.0}}, s.marginals);
}

ExcursionResult excursion_two_param(const ExcursionProblem& problem,
                                    const GaussianPosterior& posterior) {
  if (problem.family.kind != FamilyKind::TwoParamLevel &&
      problem.family.kind != FamilyKind::TwoParamSmoothing)
    throw input_error("excursion_two_param requires a two-parameter family");
  const MarginalSummary s = marginal_summary(posterior, problem.level);
  return excursion_compute(problem, {{posterior, 1.0}}, s.marginals);
}

ExcursionResult level_avoid(const ExcursionProblem& problem,
                            const GaussianPosterior& posterior) {
  if (!problem.family.avoiding())
    throw input_error("level_avoid requires an avoiding family");
  const MarginalSummary s = marginal_summary(posterior, problem.level);
  return excursion_compute(problem, {{posterior, 1.0}}, s.marginals);
}

}  // namespace exset
