#include "exset/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "exset/errors.hpp"
#include "exset/normal.hpp"

namespace exset {

namespace {

constexpr double kPi = std::numbers::pi;

double example1_mean(double s) { return s < 1.0 ? s - 0.5 : 1.5 - s; }

Matrix exponential_cov(const Vector& s1, const Vector& s2, double lambda) {
  Matrix c(s1.size(), s2.size());
  for (int i = 0; i < s1.size(); ++i)
    for (int j = 0; j < s2.size(); ++j)
      c(i, j) = std::exp(-std::abs(s1[i] - s2[j]) / lambda);
  return c;
}

}  // namespace

SimSpec SimSpec::example1() {
  SimSpec s;
  s.example = "ex1";
  s.grid = 1000;
  s.n_obs = 500;
  s.lambda = 1.0;
  s.sigma = 0.1;
  return s;
}

SimSpec SimSpec::example2() {
  SimSpec s;
  s.example = "ex2";
  s.grid = 80;
  s.n_obs = 0;  // scaled from the grid
  s.kappa2 = 0.5;
  s.phi2 = 1.0;
  s.sigma = 0.1;
  return s;
}

SimSpec SimSpec::example3() {
  SimSpec s = example2();
  s.example = "ex3";
  s.kappa2 = 2.0;
  s.sigma = 0.5;
  return s;
}

void SimSpec::validate() const {
  if (example != "ex1" && example != "ex2" && example != "ex3")
    throw input_error("unknown example id: " + example);
  if (grid < 2) throw input_error("grid must be >= 2");
  if (!(lambda > 0.0 && kappa2 > 0.0 && phi2 > 0.0 && sigma >= 0.0))
    throw input_error("covariance parameters must be positive");
  if (example != "ex1" && nu != 1.0)
    throw input_error("lattice examples support nu = 1 only");
}

double matern_cov(double h, double nu, double kappa2, double phi2, int d) {
  if (!(h >= 0.0) || !(nu > 0.0) || !(kappa2 > 0.0) || !(phi2 > 0.0))
    throw input_error("matern_cov needs h >= 0 and positive parameters");
  const double kappa = std::sqrt(kappa2);
  const double norm = std::pow(2.0, 1.0 - nu) * phi2 /
                      (std::pow(4.0 * kPi, d / 2.0) * std::tgamma(nu + d / 2.0) *
                       std::pow(kappa, 2.0 * nu));
  if (h == 0.0) {
    // Small-argument limit of (kappa h)^nu K_nu(kappa h).
    return phi2 * std::tgamma(nu) /
           (std::pow(4.0 * kPi, d / 2.0) * std::tgamma(nu + d / 2.0) *
            std::pow(kappa, 2.0 * nu));
  }
  const double kh = kappa * h;
  return norm * std::pow(kh, nu) * std::cyl_bessel_k(nu, kh);
}

Simulation simulate_example1(const SimSpec& spec) {
  SimSpec s = spec;
  if (s.grid == 0) s.grid = 1000;
  if (s.n_obs == 0) s.n_obs = 500;
  if (s.n_obs < 0) s.n_obs = 0;
  s.validate();
  const int n = s.grid;
  const int m = s.n_obs;

  Vector pred(n);
  for (int i = 0; i < n; ++i) pred[i] = 2.0 * i / (n - 1);
  RngStream loc_rng(s.seed, "sim/obsloc");
  Vector obs(m);
  for (int i = 0; i < m; ++i) obs[i] = 2.0 * loc_rng.uniform();
  if (s.obs_at_grid)
    for (int i = 0; i < m; ++i)
      obs[i] = pred[static_cast<int>(loc_rng.below(n))];

  // Joint draw of the latent path at prediction and observation points.
  const int total = n + m;
  Vector all(total);
  all.head(n) = pred;
  all.tail(m) = obs;
  Matrix joint = exponential_cov(all, all, s.lambda);
  joint.diagonal().array() += 1e-10;
  Eigen::LLT<Matrix> llt(joint);
  if (llt.info() != Eigen::Success)
    throw numeric_error("joint covariance factorization failed");
  RngStream truth_rng(s.seed, "sim/truth");
  Vector z(total);
  for (int i = 0; i < total; ++i) z[i] = truth_rng.normal();
  Vector mean_all(total);
  for (int i = 0; i < total; ++i) mean_all[i] = example1_mean(all[i]);
  const Vector latent = mean_all + llt.matrixL() * z;

  RngStream noise_rng(s.seed, "sim/noise");
  Vector y(m);
  for (int i = 0; i < m; ++i)
    y[i] = latent[n + i] + s.sigma * noise_rng.normal();

  // Kriging posterior for the prediction block.
  Matrix post_cov;
  Vector post_mean;
  if (m == 0) {
    post_cov = joint.topLeftCorner(n, n);
    post_mean = mean_all.head(n);
  } else {
    const Matrix c_pp = joint.topLeftCorner(n, n);
    const Matrix c_po = joint.topRightCorner(n, m);
    Matrix k = joint.bottomRightCorner(m, m);
    k.diagonal().array() += s.sigma * s.sigma;
    Eigen::LLT<Matrix> kllt(k);
    if (kllt.info() != Eigen::Success)
      throw numeric_error("observation covariance factorization failed");
    const Matrix gain = kllt.solve(c_po.transpose());  // K^{-1} C_op
    post_mean = mean_all.head(n) +
                c_po * kllt.solve(y - mean_all.tail(m));
    post_cov = c_pp - c_po * gain;
    post_cov = (0.5 * (post_cov + post_cov.transpose())).eval();
    post_cov.diagonal().array() += 1e-12;
  }

  auto coords = std::make_shared<Matrix>(n, 1);
  coords->col(0) = pred;
  return Simulation{std::move(s),
                    GaussianPosterior(std::move(post_mean), std::move(post_cov)),
                    latent.head(n),
                    std::move(y),
                    {},
                    std::move(obs),
                    std::move(coords),
                    pred[1] - pred[0]};
}

LatticeSpde::LatticeSpde(int g, double side_length) : g_(g) {
  if (g < 2) throw input_error("lattice side must be >= 2");
  h_ = side_length / (g - 1);
  auto coords = std::make_shared<Matrix>(g * g, 2);
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      (*coords)(r * g + c, 0) = c * h_;
      (*coords)(r * g + c, 1) = r * h_;
    }
  coords_ = std::move(coords);

  const int n = g * g;
  cell_area_.resize(n);
  std::vector<Eigen::Triplet<double>> tr;
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      const int i = r * g + c;
      const bool edge_r = (r == 0 || r == g - 1);
      const bool edge_c = (c == 0 || c == g - 1);
      cell_area_[i] = h_ * h_ * (edge_r ? 0.5 : 1.0) * (edge_c ? 0.5 : 1.0);
      int degree = 0;
      const int dr[4] = {-1, 1, 0, 0};
      const int dc[4] = {0, 0, -1, 1};
      for (int d = 0; d < 4; ++d) {
        const int rr = r + dr[d], cc = c + dc[d];
        if (rr < 0 || rr >= g || cc < 0 || cc >= g) continue;
        ++degree;
        tr.emplace_back(i, rr * g + cc, -1.0);
      }
      tr.emplace_back(i, i, static_cast<double>(degree));
    }
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(tr.begin(), tr.end());
  stiffness_.makeCompressed();

  // Calibration table: interior variance of (kappa^2 C + G) C^{-1}
  // (kappa^2 C + G) relative to the target Matern variance, over a log grid
  // in kappa^2.
  const int points = 17;
  for (int t = 0; t < points; ++t) {
    const double lk = -3.0 + 6.0 * t / (points - 1);
    const double k2 = std::pow(10.0, lk);
    const SparseSymmetricMatrix m = precision_unscaled(k2);
    const auto order = amd_order(m);
    const auto f = cholesky_sparse(m, Permutation::from_order(order));
    const Vector dperm = partial_inverse_diagonal(f);
    Vector var(dim());
    for (int k = 0; k < dim(); ++k)
      var[f.permutation().forward(k)] = dperm[k];
    // Interior block: central half of the lattice.
    double acc = 0.0;
    int count = 0;
    for (int r = g_ / 4; r < g_ - g_ / 4; ++r)
      for (int c = g_ / 4; c < g_ - g_ / 4; ++c) {
        acc += var[r * g_ + c];
        ++count;
      }
    const double v1 = acc / count;
    // Var(tau M) = v1 / tau; match to C(0) at phi = 1.
    const double c0 = matern_cov(0.0, 1.0, k2, 1.0, 2);
    log_k2_grid_.push_back(lk);
    log_ratio_.push_back(std::log(v1 / c0));
  }
}

SparseSymmetricMatrix LatticeSpde::precision_unscaled(double kappa2) const {
  const int n = dim();
  SparseMat khat = stiffness_;
  for (int i = 0; i < n; ++i) khat.coeffRef(i, i) += kappa2 * cell_area_[i];
  SparseMat cinv(n, n);
  std::vector<Eigen::Triplet<double>> tr;
  tr.reserve(n);
  for (int i = 0; i < n; ++i) tr.emplace_back(i, i, 1.0 / cell_area_[i]);
  cinv.setFromTriplets(tr.begin(), tr.end());
  SparseMat m = (khat * cinv * khat).pruned();
  m.makeCompressed();
  return SparseSymmetricMatrix::from_eigen(m);
}

double LatticeSpde::variance_ratio(double kappa2) const {
  const double lk = std::clamp(std::log10(kappa2), log_k2_grid_.front(),
                               log_k2_grid_.back());
  const auto it = std::upper_bound(log_k2_grid_.begin(), log_k2_grid_.end(), lk);
  const std::size_t hi = std::min<std::size_t>(
      std::max<std::ptrdiff_t>(1, it - log_k2_grid_.begin()),
      log_k2_grid_.size() - 1);
  const std::size_t lo = hi - 1;
  const double t =
      (lk - log_k2_grid_[lo]) / (log_k2_grid_[hi] - log_k2_grid_[lo]);
  return std::exp((1.0 - t) * log_ratio_[lo] + t * log_ratio_[hi]);
}

SparseSymmetricMatrix LatticeSpde::precision(double kappa2,
                                             double phi2) const {
  // tau = ratio(kappa2)/phi2 makes interior variances match matern_cov(0).
  const double tau = variance_ratio(kappa2) / phi2;
  const SparseSymmetricMatrix m = precision_unscaled(kappa2);
  SparseMat q = m.eigen() * tau;
  return SparseSymmetricMatrix::from_eigen(q);
}

Simulation simulate_example2_3(const SimSpec& spec) {
  SimSpec s = spec;
  if (s.grid == 0) s.grid = 80;
  if (s.n_obs == 0)
    s.n_obs = std::max(
        20, static_cast<int>(std::lround(1000.0 * s.grid * s.grid / 6400.0)));
  if (s.n_obs < 0) s.n_obs = 0;
  s.validate();

  LatticeSpde lat(s.grid);
  const int n = lat.dim();
  SparseSymmetricMatrix q = lat.precision(s.kappa2, s.phi2);
  GaussianPosterior prior(Vector::Zero(n), q);
  const auto order = amd_order(q);
  const auto f = cholesky_sparse(q, Permutation::from_order(order));
  RngStream truth_rng(s.seed, "sim/truth");
  const Vector truth = sample(prior, f, truth_rng);

  RngStream loc_rng(s.seed, "sim/obsloc");
  RngStream noise_rng(s.seed, "sim/noise");
  std::vector<int> obs_nodes(s.n_obs);
  Vector y(s.n_obs);
  Vector ata = Vector::Zero(n), aty = Vector::Zero(n);
  for (int i = 0; i < s.n_obs; ++i) {
    const int node = static_cast<int>(loc_rng.below(n));
    obs_nodes[i] = node;
    y[i] = truth[node] + s.sigma * noise_rng.normal();
    ata[node] += 1.0;
    aty[node] += y[i];
  }

  // Posterior precision and mean.
  const double inv_s2 = 1.0 / (s.sigma * s.sigma);
  SparseMat qhat = q.eigen();
  for (int i = 0; i < n; ++i)
    if (ata[i] > 0.0) qhat.coeffRef(i, i) += ata[i] * inv_s2;
  auto qhat_sym = SparseSymmetricMatrix::from_eigen(qhat);
  const auto post_order = amd_order(qhat_sym);
  const auto post_f =
      cholesky_sparse(qhat_sym, Permutation::from_order(post_order));
  const Vector mean = post_f.solve(aty * inv_s2);

  return Simulation{std::move(s),
                    GaussianPosterior(mean, std::move(qhat_sym)),
                    truth,
                    std::move(y),
                    std::move(obs_nodes),
                    Vector(),
                    lat.coords(),
                    lat.spacing()};
}

void LatentModel::finalize() {
  if (y.size() != static_cast<Eigen::Index>(obs_nodes.size()))
    throw input_error("observation vector does not match the node list");
  ata_diag = Vector::Zero(dim);
  aty = Vector::Zero(dim);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    ata_diag[obs_nodes[i]] += 1.0;
    aty[obs_nodes[i]] += y[i];
  }
  yty = y.squaredNorm();
}

LatentModel lattice_model(std::shared_ptr<const LatticeSpde> lattice,
                          const Simulation& sim) {
  LatentModel m;
  m.dim = lattice->dim();
  m.obs_nodes = sim.obs_nodes;
  m.y = sim.y;
  m.prior_precision = [lattice](const Eigen::Vector3d& theta) {
    const double kappa2 = std::exp(2.0 * theta[1]);
    const double phi2 = std::exp(2.0 * theta[2]);
    return lattice->precision(kappa2, phi2);
  };
  m.finalize();
  return m;
}

namespace {

struct ThetaEval {
  double log_post = 0.0;
  Vector mean;
  std::shared_ptr<const CholeskyFactor> qhat_factor;
  std::shared_ptr<const GaussianPosterior> conditional;
};

ThetaEval eval_theta(const LatentModel& model, const Eigen::Vector3d& theta) {
  const double sigma = std::exp(theta[0]);
  const double inv_s2 = 1.0 / (sigma * sigma);
  const int n = model.dim;
  const SparseSymmetricMatrix q = model.prior_precision(theta);

  const auto q_order = amd_order(q);
  const auto q_factor = cholesky_sparse(q, Permutation::from_order(q_order));

  SparseMat qhat = q.eigen();
  for (int i = 0; i < n; ++i)
    if (model.ata_diag[i] > 0.0)
      qhat.coeffRef(i, i) += model.ata_diag[i] * inv_s2;
  auto qhat_sym = SparseSymmetricMatrix::from_eigen(qhat);
  const auto qh_order = amd_order(qhat_sym);
  auto qh_factor = std::make_shared<const CholeskyFactor>(
      cholesky_sparse(qhat_sym, Permutation::from_order(qh_order)));

  ThetaEval e;
  const Vector b = model.aty * inv_s2;
  e.mean = qh_factor->solve(b);
  const double quad = b.dot(e.mean);  // y'A Qhat^{-1} A'y / sigma^4
  const double m_obs = static_cast<double>(model.y.size());
  double lp = 0.5 * q_factor.log_det() - 0.5 * qh_factor->log_det() -
              m_obs * theta[0] + 0.5 * quad -
              0.5 * model.yty * inv_s2;
  const Eigen::Vector3d d = theta - model.theta_prior_mean;
  lp += -0.5 * d.squaredNorm() / (model.theta_prior_sd * model.theta_prior_sd);
  e.log_post = lp;
  e.qhat_factor = std::move(qh_factor);
  e.conditional =
      std::make_shared<const GaussianPosterior>(e.mean, std::move(qhat_sym));
  return e;
}

}  // namespace

double log_theta_posterior(const LatentModel& model,
                           const Eigen::Vector3d& theta) {
  return eval_theta(model, theta).log_post;
}

GaussianPosterior conditional_posterior(const LatentModel& model,
                                        const Eigen::Vector3d& theta) {
  return *eval_theta(model, theta).conditional;
}

MapEstimate find_map(const LatentModel& model, const Eigen::Vector3d& init) {
  const auto f = [&](const Eigen::Vector3d& t) {
    return -log_theta_posterior(model, t);
  };
  // Nelder-Mead on three parameters.
  constexpr int kDim = 3;
  std::vector<Eigen::Vector3d> simplex(kDim + 1, init);
  for (int i = 0; i < kDim; ++i) simplex[i + 1][i] += 0.3;
  std::vector<double> value(kDim + 1);
  for (int i = 0; i <= kDim; ++i) value[i] = f(simplex[i]);

  for (int it = 0; it < 250; ++it) {
    std::vector<int> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return value[a] < value[b]; });
    std::vector<Eigen::Vector3d> sx(kDim + 1);
    std::vector<double> sv(kDim + 1);
    for (int i = 0; i <= kDim; ++i) {
      sx[i] = simplex[idx[i]];
      sv[i] = value[idx[i]];
    }
    simplex = sx;
    value = sv;
    if (std::abs(value[kDim] - value[0]) <
        1e-9 * (1.0 + std::abs(value[0])))
      break;

    const Eigen::Vector3d centroid =
        (simplex[0] + simplex[1] + simplex[2]) / 3.0;
    const Eigen::Vector3d reflected = centroid + (centroid - simplex[kDim]);
    const double fr = f(reflected);
    if (fr < value[0]) {
      const Eigen::Vector3d expanded =
          centroid + 2.0 * (centroid - simplex[kDim]);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[kDim] = expanded;
        value[kDim] = fe;
      } else {
        simplex[kDim] = reflected;
        value[kDim] = fr;
      }
    } else if (fr < value[kDim - 1]) {
      simplex[kDim] = reflected;
      value[kDim] = fr;
    } else {
      const Eigen::Vector3d contracted =
          centroid + 0.5 * (simplex[kDim] - centroid);
      const double fc = f(contracted);
      if (fc < value[kDim]) {
        simplex[kDim] = contracted;
        value[kDim] = fc;
      } else {
        for (int i = 1; i <= kDim; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          value[i] = f(simplex[i]);
        }
      }
    }
  }

  MapEstimate map;
  int best = 0;
  for (int i = 1; i <= kDim; ++i)
    if (value[i] < value[best]) best = i;
  map.mode = simplex[best];
  map.log_posterior = -value[best];

  // Central-difference Hessian of -log posterior.
  Eigen::Matrix3d h;
  const double step = 5e-3;
  for (int i = 0; i < kDim; ++i)
    for (int j = i; j < kDim; ++j) {
      Eigen::Vector3d pp = map.mode, pm = map.mode, mp = map.mode,
                      mm = map.mode;
      pp[i] += step;
      pp[j] += step;
      pm[i] += step;
      pm[j] -= step;
      mp[i] -= step;
      mp[j] += step;
      mm[i] -= step;
      mm[j] -= step;
      h(i, j) = h(j, i) =
          (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
    }
  // Make the Hessian usable even when flat directions appear.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(1e-4);
  map.hessian_inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose();
  return map;
}

McmcDraws mcmc_posterior_draws(const LatentModel& model,
                               const MapEstimate& map, int n_draws,
                               const McmcOptions& options, RngStream& rng) {
  const double scale = 2.38 * 2.38 / 3.0;
  const Eigen::Matrix3d prop_cov = scale * map.hessian_inv;
  const Eigen::LLT<Eigen::Matrix3d> llt(prop_cov);

  Eigen::Vector3d theta = map.mode;
  ThetaEval cur = eval_theta(model, theta);
  RngStream xdraw(rng.bits(), "mcmc/x");
  Vector x = sample(*cur.conditional, *cur.qhat_factor, xdraw);

  McmcDraws out;
  out.x.resize(n_draws, model.dim);
  out.theta.resize(n_draws, 3);
  const int total = options.burnin + n_draws * options.thin;
  long accepted = 0;
  int recorded = 0;
  for (int step = 1; step <= total; ++step) {
    Eigen::Vector3d z;
    for (int i = 0; i < 3; ++i) z[i] = rng.normal();
    const Eigen::Vector3d proposal = theta + llt.matrixL() * z;
    ThetaEval prop = eval_theta(model, proposal);
    if (std::log(rng.uniform()) < prop.log_post - cur.log_post) {
      theta = proposal;
      cur = std::move(prop);
      x = sample(*cur.conditional, *cur.qhat_factor, xdraw);
      ++accepted;
    }
    if (step % 10000 == 0) {
      const double rate = static_cast<double>(accepted) / step;
      if (rate < 0.01) throw chain_divergence(rate);
    }
    if (step > options.burnin &&
        (step - options.burnin) % options.thin == 0 && recorded < n_draws) {
      out.x.row(recorded) = x.transpose();
      out.theta.row(recorded) = theta.transpose();
      ++recorded;
    }
  }
  out.acceptance_rate = static_cast<double>(accepted) / total;
  return out;
}

Matrix discrete_posterior_draws(const ParamConfigSet& set, int n_draws,
                                RngStream& rng) {
  const int k = set.size();
  std::vector<std::shared_ptr<const CholeskyFactor>> factors(k);
  std::vector<double> cumw(k);
  double acc = 0.0;
  for (int c = 0; c < k; ++c) {
    acc += set[c].weight;
    cumw[c] = acc;
  }
  Matrix draws(n_draws, set.dim());
  for (int s = 0; s < n_draws; ++s) {
    const double u = rng.uniform() * acc;
    int c = static_cast<int>(
        std::lower_bound(cumw.begin(), cumw.end(), u) - cumw.begin());
    c = std::min(c, k - 1);
    if (!factors[c]) {
      const auto& post = set[c].posterior;
      const Permutation perm =
          post.has_precision()
              ? Permutation::from_order(amd_order(post.precision()))
              : Permutation::identity(post.dim());
      factors[c] =
          std::make_shared<const CholeskyFactor>(cholesky(post, perm));
    }
    draws.row(s) = sample(set[c].posterior, *factors[c], rng).transpose();
  }
  return draws;
}

ParamConfigSet make_theta_configs(const LatentModel& model,
                                  const MapEstimate& map, int k) {
  std::vector<Eigen::Vector3d> zs;
  zs.emplace_back(Eigen::Vector3d::Zero());
  if (k == 15) {
    const double r = 1.9;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d z = Eigen::Vector3d::Zero();
      z[i] = r;
      zs.push_back(z);
      z[i] = -r;
      zs.push_back(z);
    }
    const double c = r / std::sqrt(3.0);
    for (int s = 0; s < 8; ++s)
      zs.emplace_back(Eigen::Vector3d(s & 1 ? c : -c, s & 2 ? c : -c,
                                      s & 4 ? c : -c));
  } else if (k == 45) {
    zs.clear();
    for (double z0 : {-2.0, -1.0, 0.0, 1.0, 2.0})
      for (double z1 : {-1.6, 0.0, 1.6})
        for (double z2 : {-1.6, 0.0, 1.6})
          zs.emplace_back(Eigen::Vector3d(z0, z1, z2));
  } else if (k != 1) {
    throw input_error("supported configuration counts: 1, 15, 45");
  }

  // Principal axes of the posterior, widest direction first.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(map.hessian_inv);
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(1e-12);
  Eigen::Matrix3d axes = es.eigenvectors();
  std::vector<int> ax{0, 1, 2};
  std::sort(ax.begin(), ax.end(), [&](int a, int b) { return ev[a] > ev[b]; });
  Eigen::Matrix3d spread;
  for (int i = 0; i < 3; ++i)
    spread.col(i) = axes.col(ax[i]) * std::sqrt(ev[ax[i]]);

  std::vector<ParamConfig> configs;
  double lp_max = -kInf;
  std::vector<double> lps;
  std::vector<Eigen::Vector3d> thetas;
  for (const auto& z : zs) {
    const Eigen::Vector3d theta = map.mode + spread * z;
    const double lp = log_theta_posterior(model, theta);
    lps.push_back(lp);
    thetas.push_back(theta);
    lp_max = std::max(lp_max, lp);
  }
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    ParamConfig cfg{{{"log_sigma", thetas[i][0]},
                     {"log_kappa", thetas[i][1]},
                     {"log_phi", thetas[i][2]}},
                    std::exp(lps[i] - lp_max),
                    conditional_posterior(model, thetas[i])};
    configs.push_back(std::move(cfg));
  }
  return ParamConfigSet(std::move(configs));
}

CoverageReport coverage(const ExcursionResult& result,
                        const std::function<Vector()>& next_draw, int n_draws,
                        double u, Direction direction) {
  (void)direction;  // side handling is carried by the result's tags
  CoverageReport rep;
  rep.n_draws = n_draws;
  for (int a = 1; a <= 99; ++a) rep.alphas.push_back(a / 100.0);

  // Prefix length per alpha along the admission order.
  const std::size_t m = result.admission.size();
  std::vector<int> len(rep.alphas.size(), 0);
  for (std::size_t a = 0; a < rep.alphas.size(); ++a) {
    const double threshold = 1.0 - rep.alphas[a];
    int l = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const double f = result.F[result.admission[k]];
      if (f >= threshold && f > 0.0)
        ++l;
      else
        break;
    }
    len[a] = l;
  }

  std::vector<long> hits(rep.alphas.size(), 0);
  for (int s = 0; s < n_draws; ++s) {
    const Vector x = next_draw();
    // First admission index where the draw leaves the tagged side.
    std::size_t fail = m;
    for (std::size_t k = 0; k < m; ++k) {
      const int node = result.admission[k];
      const bool ok =
          result.side[node] > 0 ? (x[node] > u) : (x[node] < u);
      if (!ok) {
        fail = k;
        break;
      }
    }
    for (std::size_t a = 0; a < rep.alphas.size(); ++a)
      if (static_cast<std::size_t>(len[a]) <= fail) ++hits[a];
  }

  for (std::size_t a = 0; a < rep.alphas.size(); ++a) {
    const double p = static_cast<double>(hits[a]) / n_draws;
    rep.p_hat.push_back(p);
    rep.diff.push_back((1.0 - rep.alphas[a]) - p);
    rep.se.push_back(std::sqrt(p * (1.0 - p) / n_draws));
  }
  return rep;
}

CoverageReport coverage(const ExcursionResult& result, const Matrix& draws,
                        double u, Direction direction) {
  int row = 0;
  auto next = [&]() { return Vector(draws.row(row++).transpose()); };
  return coverage(result, next, static_cast<int>(draws.rows()), u, direction);
}

}  // namespace exset
