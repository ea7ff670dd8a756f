#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "exset/excursion.hpp"
#include "exset/normal.hpp"
#include "oracles.hpp"

using namespace exset;

namespace {

ExcursionProblem make_problem(double u, double alpha, Direction dir,
                              Family fam, int particles = 4000,
                              std::uint64_t seed = 1) {
  ExcursionProblem p;
  p.level = u;
  p.alpha = alpha;
  p.direction = dir;
  p.family = std::move(fam);
  p.config.n_particles = particles;
  p.config.seed = seed;
  return p;
}

GaussianPosterior random_gmrf(int n, exset::RngStream& rng,
                              double mean_scale = 1.0) {
  std::vector<Eigen::Triplet<double>> tr;
  for (int i = 0; i < n; ++i) tr.emplace_back(i, i, 2.0 + rng.uniform());
  for (int i = 0; i + 1 < n; ++i) tr.emplace_back(i + 1, i, -0.9);
  for (int e = 0; e < n / 3; ++e) {
    const int i = static_cast<int>(rng.below(n));
    const int j = static_cast<int>(rng.below(n));
    if (i != j) tr.emplace_back(std::max(i, j), std::min(i, j), -0.2);
  }
  auto q = SparseSymmetricMatrix::from_triplets(n, tr);
  Vector mean(n);
  for (int i = 0; i < n; ++i) mean[i] = mean_scale * rng.normal();
  return GaussianPosterior(mean, q);
}

bool is_subset(const std::vector<int>& small, const std::vector<int>& big) {
  std::set<int> b(big.begin(), big.end());
  for (int i : small)
    if (!b.count(i)) return false;
  return true;
}

}  // namespace

TEST_CASE("set_from_function") {
  Vector F(3);
  F << 1.0, 1.0, 0.0;
  CHECK(set_from_function(F, 0.05) == std::vector<int>{0, 1});
  // alpha = 1 keeps every node with positive function value.
  Vector G(4);
  G << 0.7, 0.0, 1e-9, 0.2;
  CHECK(set_from_function(G, 1.0) == std::vector<int>{0, 2, 3});
  // Threshold monotonicity.
  for (double a1 : {0.01, 0.1, 0.3}) {
    for (double a2 : {0.4, 0.8, 0.99}) {
      CHECK(is_subset(set_from_function(G, a1), set_from_function(G, a2)));
    }
  }
}

TEST_CASE("single node excursion function equals the marginal") {
  GaussianPosterior p(Vector::Constant(1, 1.0),
                      SparseSymmetricMatrix::identity(1));
  const double p1 = normal_sf(-1.0);  // ~0.841
  auto strict = excursion_one_param(
      make_problem(0.0, 0.05, Direction::Positive,
                   Family::one_param(Direction::Positive, 0.0)),
      p);
  CHECK(strict.F[0] == doctest::Approx(p1).epsilon(1e-12));
  CHECK(strict.set.empty());  // p1 < 0.95
  auto loose = excursion_one_param(
      make_problem(0.0, 0.2, Direction::Positive,
                   Family::one_param(Direction::Positive, 0.0)),
      p);
  CHECK(loose.set == std::vector<int>{0});  // p1 >= 0.8
}

TEST_CASE("independent nodes give exact product excursion functions") {
  // Diagonal precision, no Holm members at this alpha, so admission is the
  // pure family order and every weight stays equal: products are exact.
  Vector mean(5);
  mean << 1.2, 0.9, 0.5, 0.1, -0.4;
  GaussianPosterior p(mean, SparseSymmetricMatrix::identity(5));
  auto prob = make_problem(0.0, 0.3, Direction::Positive,
                           Family::one_param(Direction::Positive, 0.0), 2000);
  auto r = excursion_one_param(prob, p);
  double product = 1.0;
  for (int k = 0; k < 5; ++k) {
    const int node = r.admission[k];
    product *= normal_sf(-mean[node]);
    CHECK(r.F[node] == doctest::Approx(product).epsilon(1e-10));
  }
  CHECK(r.admission == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("perfectly correlated field returns the marginal upper bound") {
  const int n = 15;
  Matrix cov = Matrix::Constant(n, n, 1.0) + 1e-7 * Matrix::Identity(n, n);
  GaussianPosterior p(Vector::Constant(n, 2.0), cov);
  auto prob = make_problem(0.0, 0.05, Direction::Positive,
                           Family::one_param(Direction::Positive, 0.0), 4000);
  auto r = excursion_one_param(prob, p);
  CHECK(static_cast<int>(r.u1.size()) == n);
  CHECK(r.set == r.u1);
}

TEST_CASE("empty marginal upper bound yields the empty set") {
  Vector mean = Vector::Constant(4, -0.5);
  GaussianPosterior p(mean, SparseSymmetricMatrix::identity(4));
  auto prob = make_problem(0.0, 0.05, Direction::Positive,
                           Family::one_param(Direction::Positive, 0.0), 1000);
  auto r = excursion_one_param(prob, p);
  CHECK(r.u1.empty());
  CHECK(r.set.empty());
  CHECK(r.set_probability == 1.0);
}

TEST_CASE("negative direction mirrors the positive one") {
  RngStream rng(23, "negdir");
  auto post = random_gmrf(12, rng);
  auto prob_pos = make_problem(0.0, 0.1, Direction::Positive,
                               Family::one_param(Direction::Positive, 0.0));
  auto r_pos = excursion_one_param(prob_pos, post);
  GaussianPosterior flipped(-post.mean(), post.precision());
  auto prob_neg = make_problem(0.0, 0.1, Direction::Negative,
                               Family::one_param(Direction::Negative, 0.0));
  auto r_neg = excursion_one_param(prob_neg, flipped);
  CHECK(r_pos.set == r_neg.set);
  CHECK(r_pos.u1 == r_neg.u1);
  CHECK(r_pos.l2 == r_neg.l2);
}

TEST_CASE("structural invariants on random instances") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    RngStream rng(seed, "inv");
    const int n = 15 + static_cast<int>(rng.below(20));
    auto post = random_gmrf(n, rng, 1.2);
    const double u = -0.2 + 0.4 * rng.uniform();
    const double alpha = 0.02 + 0.3 * rng.uniform();
    auto prob = make_problem(u, alpha, Direction::Positive,
                             Family::one_param(Direction::Positive, u), 2500,
                             seed);
    auto r = excursion_one_param(prob, post);

    // Sandwich.
    CHECK(is_subset(r.l2, r.set));
    CHECK(is_subset(r.set, r.u1));
    // Pointwise domination by the tagged marginal probability.
    for (int i = 0; i < n; ++i) CHECK(r.F[i] <= r.marginal_p[i] + 1e-12);
    // Monotone along admission, hence alpha-nested sets.
    for (std::size_t k = 1; k < r.admission.size(); ++k)
      CHECK(r.F[r.admission[k]] <= r.F[r.admission[k - 1]] + 1e-15);
    auto s1 = set_from_function(r.F, alpha * 0.5);
    auto s2 = set_from_function(r.F, alpha);
    auto s3 = set_from_function(r.F, std::min(0.99, alpha * 2));
    CHECK(is_subset(s1, s2));
    CHECK(is_subset(s2, s3));
    CHECK(s2 == r.set);
  }
}

TEST_CASE("stopping index matches exhaustive prefix enumeration") {
  // Dense problems small enough to enumerate every prefix with the
  // transform-based integrator.
  int agree = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    RngStream rng(3000 + t, "stop");
    const int n = 4 + static_cast<int>(rng.below(5));
    Matrix cov = oracle::random_spd(n, rng, 0.2);
    Vector mean(n);
    for (int i = 0; i < n; ++i) mean[i] = 0.6 + 0.8 * rng.normal();
    GaussianPosterior post(mean, cov);
    const double alpha = 0.05 + 0.4 * rng.uniform();
    auto prob = make_problem(0.0, alpha, Direction::Positive,
                             Family::one_param(Direction::Positive, 0.0),
                             8000, 4200 + t);
    auto r = excursion_one_param(prob, post);

    // Oracle: joint probability of every admission prefix.
    IntegrationConfig qcfg;
    qcfg.qmc_points = 4096;
    qcfg.seed = 77;
    int best = 0;
    for (std::size_t k = 1; k <= r.admission.size(); ++k) {
      Vector a = Vector::Constant(n, -kInf), b = Vector::Constant(n, kInf);
      for (std::size_t j = 0; j < k; ++j) a[r.admission[j]] = 0.0;
      auto e = qmc_genz(mean, cov, Bounds(a, b), qcfg);
      if (e.value >= 1.0 - alpha)
        best = static_cast<int>(k);
      else
        break;
    }
    agree += (static_cast<int>(r.set.size()) == best) ? 1 : 0;
  }
  CHECK(agree >= 19);
}

TEST_CASE("two-parameter families never shrink the set") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    RngStream rng(seed, "twopar");
    const int n = 20;
    auto post = random_gmrf(n, rng, 1.0);
    const double alpha = 0.1;
    auto one = excursion_one_param(
        make_problem(0.0, alpha, Direction::Positive,
                     Family::one_param(Direction::Positive, 0.0), 2500, seed),
        post);
    auto two = excursion_two_param(
        make_problem(0.0, alpha, Direction::Positive,
                     Family::two_param_level(Direction::Positive, 0.0, 0.0),
                     2500, seed),
        post);
    CHECK(two.set.size() >= one.set.size());
  }
}

TEST_CASE("equal standard deviations make every admission level equivalent") {
  // Same ordering for every secondary level, so the search ties back to the
  // one-parameter slice and reproduces its set.
  Vector mean(10);
  for (int i = 0; i < 10; ++i) mean[i] = 2.0 - 0.3 * i;
  GaussianPosterior post(mean, SparseSymmetricMatrix::identity(10));
  auto one = excursion_one_param(
      make_problem(0.0, 0.1, Direction::Positive,
                   Family::one_param(Direction::Positive, 0.0), 2000, 9),
      post);
  auto two = excursion_two_param(
      make_problem(0.0, 0.1, Direction::Positive,
                   Family::two_param_level(Direction::Positive, 0.0, 0.0),
                   2000, 9),
      post);
  CHECK(two.set == one.set);
}

TEST_CASE("smoothing a constant probability field changes nothing") {
  const int n = 16;
  auto coords = std::make_shared<Matrix>(n, 1);
  for (int i = 0; i < n; ++i) (*coords)(i, 0) = i;
  GaussianPosterior post(Vector::Constant(n, 1.0),
                         SparseSymmetricMatrix::identity(n));
  auto one = excursion_one_param(
      make_problem(0.0, 0.1, Direction::Positive,
                   Family::one_param(Direction::Positive, 0.0), 2000, 5),
      post);
  auto two = excursion_two_param(
      make_problem(0.0, 0.1, Direction::Positive,
                   Family::two_param_smoothing(Direction::Positive, 0.0, 0.0,
                                               coords),
                   2000, 5),
      post);
  CHECK(two.set.size() == one.set.size());
}

TEST_CASE("level avoidance") {
  SUBCASE("two independent nodes admit opposite sides") {
    Vector mean(2);
    mean << 1.2815515655446004, -1.2815515655446004;  // p = 0.9 each side
    GaussianPosterior post(mean, SparseSymmetricMatrix::identity(2));
    auto prob = make_problem(0.0, 0.05, Direction::Avoid,
                             Family::level_avoid_one(0.0), 2000, 2);
    auto r = level_avoid(prob, post);
    CHECK(r.side[0] == 1);
    CHECK(r.side[1] == -1);
    CHECK(r.F[0] == doctest::Approx(0.9).epsilon(1e-10));
    CHECK(r.F[1] == doctest::Approx(0.81).epsilon(1e-10));
  }
  SUBCASE("deterministic field: avoided pair is the exact level split") {
    const int n = 6;
    Vector mean(n);
    mean << 1.0, -1.0, 2.0, -2.0, 0.5, -0.5;
    Matrix cov = 1e-26 * Matrix::Identity(n, n);
    GaussianPosterior post(mean, cov);
    auto prob = make_problem(0.0, 0.05, Direction::Avoid,
                             Family::level_avoid_one(0.0), 500, 3);
    auto r = level_avoid(prob, post);
    CHECK(r.side_members(+1) == std::vector<int>{0, 2, 4});
    CHECK(r.side_members(-1) == std::vector<int>{1, 3, 5});
    CHECK(r.set_complement().empty());
    for (int i = 0; i < n; ++i) CHECK(r.F[i] == 1.0);
  }
  SUBCASE("mean sign flip mirrors the side tags") {
    RngStream rng(8, "avoidsym");
    auto post = random_gmrf(10, rng, 1.0);
    auto r1 = level_avoid(make_problem(0.0, 0.1, Direction::Avoid,
                                       Family::level_avoid_one(0.0), 2500, 4),
                          post);
    GaussianPosterior flipped(-post.mean(), post.precision());
    auto r2 = level_avoid(make_problem(0.0, 0.1, Direction::Avoid,
                                       Family::level_avoid_one(0.0), 2500, 4),
                          flipped);
    for (int i = 0; i < 10; ++i) CHECK(r1.side[i] == -r2.side[i]);
    for (int i = 0; i < 10; ++i)
      CHECK(r1.F[i] == doctest::Approx(r2.F[i]).epsilon(0.08));
    // Avoided sides partition the set.
    auto plus = r1.side_members(+1);
    auto minus = r1.side_members(-1);
    CHECK(plus.size() + minus.size() == r1.set.size());
  }
  SUBCASE("two-parameter avoiding set is never smaller") {
    for (std::uint64_t seed = 11; seed <= 14; ++seed) {
      RngStream rng(seed, "avoid2");
      auto post = random_gmrf(14, rng, 1.0);
      auto one = level_avoid(
          make_problem(0.0, 0.1, Direction::Avoid,
                       Family::level_avoid_one(0.0), 2000, seed),
          post);
      auto two = level_avoid(
          make_problem(0.0, 0.1, Direction::Avoid,
                       Family::level_avoid_two(0.0), 2000, seed),
          post);
      CHECK(two.set.size() >= one.set.size());
    }
  }
}

TEST_CASE("same seed gives bit-identical excursion functions") {
  RngStream rng(55, "det");
  auto post = random_gmrf(18, rng, 1.1);
  auto prob = make_problem(0.0, 0.05, Direction::Positive,
                           Family::one_param(Direction::Positive, 0.0), 3000,
                           123);
  auto r1 = excursion_one_param(prob, post);
  auto r2 = excursion_one_param(prob, post);
  CHECK(r1.F == r2.F);
  CHECK(r1.set == r2.set);
}

TEST_CASE("appending excluded nodes with vacuous bounds changes nothing") {
  // Three nodes sit so deep below the level that their exceedance
  // probability is exactly zero in double precision; marginalizing them out
  // and appending them with vacuous bounds must agree.
  RngStream rng(70, "append");
  const int n = 12;
  std::vector<Eigen::Triplet<double>> tr;
  for (int i = 0; i < n; ++i) tr.emplace_back(i, i, 2.0 + rng.uniform());
  for (int i = 0; i + 1 < n; ++i) tr.emplace_back(i + 1, i, -0.5);
  auto q = SparseSymmetricMatrix::from_triplets(n, tr);
  Vector mean(n);
  for (int i = 0; i < n; ++i) mean[i] = rng.normal();
  mean[2] = mean[7] = mean[11] = -60.0;
  GaussianPosterior post(mean, q);
  auto prob = make_problem(0.0, 0.1, Direction::Positive,
                           Family::one_param(Direction::Positive, 0.0), 2000,
                           31);
  auto r_marg = excursion_one_param(prob, post);
  prob.marginalize_unused = false;
  auto r_app = excursion_one_param(prob, post);
  CHECK(r_marg.set == r_app.set);
  CHECK(r_marg.F[2] == 0.0);
  CHECK(r_app.F[2] == 0.0);
  for (int i = 0; i < n; ++i)
    CHECK(r_marg.F[i] == doctest::Approx(r_app.F[i]).epsilon(1e-10));
}
