#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "twistlab/action_solver.hpp"
#include "twistlab/errors.hpp"

using namespace twistlab;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

Configuration random_configuration(int p, int q, double noise, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-noise, noise);
  Configuration c = rigid_rotation(p, q, 0.13);
  for (int j = 0; j < q; ++j) c.thetas[j] += u(rng);
  return c;
}

double el_residual(const GeneratingFunction& gf, const Configuration& c) {
  return action_gradient(gf, c).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("configuration construction") {
  Eigen::VectorXd t(2);
  t << 0.1, 0.6;
  const auto c = make_configuration(1, 2, t);
  CHECK(c.theta(0) == 0.1);
  CHECK(c.theta(2) == Approx(1.1));
  CHECK(c.theta(3) == Approx(1.6));
  CHECK(c.theta(-1) == Approx(-0.4));
  CHECK(c.theta(-2) == Approx(-0.9));

  CHECK_THROWS_WITH_AS(make_configuration(2, 4, Eigen::VectorXd::Zero(4)), "p,q not coprime", InvalidArgument);
  CHECK_THROWS_AS(make_configuration(0, 2, Eigen::VectorXd::Zero(2)), InvalidArgument);
  CHECK_THROWS_AS(make_configuration(1, 0, Eigen::VectorXd::Zero(0)), InvalidArgument);
  CHECK_THROWS_AS(make_configuration(1, 3, Eigen::VectorXd::Zero(2)), InvalidArgument);
  CHECK_NOTHROW(make_configuration(0, 1, Eigen::VectorXd::Zero(1)));
  CHECK_NOTHROW(make_configuration(-2, 3, Eigen::VectorXd::Zero(3)));
}

TEST_CASE("rigid rotation and canonical form") {
  const auto c = rigid_rotation(2, 5, 0.3);
  for (int j = 0; j < 5; ++j) CHECK(c.thetas[j] == Approx(0.3 + 0.4 * j));
  CHECK(has_rotation_ordering(c));

  const auto k = canonicalize(c);
  CHECK(k.thetas[0] >= 0.0);
  CHECK(k.thetas[0] < 1.0);
  for (int j = 1; j < 5; ++j) CHECK(reduce_angle(k.thetas[j]) >= reduce_angle(k.thetas[0]));
  // same set of angles mod 1
  std::vector<double> a, b;
  for (int j = 0; j < 5; ++j) {
    a.push_back(reduce_angle(c.thetas[j]));
    b.push_back(reduce_angle(k.thetas[j]));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (int j = 0; j < 5; ++j) CHECK(a[j] == Approx(b[j]));
  // canonical form still closes with the same p
  for (int j = 0; j < 5; ++j) CHECK(k.theta(j + 1) - k.theta(j) == Approx(0.4));

  // idempotent
  const auto kk = canonicalize(k);
  for (int j = 0; j < 5; ++j) CHECK(kk.thetas[j] == k.thetas[j]);

  auto bad = c;
  std::swap(bad.thetas[1], bad.thetas[2]);
  CHECK_FALSE(has_rotation_ordering(bad));
  CHECK(has_rotation_ordering(rigid_rotation(0, 1, 0.7)));
}

TEST_CASE("periodic tridiagonal solve") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int q : {1, 2, 3, 4, 7, 50}) {
    PeriodicTridiagonal h;
    h.diag = Eigen::VectorXd(q);
    h.upper = Eigen::VectorXd(q);
    for (int j = 0; j < q; ++j) {
      h.diag[j] = 3.0 + u(rng);
      h.upper[j] = -1.0 + 0.3 * u(rng);
    }
    Eigen::VectorXd rhs(q);
    for (int j = 0; j < q; ++j) rhs[j] = u(rng);
    const Eigen::MatrixXd A = h.dense();
    CHECK((A - A.transpose()).norm() < 1e-15);
    const Eigen::VectorXd x = h.solve(rhs);
    CHECK((A * x - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    CHECK(h.min_eigenvalue() == Approx(es.eigenvalues()[0]));
  }
  // indefinite periodic matrix still solved
  PeriodicTridiagonal h;
  h.diag = Eigen::VectorXd::Constant(6, 0.5);
  h.upper = Eigen::VectorXd::Constant(6, -1.0);
  h.diag[2] = -0.7;
  Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  CHECK((h.dense() * h.solve(rhs) - rhs).norm() < 1e-10);
}

TEST_CASE("action examples") {
  const auto integ = integrable_family();
  CHECK(action(integ, rigid_rotation(1, 2, 0.2)) == Approx(0.25));
  for (auto [p, q] : {std::pair{0, 1}, {1, 3}, {2, 5}, {3, 7}, {-1, 4}})
    CHECK(action(integ, rigid_rotation(p, q, 0.41)) == Approx(double(p * p) / (2.0 * q)));
  const auto std1 = standard_family(1.0);
  CHECK(action(std1, rigid_rotation(0, 1, 0.0)) == Approx(-1.0 / (4 * kPi * kPi)));
  CHECK(action(std1, rigid_rotation(0, 1, 0.0)) == Approx(-0.0253303).epsilon(1e-6));
}

TEST_CASE("gradient examples") {
  const auto g0 = action_gradient(integrable_family(), rigid_rotation(3, 7, 0.2));
  CHECK(g0.lpNorm<Eigen::Infinity>() < 1e-14);
  const auto std1 = standard_family(1.0);
  CHECK(std::abs(action_gradient(std1, rigid_rotation(0, 1, 0.0))[0]) < 1e-15);
  CHECK(action_gradient(std1, rigid_rotation(0, 1, 0.25))[0] == Approx(1.0 / (2 * kPi)));
}

TEST_CASE("gradient and Hessian agree with finite differences") {
  for (double k : {0.0, 0.5, 1.0, 2.0}) {
    const auto gf = standard_family(k);
    for (auto [p, q] : {std::pair{0, 1}, {1, 1}, {1, 2}, {1, 3}, {2, 5}, {5, 8}}) {
      const auto c = random_configuration(p, q, 0.2, 40 + q);
      const auto g = action_gradient(gf, c);
      const Eigen::MatrixXd H = action_hessian(gf, c).dense();
      const double h = 1e-5;
      for (int j = 0; j < q; ++j) {
        auto cp = c, cm = c;
        cp.thetas[j] += h;
        cm.thetas[j] -= h;
        CHECK(g[j] == Approx((action(gf, cp) - action(gf, cm)) / (2 * h)).epsilon(1e-6).scale(1.0));
        const Eigen::VectorXd col = (action_gradient(gf, cp) - action_gradient(gf, cm)) / (2 * h);
        CHECK((H.col(j) - col).lpNorm<Eigen::Infinity>() < 1e-5);
      }
    }
  }
}

TEST_CASE("Hessian examples") {
  const auto H = action_hessian(integrable_family(), rigid_rotation(1, 3, 0.0)).dense();
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  CHECK((H - expected).norm() < 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  CHECK(std::abs(es.eigenvalues()[0]) < 1e-14);
  CHECK(es.eigenvalues()[1] > 0.5);

  // q = 1: d^2/dtheta^2 of theta -> S(theta, theta) at 0, computed directly
  const auto std1 = standard_family(1.0);
  const auto c = rigid_rotation(0, 1, 0.0);
  const double h = 1e-4;
  const double fd = (action(std1, rigid_rotation(0, 1, h)) - 2 * action(std1, c) +
                     action(std1, rigid_rotation(0, 1, -h))) / (h * h);
  const double scalar = action_hessian(std1, c).dense()(0, 0);
  CHECK(scalar == Approx(fd).epsilon(1e-6));
  CHECK(scalar == Approx(1.0));
}

TEST_CASE("integrable minimizers are equally spaced") {
  const auto gf = integrable_family();
  for (auto [p, q] : {std::pair{0, 1}, {1, 2}, {1, 3}, {2, 5}, {3, 8}, {-2, 7}}) {
    const auto res = minimize_periodic(gf, p, q);
    CHECK(res.report.value == Approx(double(p * p) / (2.0 * q)).epsilon(1e-12));
    for (int j = 0; j < q; ++j) CHECK(res.config.theta(j + 1) - res.config.theta(j) == Approx(double(p) / q));
    CHECK(res.report.hessian_min_eig >= -1e-8);
    CHECK(res.report.gradient_inf_norm < 1e-10);
    CHECK(res.report.restarts_used == std::max(8, q));
  }
}

TEST_CASE("standard k=1 fixed point and period two") {
  const auto gf = standard_family(1.0);
  const auto fixed = minimize_periodic(gf, 0, 1);
  CHECK(circle_distance(fixed.config.thetas[0], 0.0) < 1e-9);
  CHECK(fixed.report.value == Approx(-1.0 / (4 * kPi * kPi)).epsilon(1e-12));

  const auto two = minimize_periodic(gf, 1, 2);
  auto grid = oracle::grid_minimize(1.0, 1, 2, 1000);
  grid.thetas = oracle::polish(1.0, 1, grid.thetas);
  const double shift = std::floor(grid.thetas[0]);
  Eigen::VectorXd g(2);
  g << grid.thetas[0] - shift, grid.thetas[1] - shift;
  const auto oc = canonicalize(make_configuration(1, 2, g));
  CHECK(std::abs(oc.thetas[0] - two.config.thetas[0]) < 1e-4);
  CHECK(std::abs(oc.thetas[1] - two.config.thetas[1]) < 1e-4);
  CHECK(two.report.value == Approx(oracle::periodic_action({1.0}, 1, grid.thetas)).epsilon(1e-10));
}

TEST_CASE("minimizers are critical, ordered and stable") {
  for (double k : {0.5, 1.0, 2.0, 4.0}) {
    const auto gf = standard_family(k);
    for (auto [p, q] : {std::pair{0, 1}, {1, 2}, {1, 3}, {2, 5}, {3, 8}, {8, 13}, {21, 34}}) {
      const auto res = minimize_periodic(gf, p, q);
      CHECK(el_residual(gf, res.config) < 1e-10);
      CHECK(res.report.hessian_min_eig >= -1e-8);
      CAPTURE(k);
      CAPTURE(q);
      CHECK(res.report.ordered);
      CHECK(has_rotation_ordering(res.config));
      CHECK(res.config.thetas[0] >= 0.0);
      CHECK(res.config.thetas[0] < 1.0);
    }
  }
}

TEST_CASE("minimizer matches the grid oracle for small q") {
  for (double k : {0.5, 2.0}) {
    const auto gf = standard_family(k);
    for (auto [p, q] : {std::pair{0, 1}, {1, 2}, {1, 3}}) {
      auto grid = oracle::grid_minimize(k, p, q, 400);
      grid.thetas = oracle::polish(k, p, grid.thetas);
      const double expected = oracle::periodic_action({k}, p, grid.thetas);
      CHECK(minimize_periodic(gf, p, q).report.value == Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("grid oracle: dynamic programming equals brute force") {
  for (double k : {0.5, 1.0, 2.0})
    for (auto [p, q] : {std::pair{0, 1}, {1, 2}, {1, 3}, {2, 3}}) {
      const auto fast = oracle::grid_minimize(k, p, q, 25);
      const auto slow = oracle::naive_grid_minimize(k, p, q, 25);
      CHECK(fast.value == Approx(slow.value).epsilon(1e-12));
      CHECK(oracle::periodic_action({k}, p, fast.thetas) == Approx(fast.value).epsilon(1e-12));
    }
}

TEST_CASE("translation covariance of the lift") {
  for (double k : {0.5, 1.0, 2.0}) {
    const auto gf = standard_family(k);
    for (auto [p, q] : {std::pair{1, 2}, {2, 5}, {3, 8}}) {
      const auto a = minimize_periodic(gf, p, q);
      const auto b = minimize_periodic(gf, p + q, q);
      // same orbit: the difference is the integer j up to a common integer shift
      const double d0 = b.config.thetas[0] - a.config.thetas[0];
      CHECK(std::abs(d0 - std::round(d0)) < 1e-9);
      for (int j = 0; j < q; ++j) {
        const double d = b.config.thetas[j] - a.config.thetas[j] - std::round(d0);
        CHECK(d == Approx(double(j)).epsilon(1e-9).scale(1.0));
      }
      CHECK(b.report.hessian_min_eig == Approx(a.report.hessian_min_eig).epsilon(1e-8));
    }
  }
}

TEST_CASE("result does not depend on threads and seeds stay near the same minimum") {
  const auto gf = standard_family(1.5);
  MinimizeOptions one, many;
  many.threads = 4;
  const auto a = minimize_periodic(gf, 5, 13, one);
  const auto b = minimize_periodic(gf, 5, 13, many);
  for (int j = 0; j < 13; ++j) CHECK(a.config.thetas[j] == b.config.thetas[j]);
  CHECK(a.report.value == b.report.value);

  MinimizeOptions seeded;
  seeded.seed = 12345;
  seeded.restarts = 20;
  const auto c = minimize_periodic(gf, 5, 13, seeded);
  CHECK(c.report.value == Approx(a.report.value).epsilon(1e-12));
  CHECK(c.report.restarts_used == 20);
}

TEST_CASE("continuation seeds") {
  const auto gf = standard_family(0.8);
  const auto prev = minimize_periodic(gf, 3, 5);
  const auto seed = continuation_seed(prev.config, 5, 8);
  CHECK(seed.p == 5);
  CHECK(seed.q == 8);
  CHECK(has_rotation_ordering(seed));
  MinimizeOptions o;
  o.extra_seeds.push_back(seed);
  const auto with = minimize_periodic(gf, 5, 8, o);
  const auto without = minimize_periodic(gf, 5, 8);
  CHECK(with.report.value == Approx(without.report.value).epsilon(1e-12));
  CHECK(with.report.restarts_used == 9);

  MinimizeOptions wrong;
  wrong.extra_seeds.push_back(prev.config);
  CHECK_THROWS_AS(minimize_periodic(gf, 5, 8, wrong), InvalidArgument);
}

TEST_CASE("minimize error paths") {
  const auto gf = standard_family(1.0);
  CHECK_THROWS_WITH_AS(minimize_periodic(gf, 2, 4), "p,q not coprime", InvalidArgument);
  CHECK_THROWS_AS(minimize_periodic(gf, 1, 0), InvalidArgument);
  MinimizeOptions neg;
  neg.restarts = -1;
  CHECK_THROWS_AS(minimize_periodic(gf, 1, 2, neg), InvalidArgument);
  MinimizeOptions starved;
  starved.max_iterations = 0;
  CHECK_THROWS_AS(minimize_periodic(standard_family(2.0), 3, 5, starved), NoConvergence);
}

TEST_CASE("configuration to orbit") {
  const auto integ = integrable_family();
  const auto pts = configuration_to_orbit(integ, rigid_rotation(1, 2, 0.1));
  REQUIRE(pts.size() == 2);
  for (const auto& p : pts) CHECK(p.r == Approx(0.5));

  const auto std1 = standard_family(1.0);
  const auto fp = configuration_to_orbit(std1, minimize_periodic(std1, 0, 1).config);
  CHECK(std::abs(fp[0].r) < 1e-12);

  for (auto [p, q] : {std::pair{1, 2}, {2, 5}, {8, 13}}) {
    const auto c = minimize_periodic(std1, p, q).config;
    const auto o = configuration_to_orbit(std1, c);
    for (int j = 0; j + 1 < q; ++j) {
      const auto f = forward(std1, o[j]);
      CHECK(std::abs(f.x - o[j + 1].x) < 1e-8);
      CHECK(std::abs(f.r - o[j + 1].r) < 1e-8);
    }
    LiftPoint x = o[0];
    for (int j = 0; j < q; ++j) x = forward(std1, x);
    CHECK(std::hypot(x.x - o[0].x - p, x.r - o[0].r) < 1e-7);
  }

  CHECK_THROWS_AS(configuration_to_orbit(std1, rigid_rotation(0, 1, 0.25)), NotCritical);
}

TEST_CASE("rotation numbers") {
  const auto o = orbit(integrable_family(), {0.0, 0.5}, 100);
  CHECK(rotation_number(o) == Approx(0.5));

  const auto gf = standard_family(1.0);
  const auto c = minimize_periodic(gf, 3, 8).config;
  const auto pts = orbit(gf, configuration_to_orbit(gf, c)[0], 8 * 4);
  CHECK(rotation_number(pts) == Approx(3.0 / 8.0).epsilon(1e-9));

  const auto gf05 = standard_family(0.5);
  const auto golden = minimize_periodic(gf05, 55, 89).config;
  const auto start = configuration_to_orbit(gf05, golden)[0];
  const auto long_orbit = orbit(gf05, start, 10000);
  CHECK(std::abs(rotation_number(long_orbit) - (std::sqrt(5.0) - 1.0) / 2.0) < 1e-3);

  const std::vector<LiftPoint> single{{0.0, 0.0}};
  CHECK_THROWS_AS(rotation_number(single), InvalidArgument);
}
