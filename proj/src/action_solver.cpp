#include "twistlab/action_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace twistlab {

namespace {

long floor_div(long a, long b) {
  long d = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --d;
  return d;
}

Configuration with_thetas(const Configuration& c, Eigen::VectorXd thetas) {
  Configuration out{c.p, c.q, std::move(thetas)};
  return out;
}

struct Descent {
  Configuration config;
  bool converged = false;
  double value = 0.0;
  double gradient_norm = 0.0;
};

constexpr double kMaxNewtonStep = 0.5;

// Damped Newton on the periodic action, switching to steepest descent
// whenever the Newton direction is not a descent direction.
Descent descend(const GeneratingFunction& gf, Configuration c, const MinimizeOptions& opt) {
  Descent out;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    const Eigen::VectorXd g = action_gradient(gf, c);
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    out.gradient_norm = gnorm;
    if (!std::isfinite(gnorm)) break;
    if (gnorm < opt.gradient_tolerance) {
      out.converged = true;
      break;
    }
    if (it == opt.max_iterations) break;

    Eigen::VectorXd d = -action_hessian(gf, c).solve(g);
    bool newton = d.allFinite() && g.dot(d) < -1e-12 * g.norm() * d.norm();
    if (newton) {
      const double step = d.lpNorm<Eigen::Infinity>();
      if (step > kMaxNewtonStep) d *= kMaxNewtonStep / step;
    }

    // Close to a critical point the action differences drown in rounding;
    // take the Newton step as is.
    if (newton && gnorm < 1e-7) {
      c.thetas += d;
      continue;
    }
    if (!newton) d = -g;

    const double f0 = action(gf, c);
    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const double slope = g.dot(d);
      double t = 1.0;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        Eigen::VectorXd trial = c.thetas + t * d;
        if (action(gf, with_thetas(c, trial)) <= f0 + 1e-4 * t * slope) {
          c.thetas = std::move(trial);
          accepted = true;
          break;
        }
      }
      if (!accepted && newton) {
        newton = false;
        d = -g;
      } else {
        break;
      }
    }
    if (!accepted) break;
  }
  out.value = action(gf, c);
  out.config = std::move(c);
  return out;
}

bool better(const Descent& a, const Descent& b) {
  const double tol = 1e-12 * std::max(1.0, std::abs(b.value));
  if (a.value < b.value - tol) return true;
  if (a.value > b.value + tol) return false;
  return reduce_angle(a.config.thetas(0)) < reduce_angle(b.config.thetas(0));
}

}  // namespace

double Configuration::theta(long j) const {
  const long m = floor_div(j, q);
  return thetas(j - m * q) + static_cast<double>(m) * p;
}

Configuration make_configuration(int p, int q, Eigen::VectorXd thetas) {
  if (q < 1) throw InvalidArgument("q must be >= 1");
  if (std::gcd(p, q) != 1) throw InvalidArgument("p,q not coprime");
  if (thetas.size() != q) throw InvalidArgument("configuration needs exactly q angles");
  return Configuration{p, q, std::move(thetas)};
}

Configuration rigid_rotation(int p, int q, double phase) {
  Eigen::VectorXd t(q);
  for (int j = 0; j < q; ++j) t(j) = phase + static_cast<double>(j) * p / q;
  return make_configuration(p, q, std::move(t));
}

Configuration canonicalize(const Configuration& c) {
  long best = 0;
  double best_angle = reduce_angle(c.thetas(0));
  for (long m = 1; m < c.q; ++m) {
    const double a = reduce_angle(c.thetas(m));
    if (a < best_angle) {
      best_angle = a;
      best = m;
    }
  }
  const double shift = std::floor(c.theta(best));
  Eigen::VectorXd t(c.q);
  for (long i = 0; i < c.q; ++i) t(i) = c.theta(best + i) - shift;
  if (t(0) >= 1.0) t.array() -= 1.0;  // theta_0 a hair below an integer
  return Configuration{c.p, c.q, std::move(t)};
}

bool has_rotation_ordering(const Configuration& c) {
  // Walk the orbit in the order of j p / q mod 1; the forward arcs between
  // consecutive angles must add up to a single turn. Angles closer than
  // 1e-9 count as ties: near a hyperbolic point the orbit can cluster
  // below what double precision resolves.
  const int q = c.q;
  if (q == 1) return true;
  std::vector<int> by_rotation(q);
  std::iota(by_rotation.begin(), by_rotation.end(), 0);
  auto rot = [&](int j) { return ((static_cast<long>(j) * c.p) % q + q) % q; };
  std::sort(by_rotation.begin(), by_rotation.end(), [&](int a, int b) { return rot(a) < rot(b); });
  double turn = 0.0;
  for (int i = 0; i < q; ++i) {
    const double from = c.thetas(by_rotation[i]);
    const double to = c.thetas(by_rotation[(i + 1) % q]);
    double arc = reduce_angle(to - from);
    if (arc > 1.0 - 1e-9) arc = 0.0;
    turn += arc;
  }
  return std::abs(turn - 1.0) < 1e-6;
}

Eigen::MatrixXd PeriodicTridiagonal::dense() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index next = (j + 1) % n;
    m(j, j) += diag(j);
    m(j, next) += upper(j);
    m(next, j) += upper(j);
  }
  return m;
}

Eigen::VectorXd PeriodicTridiagonal::solve(const Eigen::VectorXd& rhs) const {
  const Eigen::Index n = size();
  auto dense_solve = [&] { return Eigen::VectorXd(dense().fullPivLu().solve(rhs)); };
  if (n <= 2) return dense_solve();

  // Plain tridiagonal solve: sub(i) couples i-1 and i, super(i) couples i, i+1.
  auto thomas = [n](const Eigen::VectorXd& sub, const Eigen::VectorXd& main,
                    const Eigen::VectorXd& super, const Eigen::VectorXd& b) {
    Eigen::VectorXd cp(n), dp(n), x(n);
    cp(0) = super(0) / main(0);
    dp(0) = b(0) / main(0);
    for (Eigen::Index i = 1; i < n; ++i) {
      const double den = main(i) - sub(i) * cp(i - 1);
      cp(i) = i + 1 < n ? super(i) / den : 0.0;
      dp(i) = (b(i) - sub(i) * dp(i - 1)) / den;
    }
    x(n - 1) = dp(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = dp(i) - cp(i) * x(i + 1);
    return x;
  };

  Eigen::VectorXd sub(n), super(n);
  sub(0) = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) sub(i) = upper(i - 1);
  for (Eigen::Index i = 0; i + 1 < n; ++i) super(i) = upper(i);
  super(n - 1) = 0.0;
  const double corner = upper(n - 1);

  const double gamma = -std::max(std::abs(diag(0)), 1.0);
  Eigen::VectorXd main = diag;
  main(0) -= gamma;
  main(n - 1) -= corner * corner / gamma;

  const Eigen::VectorXd x = thomas(sub, main, super, rhs);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  u(0) = gamma;
  u(n - 1) = corner;
  const Eigen::VectorXd z = thomas(sub, main, super, u);
  const double fact =
      (x(0) + corner * x(n - 1) / gamma) / (1.0 + z(0) + corner * z(n - 1) / gamma);
  Eigen::VectorXd sol = x - fact * z;

  if (!sol.allFinite()) return dense_solve();
  // Thomas elimination has no pivoting; verify the residual.
  Eigen::VectorXd residual = -rhs;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index next = (j + 1) % n;
    residual(j) += diag(j) * sol(j) + upper(j) * sol(next);
    residual(next) += upper(j) * sol(j);
  }
  if (residual.lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>()))
    return dense_solve();
  return sol;
}

double PeriodicTridiagonal::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double action(const GeneratingFunction& gf, const Configuration& c) {
  double sum = 0.0;
  for (long j = 0; j < c.q; ++j) sum += gf.S(c.theta(j), c.theta(j + 1));
  return sum;
}

Eigen::VectorXd action_gradient(const GeneratingFunction& gf, const Configuration& c) {
  Eigen::VectorXd g(c.q);
  for (long j = 0; j < c.q; ++j) {
    const double prev = c.theta(j - 1), cur = c.theta(j), next = c.theta(j + 1);
    g(j) = gf.S2(prev, cur) + gf.S1(cur, next);
  }
  return g;
}

PeriodicTridiagonal action_hessian(const GeneratingFunction& gf, const Configuration& c) {
  PeriodicTridiagonal h{Eigen::VectorXd(c.q), Eigen::VectorXd(c.q)};
  for (long j = 0; j < c.q; ++j) {
    const double prev = c.theta(j - 1), cur = c.theta(j), next = c.theta(j + 1);
    h.diag(j) = gf.S22(prev, cur) + gf.S11(cur, next);
    h.upper(j) = gf.S12(cur, next);
  }
  return h;
}

namespace {

// Same angles mod 1, reassigned so that their cyclic order is that of the
// rigid rotation: theta_j = a_{jp mod q} + floor(jp / q) for the sorted a.
Configuration rotation_ordered(const Configuration& c) {
  std::vector<double> a(c.q);
  for (long j = 0; j < c.q; ++j) a[j] = reduce_angle(c.thetas(j));
  std::sort(a.begin(), a.end());
  Eigen::VectorXd t(c.q);
  for (long j = 0; j < c.q; ++j) {
    const long jp = j * c.p;
    const long rank = ((jp % c.q) + c.q) % c.q;
    t(j) = a[rank] + static_cast<double>((jp - rank) / c.q);
  }
  return Configuration{c.p, c.q, std::move(t)};
}

}  // namespace

MinimizeResult minimize_periodic(const GeneratingFunction& gf, int p, int q,
                                 const MinimizeOptions& options) {
  if (q < 1) throw InvalidArgument("q must be >= 1");
  if (std::gcd(p, q) != 1) throw InvalidArgument("p,q not coprime");
  if (options.restarts < 0) throw InvalidArgument("restarts must be >= 1");
  const int restarts = options.restarts > 0 ? options.restarts : std::max(8, q);

  double offset = 0.0;
  if (options.seed != 0) {
    std::mt19937_64 rng(options.seed);
    offset = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }

  std::vector<Configuration> seeds;
  seeds.reserve(restarts + options.extra_seeds.size());
  // rigid rotations with phases a multiple of 1/q apart are the same orbit
  const double span = 1.0 / (static_cast<double>(restarts) * q);
  for (int m = 0; m < restarts; ++m) seeds.push_back(rigid_rotation(p, q, (m + offset) * span));
  for (const auto& s : options.extra_seeds) {
    if (s.p != p || s.q != q) throw InvalidArgument("extra seed has a different (p, q)");
    seeds.push_back(s);
  }

  std::vector<Descent> runs(seeds.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(seeds.size())));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < seeds.size(); i += workers) {
      runs[i] = descend(gf, seeds[i], options);
      // A crossing configuration is never the minimum; untangle and retry.
      for (int pass = 0; pass < 4 && runs[i].converged && !has_rotation_ordering(runs[i].config); ++pass) {
        Descent d = descend(gf, rotation_ordered(runs[i].config), options);
        if (!d.converged || !(d.value < runs[i].value)) break;
        runs[i] = std::move(d);
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  std::vector<Descent*> converged;
  double best_gradient = std::numeric_limits<double>::infinity();
  for (auto& r : runs) {
    best_gradient = std::min(best_gradient, r.gradient_norm);
    if (!r.converged) continue;
    r.config = canonicalize(r.config);
    converged.push_back(&r);
  }
  if (converged.empty()) {
    std::ostringstream msg;
    msg << "minimize " << p << "/" << q << ": no restart reached gradient tolerance "
        << options.gradient_tolerance << " (best " << best_gradient << ")";
    throw NoConvergence(msg.str());
  }
  std::stable_sort(converged.begin(), converged.end(),
                   [](const Descent* a, const Descent* b) { return better(*a, *b); });

  // Minimax orbits can tie with the minimizer to rounding; among the
  // equal-action candidates take the first with a nonnegative Hessian.
  const double lowest = converged.front()->value;
  const double tie = 1e-12 * std::max(1.0, std::abs(lowest));
  Descent chosen = *converged.front();
  double min_eig = action_hessian(gf, chosen.config).min_eigenvalue();
  const Configuration* tested = &converged.front()->config;
  for (std::size_t i = 1; min_eig < -1e-8 && i < converged.size(); ++i) {
    const Descent* c = converged[i];
    if (c->value > lowest + tie) break;
    if ((c->config.thetas - tested->thetas).lpNorm<Eigen::Infinity>() < 1e-9) continue;
    tested = &c->config;
    const double e = action_hessian(gf, c->config).min_eigenvalue();
    if (e >= -1e-8) {
      chosen = *c;
      min_eig = e;
    }
  }

  // Otherwise leave the saddle along its unstable direction: minimize the
  // action on that line, then descend again.
  for (int escape = 0; min_eig < -1e-8 && escape < 8; ++escape) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(action_hessian(gf, chosen.config).dense());
    const Eigen::VectorXd v = es.eigenvectors().col(0);
    const double f0 = chosen.value;
    Configuration best_line = chosen.config;
    double best_f = f0;
    for (double sign : {1.0, -1.0}) {
      double prev = f0;
      for (double t = 1e-4; t < 1.0; t *= 1.5) {
        Configuration trial = chosen.config;
        trial.thetas += sign * t * v;
        const double f = action(gf, trial);
        if (f < best_f) {
          best_f = f;
          best_line = trial;
        }
        if (f > prev) break;
        prev = f;
      }
    }
    Descent d = descend(gf, best_line, options);
    if (!d.converged) break;
    d.config = canonicalize(d.config);
    chosen = std::move(d);
    min_eig = action_hessian(gf, chosen.config).min_eigenvalue();
  }
  if (min_eig < -1e-8) {
    std::ostringstream msg;
    msg << "minimize " << p << "/" << q << ": only saddle points found (min eigenvalue "
        << min_eig << ")";
    throw NoConvergence(msg.str());
  }

  MinimizeResult result;
  result.config = std::move(chosen.config);
  result.report.value = action(gf, result.config);
  result.report.gradient_inf_norm = action_gradient(gf, result.config).lpNorm<Eigen::Infinity>();
  result.report.hessian_min_eig = min_eig;
  result.report.restarts_used = static_cast<int>(seeds.size());
  result.report.ordered = has_rotation_ordering(result.config);
  return result;
}

Configuration continuation_seed(const Configuration& previous, int p, int q) {
  // Deviation from rigid rotation, sampled at the angles m / q' in [0, 1).
  const int qp = previous.q;
  std::vector<double> deviation(qp);
  for (long i = 0; i < qp; ++i) {
    const double t = static_cast<double>(i) * previous.p / qp;
    const long m = ((i * previous.p) % qp + qp) % qp;
    deviation[m] = previous.thetas(i) - t;
  }
  Eigen::VectorXd t(q);
  for (long j = 0; j < q; ++j) {
    const double base = static_cast<double>(j) * p / q;
    const double u = reduce_angle(base) * qp;
    const long lo = static_cast<long>(std::floor(u)) % qp;
    const double w = u - std::floor(u);
    t(j) = base + (1.0 - w) * deviation[lo] + w * deviation[(lo + 1) % qp];
  }
  return make_configuration(p, q, std::move(t));
}

std::vector<LiftPoint> configuration_to_orbit(const GeneratingFunction& gf,
                                              const Configuration& c) {
  const double g = action_gradient(gf, c).lpNorm<Eigen::Infinity>();
  if (!(g < 1e-8)) {
    std::ostringstream msg;
    msg << "configuration " << c.p << "/" << c.q << " is not critical (gradient " << g << ")";
    throw NotCritical(msg.str());
  }
  std::vector<LiftPoint> pts(c.q);
  for (long j = 0; j < c.q; ++j) pts[j] = {c.theta(j), -gf.S1(c.theta(j), c.theta(j + 1))};
  return pts;
}

double rotation_number(std::span<const LiftPoint> points) {
  if (points.size() < 2) throw InvalidArgument("rotation_number needs at least two points");
  return (points.back().x - points.front().x) / static_cast<double>(points.size() - 1);
}

}  // namespace twistlab
