#include "twistlab/spectral.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace twistlab {

ProjectiveSlope slope_pushforward(const Tangent2x2& m, ProjectiveSlope s) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  if (s.is_vertical()) {
    if (std::abs(b) < kVerticalThreshold) return ProjectiveSlope::vertical();
    return ProjectiveSlope::finite(d / b);
  }
  const double den = a + b * s.value();
  if (std::abs(den) < kVerticalThreshold) return ProjectiveSlope::vertical();
  return ProjectiveSlope::finite((c + d * s.value()) / den);
}

double Monodromy::trace() const { return std::exp(log_scale) * scaled.trace(); }

double Monodromy::log_abs_two_minus_trace() const {
  // |2 - e^L tr| = e^L |2 e^{-L} - tr|
  return log_scale + std::log(std::abs(2.0 * std::exp(-log_scale) - scaled.trace()));
}

Monodromy monodromy(const GeneratingFunction& gf, const Configuration& c) {
  const double g = action_gradient(gf, c).lpNorm<Eigen::Infinity>();
  if (!(g < 1e-8)) {
    std::ostringstream msg;
    msg << "monodromy of " << c.p << "/" << c.q << ": configuration not critical (gradient "
        << g << ")";
    throw NotCritical(msg.str());
  }
  Monodromy m;
  for (long j = 0; j < c.q; ++j) {
    m.scaled = tangent_from_pair(gf, c.theta(j), c.theta(j + 1)) * m.scaled;
    const double big = m.scaled.cwiseAbs().maxCoeff();
    if (big > 1e8) {
      m.scaled /= big;
      m.log_scale += std::log(big);
    }
  }
  return m;
}

double monodromy_trace(const GeneratingFunction& gf, const Configuration& c) {
  return monodromy(gf, c).trace();
}

ResidueRecord residue(double trace, int p, int q) {
  if (q < 1) throw InvalidArgument("q must be >= 1");
  ResidueRecord rec;
  rec.p = p;
  rec.q = q;
  rec.trace = trace;
  rec.residue = (2.0 - trace) / 4.0;
  rec.mean_residue = rec.residue == 0.0 ? 0.0 : std::pow(std::abs(rec.residue), 1.0 / q);
  const double t = std::abs(trace);
  if (t >= 2.0) {
    // (t + sqrt(t^2 - 4)) / 2 without squaring t.
    rec.lambda_max = 0.5 * t * (1.0 + std::sqrt((1.0 - 2.0 / t) * (1.0 + 2.0 / t)));
  }
  return rec;
}

ResidueRecord residue(const Monodromy& m, int p, int q) {
  ResidueRecord rec = residue(m.trace(), p, q);
  if (std::abs(rec.trace) > 1e12 || !std::isfinite(rec.trace))
    rec.mean_residue = std::exp((m.log_abs_two_minus_trace() - std::log(4.0)) / q);
  return rec;
}

double GreenPair::width() const {
  if (s_minus.is_vertical() || s_plus.is_vertical())
    return std::numeric_limits<double>::infinity();
  return s_plus.value() - s_minus.value();
}

GreenPair green_slopes_from_tangents(std::span<const Tangent2x2> past,
                                     std::span<const Tangent2x2> future) {
  GreenPair out;
  out.depth = static_cast<int>(past.size());
  ProjectiveSlope plus = ProjectiveSlope::vertical();
  for (const auto& t : past) plus = slope_pushforward(t, plus);
  ProjectiveSlope minus = ProjectiveSlope::vertical();
  for (auto it = future.rbegin(); it != future.rend(); ++it)
    minus = slope_pushforward(symplectic_inverse(*it), minus);
  out.s_plus = plus;
  out.s_minus = minus;
  return out;
}

GreenPair green_slopes(const GeneratingFunction& gf, const LiftPoint& center, int n) {
  if (n < 1) throw InvalidArgument("green slopes need depth n >= 1");
  const auto back = orbit(gf, center, -n);  // center, f^{-1}, ..., f^{-n}
  const auto fwd = orbit(gf, center, n);    // center, f, ..., f^n
  std::vector<Tangent2x2> past(n), future(n);
  for (int i = 0; i < n; ++i) {
    // back[n - i] -> back[n - i - 1]
    past[i] = tangent_from_pair(gf, back[n - i].x, back[n - i - 1].x);
    future[i] = tangent_from_pair(gf, fwd[i].x, fwd[i + 1].x);
  }
  return green_slopes_from_tangents(past, future);
}

GreenPair green_slopes_periodic(const GeneratingFunction& gf, const Configuration& c, int index,
                                int n) {
  if (n < 1) throw InvalidArgument("green slopes need depth n >= 1");
  if (index < 0 || index >= c.q) throw InvalidArgument("orbit index must lie in [0, q)");
  std::vector<Tangent2x2> cycle(c.q);
  for (long j = 0; j < c.q; ++j) cycle[j] = tangent_from_pair(gf, c.theta(j), c.theta(j + 1));
  auto at = [&](long j) -> const Tangent2x2& { return cycle[((j % c.q) + c.q) % c.q]; };
  std::vector<Tangent2x2> past(n), future(n);
  for (int i = 0; i < n; ++i) {
    past[i] = at(static_cast<long>(index) - n + i);
    future[i] = at(static_cast<long>(index) + i);
  }
  return green_slopes_from_tangents(past, future);
}

double lyapunov_exponent(const GeneratingFunction& gf, const LiftPoint& start, long n) {
  if (n < 100) throw InvalidArgument("lyapunov exponent needs n >= 100");
  constexpr int kWarmup = 64;
  const auto back = orbit(gf, start, -kWarmup);
  ProjectiveSlope s = ProjectiveSlope::vertical();
  for (int i = kWarmup; i > 0; --i)
    s = slope_pushforward(tangent_from_pair(gf, back[i].x, back[i - 1].x), s);
  Eigen::Vector2d v = s.is_vertical() ? Eigen::Vector2d(0.0, 1.0) : Eigen::Vector2d(1.0, s.value());
  v.normalize();

  double log_growth = 0.0;
  LiftPoint x = start;
  for (long i = 0; i < n; ++i) {
    const LiftPoint next = forward(gf, x);
    v = tangent_from_pair(gf, x.x, next.x) * v;
    x = next;
    if ((i + 1) % 10 == 0 || i + 1 == n) {
      const double norm = v.norm();
      log_growth += std::log(norm);
      v /= norm;
    }
  }
  return log_growth / static_cast<double>(n);
}

}  // namespace twistlab
