#include "twistlab/map_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace twistlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Root of a strictly increasing g with g' >= slope_bound, searched from
// `start`. Bracketing by geometric expansion, then Newton safeguarded by
// bisection.
template <typename G, typename DG>
double solve_monotone(const G& g, const DG& dg, double start, double slope_bound,
                      const char* what) {
  const double g0 = g(start);
  if (g0 == 0.0) return start;
  const double dir = g0 < 0.0 ? 1.0 : -1.0;
  const double limit = std::abs(g0) / slope_bound + 10.0;

  double a = start;
  double ga = g0;
  double h = std::max(std::abs(g0) / std::max(std::abs(dg(start)), slope_bound), 1e-3);
  double b = a + dir * h;
  double gb = g(b);
  while ((gb < 0.0) == (ga < 0.0) && gb != 0.0) {
    if (std::abs(b - start) > limit) {
      std::ostringstream msg;
      msg << what << ": root not bracketed within " << limit << " of " << start;
      throw RootNotBracketed(msg.str());
    }
    a = b;
    ga = gb;
    h *= 2.0;
    b = a + dir * h;
    gb = g(b);
  }
  if (gb == 0.0) return b;

  double lo = std::min(a, b), hi = std::max(a, b);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx < 0.0)
      lo = x;
    else
      hi = x;
    const double slope = dg(x);
    double next = x - gx / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
    if (std::abs(next - x) <= tol || hi - lo <= tol) return next;
    x = next;
  }
  return x;
}

}  // namespace

double reduce_angle(double x) {
  double t = x - std::floor(x);
  if (t >= 1.0) t = 0.0;
  return t;
}

double wrapped_difference(double a, double b) {
  double d = reduce_angle(a - b);
  if (d > 0.5) d -= 1.0;
  return d;
}

double annulus_distance(const AnnulusPoint& a, const AnnulusPoint& b) {
  return std::hypot(wrapped_difference(a.theta(), b.theta()), a.r() - b.r());
}

GeneratingFunction integrable_family() {
  GeneratingFunction gf;
  gf.name = "integrable";
  gf.k = 0.0;
  gf.S = [](double x, double X) { return 0.5 * (X - x) * (X - x); };
  gf.S1 = [](double x, double X) { return -(X - x); };
  gf.S2 = [](double x, double X) { return X - x; };
  gf.S11 = [](double, double) { return 1.0; };
  gf.S12 = [](double, double) { return -1.0; };
  gf.S22 = [](double, double) { return 1.0; };
  gf.twist_bound = 1.0;
  gf.forward_closed = [](const LiftPoint& p) { return LiftPoint{p.x + p.r, p.r}; };
  gf.backward_closed = [](const LiftPoint& p) { return LiftPoint{p.x - p.r, p.r}; };
  return gf;
}

GeneratingFunction standard_family(double k) {
  GeneratingFunction gf;
  gf.name = "standard";
  gf.k = k;
  const double amp = k / (kTwoPi * kTwoPi);
  const double kick = k / kTwoPi;
  gf.S = [amp](double x, double X) {
    return 0.5 * (X - x) * (X - x) - amp * std::cos(kTwoPi * x);
  };
  gf.S1 = [kick](double x, double X) { return -(X - x) + kick * std::sin(kTwoPi * x); };
  gf.S2 = [](double x, double X) { return X - x; };
  gf.S11 = [k](double x, double) { return 1.0 + k * std::cos(kTwoPi * x); };
  gf.S12 = [](double, double) { return -1.0; };
  gf.S22 = [](double, double) { return 1.0; };
  gf.twist_bound = 1.0;
  gf.forward_closed = [kick](const LiftPoint& p) {
    const double R = p.r + kick * std::sin(kTwoPi * p.x);
    return LiftPoint{p.x + R, R};
  };
  gf.backward_closed = [kick](const LiftPoint& p) {
    const double x = p.x - p.r;
    return LiftPoint{x, p.r - kick * std::sin(kTwoPi * x)};
  };
  return gf;
}

GeneratingFunction make_family(const std::string& name, double k) {
  if (name == "integrable") return integrable_family();
  if (name == "standard") return standard_family(k);
  throw InvalidArgument("map: unknown family '" + name + "' (expected integrable or standard)");
}

void validate_generating_function(const GeneratingFunction& gf) {
  if (!gf.S || !gf.S1 || !gf.S2 || !gf.S11 || !gf.S12 || !gf.S22)
    throw InvalidGeneratingFunction(gf.name + ": missing evaluator");
  if (!(gf.twist_bound > 0.0))
    throw InvalidGeneratingFunction(gf.name + ": twist bound must be positive");

  const double h = 1e-6;
  const double tol = 1e-5;
  auto check = [&](double numeric, double analytic, const char* which, double x, double X) {
    if (std::abs(numeric - analytic) > tol * std::max(1.0, std::abs(analytic))) {
      std::ostringstream msg;
      msg << gf.name << ": " << which << " inconsistent at (" << x << ", " << X
          << "): finite difference " << numeric << " vs " << analytic;
      throw InvalidGeneratingFunction(msg.str());
    }
  };

  const double xs[] = {0.0, 0.13, 0.25, 0.41, 0.5, 0.77, 0.93};
  const double gaps[] = {-1.5, -0.7, -0.1, 0.0, 0.3, 0.9, 1.7};
  for (double x : xs) {
    for (double gap : gaps) {
      const double X = x + gap;
      const double s = gf.S(x, X);
      if (std::abs(gf.S(x + 1.0, X + 1.0) - s) > 1e-12 * std::max(1.0, std::abs(s)))
        throw InvalidGeneratingFunction(gf.name + ": S(x+1, X+1) != S(x, X)");
      if (gf.S12(x, X) > -gf.twist_bound + 1e-12)
        throw InvalidGeneratingFunction(gf.name + ": twist condition S12 <= -eps violated");
      check((gf.S(x + h, X) - gf.S(x - h, X)) / (2 * h), gf.S1(x, X), "S1", x, X);
      check((gf.S(x, X + h) - gf.S(x, X - h)) / (2 * h), gf.S2(x, X), "S2", x, X);
      check((gf.S1(x + h, X) - gf.S1(x - h, X)) / (2 * h), gf.S11(x, X), "S11", x, X);
      check((gf.S1(x, X + h) - gf.S1(x, X - h)) / (2 * h), gf.S12(x, X), "S12", x, X);
      check((gf.S2(x + h, X) - gf.S2(x - h, X)) / (2 * h), gf.S12(x, X), "S21", x, X);
      check((gf.S2(x, X + h) - gf.S2(x, X - h)) / (2 * h), gf.S22(x, X), "S22", x, X);
    }
  }
}

GeneratingFunction custom_generating_function(std::string name, GeneratingFunction::Evaluator S,
                                              GeneratingFunction::Evaluator S1,
                                              GeneratingFunction::Evaluator S2,
                                              GeneratingFunction::Evaluator S11,
                                              GeneratingFunction::Evaluator S12,
                                              GeneratingFunction::Evaluator S22,
                                              double twist_bound) {
  GeneratingFunction gf;
  gf.name = std::move(name);
  gf.S = std::move(S);
  gf.S1 = std::move(S1);
  gf.S2 = std::move(S2);
  gf.S11 = std::move(S11);
  gf.S12 = std::move(S12);
  gf.S22 = std::move(S22);
  gf.twist_bound = twist_bound;
  validate_generating_function(gf);
  return gf;
}

LiftPoint forward_implicit(const GeneratingFunction& gf, const LiftPoint& p) {
  // -S1(x, .) - r is increasing with slope -S12 >= eps.
  const double x = p.x;
  auto g = [&](double X) { return -gf.S1(x, X) - p.r; };
  auto dg = [&](double X) { return -gf.S12(x, X); };
  const double X = solve_monotone(g, dg, x + p.r, gf.twist_bound, "forward");
  return {X, gf.S2(x, X)};
}

LiftPoint backward_implicit(const GeneratingFunction& gf, const LiftPoint& p) {
  // S2(., X) - R is decreasing in x; negate to solve an increasing problem.
  const double X = p.x;
  auto g = [&](double x) { return p.r - gf.S2(x, X); };
  auto dg = [&](double x) { return -gf.S12(x, X); };
  const double x = solve_monotone(g, dg, X - p.r, gf.twist_bound, "backward");
  return {x, -gf.S1(x, X)};
}

LiftPoint forward(const GeneratingFunction& gf, const LiftPoint& p) {
  return gf.forward_closed ? gf.forward_closed(p) : forward_implicit(gf, p);
}

LiftPoint backward(const GeneratingFunction& gf, const LiftPoint& p) {
  return gf.backward_closed ? gf.backward_closed(p) : backward_implicit(gf, p);
}

Tangent2x2 tangent_from_pair(const GeneratingFunction& gf, double x, double X) {
  const double s11 = gf.S11(x, X);
  const double s12 = gf.S12(x, X);
  const double s22 = gf.S22(x, X);
  Tangent2x2 m;
  m << -s11 / s12, -1.0 / s12, s12 - s11 * s22 / s12, -s22 / s12;
  return m;
}

Tangent2x2 tangent(const GeneratingFunction& gf, const LiftPoint& p) {
  return tangent_from_pair(gf, p.x, forward(gf, p).x);
}

std::vector<LiftPoint> orbit(const GeneratingFunction& gf, const LiftPoint& p, long n) {
  const long steps = n < 0 ? -n : n;
  std::vector<LiftPoint> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(p);
  for (long i = 0; i < steps; ++i)
    out.push_back(n >= 0 ? forward(gf, out.back()) : backward(gf, out.back()));
  return out;
}

}  // namespace twistlab
