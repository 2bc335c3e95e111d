#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "twistlab/action_solver.hpp"
#include "twistlab/cli.hpp"
#include "twistlab/greene.hpp"
#include "twistlab/map_core.hpp"
#include "twistlab/rate_probe.hpp"
#include "twistlab/regularity.hpp"
#include "twistlab/spectral.hpp"

using namespace twistlab;

namespace {

const double kSqrt5 = std::sqrt(5.0);

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;
std::map<int, std::string> lines;

void criterion(int id, const char* name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s) {
    o.pass = false;
    o.detail << " [over budget " << budget_s << " s]";
  }
  if (!o.pass) ++failures;
  char head[160];
  std::snprintf(head, sizeof head, "%s %2d %s (%.2f s)", o.pass ? "PASS" : "FAIL", id, name, secs);
  lines[id] = head + o.detail.str();
}

// Per-step defect of the orbit built from a configuration, plus the direct
// F^q closure when the orbit is short.
double closure_defect(const GeneratingFunction& gf, const Configuration& c, bool direct) {
  const auto pts = configuration_to_orbit(gf, c);
  double worst = 0.0;
  for (int j = 0; j < c.q; ++j) {
    const LiftPoint img = forward(gf, pts[j]);
    const LiftPoint next = j + 1 < c.q ? pts[j + 1] : LiftPoint{pts[0].x + c.p, pts[0].r};
    worst = std::max(worst, std::hypot(img.x - next.x, img.r - next.r));
  }
  if (direct) {
    LiftPoint x = pts[0];
    for (int j = 0; j < c.q; ++j) x = forward(gf, x);
    worst = std::max(worst, std::hypot(x.x - pts[0].x - c.p, x.r - pts[0].r));
  }
  return worst;
}

bool nested(const GeneratingFunction& gf, const Configuration& c, int index, int depth) {
  auto prev = green_slopes_periodic(gf, c, index, 1);
  for (int n = 2; n <= depth; ++n) {
    const auto g = green_slopes_periodic(gf, c, index, n);
    if (g.s_minus.is_vertical() || g.s_plus.is_vertical()) return false;
    const double lo = g.s_minus.value(), hi = g.s_plus.value();
    const double tol = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
    if (lo > hi + tol) return false;
    if (!prev.s_minus.is_vertical() && lo < prev.s_minus.value() - tol) return false;
    if (!prev.s_plus.is_vertical() && hi > prev.s_plus.value() + tol) return false;
    prev = g;
  }
  return true;
}

std::string run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "twistlab");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return std::to_string(code) + "\n" + out.str() + err.str();
}

}  // namespace

int main() {
  std::vector<Configuration> accepted;
  std::vector<const GeneratingFunction*> accepted_gf;
  const auto integrable = integrable_family();
  const auto k1 = standard_family(1.0);
  const auto k05 = standard_family(0.5);
  const auto k2 = standard_family(2.0);

  criterion(1, "symplecticity", 1.0, [&](Outcome& o) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> th(0.0, 1.0), rr(-2.0, 2.0);
    double worst = 0.0;
    for (double k : {0.0, 0.5, 1.0, 2.0}) {
      const auto gf = standard_family(k);
      for (int i = 0; i < 10000; ++i)
        worst = std::max(worst, std::abs(tangent(gf, {th(rng), rr(rng)}).determinant() - 1.0));
    }
    o.detail << " max|det-1|=" << worst;
    o.require(worst <= 1e-12, "det");
  });

  criterion(2, "integrable oracle", 1.0, [&](Outcome& o) {
    double worst = 0.0;
    for (auto [p, q] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {1, 3}, {2, 5}}) {
      const auto m = minimize_periodic(integrable, p, q);
      const auto& c = m.config;
      for (int j = 0; j < q; ++j) worst = std::max(worst, std::abs(c.theta(j + 1) - c.theta(j) - double(p) / q));
      o.require(std::abs(m.report.value - double(p * p) / (2.0 * q)) <= 1e-10, "action");
      const auto rec = residue(monodromy(integrable, c), p, q);
      o.require(std::abs(rec.trace - 2.0) <= 1e-12, "trace");
      o.require(std::abs(rec.residue) <= 1e-12 && std::abs(rec.mean_residue) <= 1e-12, "residue");
      accepted.push_back(c);
      accepted_gf.push_back(&integrable);
    }
    o.detail << " max spacing error=" << worst;
    o.require(worst <= 1e-10, "spacing");
  });

  criterion(3, "fixed-point spectral oracle", 0.0, [&](Outcome& o) {
    const auto m = minimize_periodic(k1, 0, 1);
    const double th = reduce_angle(m.config.thetas(0));
    o.require(std::min(th, 1.0 - th) <= 1e-9, "theta");
    const auto rec = residue(monodromy(k1, m.config), 0, 1);
    const double lam = (3.0 + kSqrt5) / 2.0;
    o.require(std::abs(rec.trace - 3.0) <= 1e-9, "trace");
    o.require(std::abs(rec.residue + 0.25) <= 1e-12, "residue");
    o.require(rec.lambda_max && std::abs(*rec.lambda_max - lam) <= 1e-9, "lambda_max");
    const double ly = lyapunov_exponent(k1, {0.0, 0.0}, 1000);
    o.detail << " trace=" << rec.trace << " lyapunov=" << ly;
    o.require(std::abs(ly - std::log(lam)) <= 1e-6, "lyapunov");
    accepted.push_back(m.config);
    accepted_gf.push_back(&k1);
  });

  criterion(4, "brute-force equivalence", 30.0, [&](Outcome& o) {
    double worst = 0.0;
    for (double k : {0.5, 1.0, 2.0})
      for (auto [p, q] : std::vector<std::pair<int, int>>{{0, 1}, {1, 1}, {1, 2}, {1, 3}, {2, 3}}) {
        const auto m = minimize_periodic(standard_family(k), p, q);
        auto g = oracle::grid_minimize(k, p, q, 1000);
        g.thetas = oracle::polish(k, p, g.thetas);
        const double ref = oracle::periodic_action({k}, p, g.thetas);
        worst = std::max(worst, std::abs(m.report.value - ref));
        o.require(m.report.value <= ref + 1e-6, "solver above grid");
      }
    o.detail << " max|action diff|=" << worst;
    o.require(worst <= 1e-6, "action");
  });

  GreeneReport strong, weak;
  GreeneOptions through89;
  through89.q_max = 89;

  criterion(8, "Greene verdict, breakup regime", 120.0, [&](Outcome& o) {
    strong = greene_scan(k2, golden_target(12), through89);
    const double sigma = tail_min_mean_residue(strong);
    o.detail << " q_max=" << strong.records.back().q << " verdict=" << to_string(strong.verdict)
             << " sigma=" << sigma;
    o.require(strong.records.back().q == 89, "q_max");
    o.require(strong.failed.empty(), "failed convergents");
    o.require(strong.verdict == Verdict::NoInvariantCurve, "verdict");
    o.require(sigma > 1.0 && eigenvalue_bound_check(strong, sigma), "eigenvalue bound");
    for (std::size_t i = 0; i < strong.records.size() && strong.records[i].q <= 3; ++i) {
      const auto& c = strong.minimizers[i];
      auto g = oracle::grid_minimize(2.0, c.p, c.q, 400);
      g.thetas = oracle::polish(2.0, c.p, g.thetas);
      o.require(std::abs(action(k2, c) - oracle::periodic_action({2.0}, c.p, g.thetas)) <= 1e-6, "grid cross-check");
    }
  });

  criterion(9, "Greene verdict, KAM regime", 120.0, [&](Outcome& o) {
    weak = greene_scan(k05, golden_target(12), through89);
    double tail_max = 0.0;
    for (std::size_t i = weak.records.size() - 3; i < weak.records.size(); ++i)
      tail_max = std::max(tail_max, weak.records[i].mean_residue);
    const auto pts = configuration_to_orbit(k05, weak.minimizers.back());
    const double ly = lyapunov_exponent(k05, pts[0], 100000);
    o.detail << " verdict=" << to_string(weak.verdict) << " tail max=" << tail_max << " lyapunov=" << ly;
    o.require(weak.failed.empty(), "failed convergents");
    o.require(weak.verdict == Verdict::ConsistentWithCurve, "verdict");
    o.require(std::abs(ly) <= 0.02, "lyapunov");
  });

  for (const auto* rep : {&strong, &weak})
    for (const auto& c : rep->minimizers) {
      accepted.push_back(c);
      accepted_gf.push_back(rep == &strong ? &k2 : &k05);
    }

  criterion(5, "orbit closure", 0.0, [&](Outcome& o) {
    double defect = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      const auto& c = accepted[i];
      defect = std::max(defect, closure_defect(*accepted_gf[i], c, c.q <= 8));
      grad = std::max(grad, action_gradient(*accepted_gf[i], c).lpNorm<Eigen::Infinity>());
    }
    o.detail << " minimizers=" << accepted.size() << " max closure=" << defect << " max EL residual=" << grad;
    o.require(defect < 1e-7, "closure");
    o.require(grad < 1e-10, "Euler-Lagrange");
  });

  criterion(6, "positive eigenvalue", 0.0, [&](Outcome& o) {
    double lowest = INFINITY;
    for (const auto* rep : {&strong, &weak})
      for (const auto& r : rep->records) lowest = std::min(lowest, r.trace);
    o.detail << " min trace=" << lowest;
    o.require(lowest >= 2.0 - 1e-8, "trace");
  });

  criterion(7, "Green bundles", 0.0, [&](Outcome& o) {
    const auto fp = minimize_periodic(k1, 0, 1).config;
    const auto g = green_slopes_periodic(k1, fp, 0, 30);
    o.require(!g.s_plus.is_vertical() && std::abs(g.s_plus.value() - (kSqrt5 - 1.0) / 2.0) <= 1e-6, "s_plus");
    o.require(!g.s_minus.is_vertical() && std::abs(g.s_minus.value() + (1.0 + kSqrt5) / 2.0) <= 1e-6, "s_minus");
    double worst = 0.0;
    for (int n : {1, 2, 10, 100, 1000}) {
      const auto gi = green_slopes(integrable, {0.3, 0.2}, n);
      worst = std::max({worst, std::abs(gi.s_plus.value() - 1.0 / n), std::abs(gi.s_minus.value() + 1.0 / n)});
    }
    o.require(worst <= 1e-12, "integrable");
    int checked = 0;
    for (std::size_t i = 0; i < accepted.size(); ++i)
      for (int j = 0; j < accepted[i].q; j += std::max(1, accepted[i].q / 5)) {
        ++checked;
        if (!nested(*accepted_gf[i], accepted[i], j, 30)) {
          o.require(false, "nesting at q=" + std::to_string(accepted[i].q));
          break;
        }
      }
    o.detail << " s+=" << g.s_plus.value() << " s-=" << g.s_minus.value() << " integrable err=" << worst
             << " nesting points=" << checked;
  });

  criterion(10, "regularity contrast", 0.0, [&](Outcome& o) {
    std::vector<AnnulusPoint> sine;
    for (int i = 0; i < 400; ++i) sine.emplace_back(i / 400.0, 0.1 * std::sin(2.0 * M_PI * i / 400.0));
    const auto deltas = default_deltas();
    const double smallest = deltas.back();
    const double smooth = median_spread(spread_at_all_bases(curve_sample_cloud(sine), deltas), smallest);

    auto cloud_of = [](const GreeneReport& rep, const GeneratingFunction& gf) {
      std::vector<Configuration> orbits;
      for (const auto& c : rep.minimizers)
        if (c.q == 34 || c.q == 55 || c.q == 89) orbits.push_back(c);
      return periodic_orbit_cloud(gf, orbits);
    };
    const auto c2 = cloud_of(strong, k2);
    const auto c05 = cloud_of(weak, k05);
    const double broken = median_spread(spread_at_all_bases(c2, deltas), smallest);
    auto gap_median = [](const std::vector<GreenGap>& prof) {
      std::vector<double> v;
      for (const auto& g : prof) v.push_back(g.gap);
      return median(v);
    };
    const double gap05 = gap_median(green_gap_profile(k05, c05, 200));
    const double gap2 = gap_median(green_gap_profile(k2, c2, 200));
    o.detail << " smooth spread=" << smooth << " k=2 spread=" << broken << " k=0.5 gap=" << gap05
             << " k=2 gap=" << gap2;
    o.require(c2.points.size() == 178 && c05.points.size() == 178, "cloud size");
    o.require(smooth < 0.1, "smooth spread");
    o.require(broken > 0.2, "k=2 spread");
    o.require(gap05 < 0.1, "k=0.5 gap");
    o.require(gap2 > 0.5, "k=2 gap");
  });

  criterion(11, "rate classifier", 0.0, [&](Outcome& o) {
    const std::vector<double> eps{0.1, 0.3, 0.5};
    auto series = [](const std::function<double(double)>& f, double c) {
      DistanceSeries s;
      for (int n = 0; n <= 1000; ++n) s.d.push_back(c * f(n));
      return s;
    };
    const std::vector<std::pair<std::function<double(double)>, RateKind>> cases{
        {[](double n) { return std::ldexp(1.0, -int(n)); }, RateKind::Exponential},
        {[](double n) { return 1.0 / (n + 1.0); }, RateKind::SubExponential},
        {[](double n) { return std::pow(n + 1.0, -2.0); }, RateKind::SubExponential},
        {[](double n) { return 0.5 + 0.1 * std::sin(n); }, RateKind::NotConverging}};
    for (const auto& [f, kind] : cases)
      for (double c : {1.0, 1e-6, 1e6}) {
        const auto v = classify_rate(series(f, c), eps);
        o.require(v.kind == kind, std::string("kind ") + to_string(v.kind));
        if (kind == RateKind::Exponential) {
          o.require(std::abs(v.rate / std::log(2.0) - 1.0) <= 0.05, "rate");
          if (c == 1.0) o.detail << " 2^-n rate=" << v.rate;
        }
      }
  });

  criterion(12, "determinism", 0.0, [&](Outcome& o) {
    const std::vector<std::string> greene{"greene", "--k", "2", "--qmax", "89", "--seed", "7"};
    const std::vector<std::string> sweep{"sweep", "--ks", "0.5,1,2", "--omega", "golden", "--levels", "12",
                                         "--qmax", "55", "--seed", "7"};
    for (const auto& base : {greene, sweep}) {
      std::vector<std::string> outs;
      for (const char* t : {"1", "8", "1", "8"}) {
        auto args = base;
        args.insert(args.end(), {"--threads", t});
        outs.push_back(run_cli(args));
      }
      o.require(outs[0].rfind("0\n", 0) == 0, base[0] + " exit code");
      for (const auto& s : outs) o.require(s == outs[0], base[0] + " output differs");
      o.detail << " " << base[0] << " bytes=" << outs[0].size();
    }
  });

  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%s: %d of 12 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
