#include "twistlab/greene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace twistlab {

namespace {

std::vector<std::pair<long, long>> recurrence(const std::vector<long>& cf, int n) {
  std::vector<std::pair<long, long>> out;
  long p2 = 0, q2 = 1, p1 = 1, q1 = 0;
  for (int i = 0; i < n; ++i) {
    const long p = cf[i] * p1 + p2;
    const long q = cf[i] * q1 + q2;
    out.emplace_back(p, q);
    p2 = p1;
    q2 = q1;
    p1 = p;
    q1 = q;
  }
  return out;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::NoInvariantCurve: return "NoInvariantCurve";
    case Verdict::ConsistentWithCurve: return "ConsistentWithCurve";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

RotationTarget golden_target(int n) {
  if (n < 1) throw InvalidArgument("levels must be >= 1");
  RotationTarget t;
  t.label = "golden";
  t.omega = (std::sqrt(5.0) - 1.0) / 2.0;
  t.cf.assign(n, 1);
  t.cf[0] = 0;
  t.convergents = recurrence(t.cf, n);
  return t;
}

RotationTarget convergents_from_cf(std::vector<long> cf, int n) {
  if (n < 1) throw InvalidArgument("levels must be >= 1");
  if (cf.empty()) throw InvalidArgument("continued fraction is empty");
  for (std::size_t i = 1; i < cf.size(); ++i)
    if (cf[i] < 1) throw InvalidArgument("partial quotients after a_0 must be positive");
  if (static_cast<int>(cf.size()) < n) {
    std::ostringstream msg;
    msg << "continued fraction terminates after " << cf.size() << " terms, " << n
        << " convergents requested";
    throw RationalTarget(msg.str());
  }
  RotationTarget t;
  t.label = "cf";
  t.cf = std::move(cf);
  t.convergents = recurrence(t.cf, n);
  // Value of the finite expansion.
  double v = static_cast<double>(t.cf.back());
  for (auto it = t.cf.rbegin() + 1; it != t.cf.rend(); ++it) v = static_cast<double>(*it) + 1.0 / v;
  t.omega = v;
  return t;
}

RotationTarget convergents_from_omega(double omega, int n) {
  if (n < 1) throw InvalidArgument("levels must be >= 1");
  if (!std::isfinite(omega)) throw InvalidArgument("omega must be finite");
  RotationTarget t;
  t.label = "omega";
  t.omega = omega;
  double x = omega;
  for (int i = 0; i < n; ++i) {
    const double a = std::floor(x);
    t.cf.push_back(static_cast<long>(a));
    const double frac = x - a;
    if (i + 1 < n) {
      if (frac < 1e-12) {
        std::ostringstream msg;
        msg << "omega " << omega << " is rational at convergent " << i;
        throw RationalTarget(msg.str());
      }
      x = 1.0 / frac;
    }
  }
  t.convergents = recurrence(t.cf, n);
  for (const auto& [p, q] : t.convergents) {
    if (std::abs(omega - static_cast<double>(p) / q) < 1e-12) {
      std::ostringstream msg;
      msg << "omega " << omega << " is within 1e-12 of " << p << "/" << q;
      throw RationalTarget(msg.str());
    }
  }
  return t;
}

Verdict tail_verdict(const std::vector<ResidueRecord>& records, double margin, int tail_window) {
  if (tail_window < 1 || static_cast<int>(records.size()) < tail_window)
    return Verdict::Inconclusive;
  const auto first = records.end() - tail_window;
  const bool any_above = std::any_of(first, records.end(), [&](const ResidueRecord& r) {
    return r.mean_residue > 1.0 + margin;
  });
  if (any_above) return Verdict::NoInvariantCurve;
  const bool all_below = std::all_of(first, records.end(), [&](const ResidueRecord& r) {
    return r.mean_residue < 1.0 - margin;
  });
  return all_below ? Verdict::ConsistentWithCurve : Verdict::Inconclusive;
}

GreeneReport greene_scan(const GeneratingFunction& gf, const RotationTarget& target,
                         const GreeneOptions& options) {
  if (!(options.sigma > 1.0)) throw InvalidArgument("sigma must be > 1");
  if (!(options.margin >= 0.0)) throw InvalidArgument("margin must be >= 0");
  if (options.tail_window < 1) throw InvalidArgument("tail_window must be >= 1");

  GreeneReport report;
  report.map = gf.name;
  report.k = gf.k;
  report.target = target;
  report.sigma = options.sigma;
  report.margin = options.margin;
  report.tail_window = options.tail_window;

  const long usable = std::count_if(target.convergents.begin(), target.convergents.end(),
                                    [&](const auto& c) { return c.second >= 2 && c.second <= options.q_max; });
  if (usable < options.tail_window) {
    std::ostringstream msg;
    msg << "target has " << usable << " convergents with 2 <= q <= " << options.q_max
        << ", tail_window is " << options.tail_window;
    throw InvalidArgument(msg.str());
  }

  // Convergents run in order so that each can seed the next; the restarts
  // inside each minimization are what gets spread over threads.
  std::optional<Configuration> previous;
  for (const auto& [p, q] : target.convergents) {
    if (q > options.q_max) continue;
    MinimizeOptions mo = options.minimize;
    if (options.continuation && previous)
      mo.extra_seeds.push_back(continuation_seed(*previous, static_cast<int>(p), static_cast<int>(q)));
    try {
      auto result = minimize_periodic(gf, static_cast<int>(p), static_cast<int>(q), mo);
      report.records.push_back(residue(monodromy(gf, result.config), static_cast<int>(p),
                                       static_cast<int>(q)));
      previous = result.config;
      report.minimizers.push_back(std::move(result.config));
    } catch (const NoConvergence& e) {
      report.failed.push_back(q);
      report.failure_messages.emplace_back(e.what());
    }
  }
  report.verdict = tail_verdict(report.records, options.margin, options.tail_window);
  std::ostringstream basis;
  basis << "max/min of mean residues over the last " << options.tail_window
        << " continued-fraction convergents against 1 +/- " << options.margin << "; ";
  switch (report.verdict) {
    case Verdict::NoInvariantCurve:
      basis << "some tail mean residue exceeds 1 + margin (proved direction)";
      break;
    case Verdict::ConsistentWithCurve:
      basis << "all tail mean residues below 1 - margin; heuristic (conjectured direction, not "
               "proved)";
      break;
    case Verdict::Inconclusive:
      basis << "tail mean residues inside the dead band";
      break;
  }
  if (!report.failed.empty()) basis << "; " << report.failed.size() << " convergent(s) failed and were excluded";
  report.verdict_basis = basis.str();
  return report;
}

bool eigenvalue_bound_check(const GreeneReport& report, double sigma) {
  for (const auto& r : report.records) {
    if (r.mean_residue < sigma) continue;
    if (!r.lambda_max) return false;
    const double lam = *r.lambda_max;
    const double bound = std::pow(sigma, r.q);
    if (lam + 1.0 / lam < 4.0 * bound + 2.0 - 1e-6 * bound) return false;
  }
  return true;
}

double tail_min_mean_residue(const GreeneReport& report) {
  const int n = static_cast<int>(report.records.size());
  const int from = std::max(0, n - report.tail_window);
  double m = std::numeric_limits<double>::infinity();
  for (int i = from; i < n; ++i) m = std::min(m, report.records[i].mean_residue);
  return m;
}

}  // namespace twistlab
