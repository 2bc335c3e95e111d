#include "twistlab/rate_probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace twistlab {

const char* to_string(RateKind k) {
  switch (k) {
    case RateKind::Exponential: return "Exponential";
    case RateKind::SubExponential: return "SubExponential";
    case RateKind::NotConverging: return "NotConverging";
    case RateKind::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

DistanceSeries distance_series(const GeneratingFunction& gf, const LiftPoint& start,
                               const PointCloud& target, long n, std::string target_id) {
  if (n < 32) throw InvalidArgument("distance series needs n >= 32");
  if (target.points.empty()) throw InvalidArgument("distance series target is empty");
  DistanceSeries s;
  s.start = start;
  s.target = std::move(target_id);
  s.d.reserve(static_cast<std::size_t>(n) + 1);
  LiftPoint x = start;
  for (long k = 0; k <= n; ++k) {
    const AnnulusPoint here = project(x);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : target.points) best = std::min(best, annulus_distance(here, t));
    s.d.push_back(best);
    if (k < n) x = forward(gf, x);
  }
  return s;
}

RateVerdict classify_rate(const DistanceSeries& series, std::span<const double> epsilons,
                          const RateOptions& options) {
  const auto& d = series.d;
  const std::size_t n = d.size();
  if (n < 32) throw InvalidArgument("rate classification needs at least 32 entries");
  if (epsilons.empty()) throw InvalidArgument("epsilon grid is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw InvalidArgument("epsilons must be positive");
    if (i > 0 && !(epsilons[i] > epsilons[i - 1])) throw InvalidArgument("epsilons must be increasing");
  }
  std::size_t run = 0, longest = 0;
  for (double v : d) {
    if (v < 0.0 || !std::isfinite(v)) throw InvalidArgument("distances must be finite and >= 0");
    run = v == 0.0 ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  if (2 * longest > n) {
    std::ostringstream msg;
    msg << "series is identically zero over " << longest << " of " << n
        << " entries: the orbit reached the sampled target in finite time";
    throw DegenerateSeries(msg.str());
  }

  std::vector<double> logd(n);
  for (std::size_t i = 0; i < n; ++i) logd[i] = std::log(std::max(d[i], 1e-300));

  RateVerdict v;
  v.window = std::max<std::size_t>(1, static_cast<std::size_t>(options.window_fraction * n));
  v.fit_length = std::max<std::size_t>(2, static_cast<std::size_t>(options.fit_fraction * n));

  // Least squares on (index, log d) over the tail.
  {
    const std::size_t from = n - v.fit_length;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = from; i < n; ++i) {
      const double x = static_cast<double>(i);
      sx += x;
      sy += logd[i];
      sxx += x * x;
      sxy += x * logd[i];
    }
    const double m = static_cast<double>(v.fit_length);
    v.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }

  const std::size_t last_from = n - v.window;
  const double first_min = *std::min_element(d.begin(), d.begin() + v.window);
  const double last_max = *std::max_element(d.begin() + last_from, d.end());
  v.tends_to_zero = last_max < first_min;

  bool some_small = false, all_large = true;
  for (double eps : epsilons) {
    double first_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.window; ++i) first_max = std::max(first_max, eps * i + logd[i]);
    double last_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = last_from; i < n; ++i) last_min = std::min(last_min, eps * i + logd[i]);
    const double stat = last_min - first_max;
    v.table.push_back({eps, stat});
    if (stat < std::log(options.exponential_threshold)) some_small = true;
    if (!(stat > std::log(options.divergence_threshold))) all_large = false;
  }

  if (!v.tends_to_zero) {
    v.kind = RateKind::NotConverging;
  } else if (some_small && v.slope < 0.0) {
    v.kind = RateKind::Exponential;
    v.rate = -v.slope;
  } else if (all_large) {
    v.kind = RateKind::SubExponential;
  } else {
    v.kind = RateKind::Inconclusive;
  }
  return v;
}

}  // namespace twistlab
