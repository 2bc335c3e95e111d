#pragma once

#include <span>
#include <string>
#include <vector>

#include "twistlab/map_core.hpp"
#include "twistlab/regularity.hpp"

namespace twistlab {

/// d_k = distance from f^k(start) to a target set, k = 0..n.
struct DistanceSeries {
  std::vector<double> d;
  LiftPoint start;
  std::string target;
};

DistanceSeries distance_series(const GeneratingFunction& gf, const LiftPoint& start,
                               const PointCloud& target, long n, std::string target_id = "cloud");

enum class RateKind { Exponential, SubExponential, NotConverging, Inconclusive };

const char* to_string(RateKind k);

struct RateOptions {
  double window_fraction = 0.25;     // first / last window length
  double fit_fraction = 0.5;         // tail used by the log-slope fit
  double divergence_threshold = 10.0;
  double exponential_threshold = 0.1;
};

struct EpsilonRow {
  double epsilon = 0.0;
  /// log of min_{last}(e^{eps n} d_n) / max_{first}(e^{eps n} d_n).
  double log_statistic = 0.0;
};

struct RateVerdict {
  RateKind kind = RateKind::Inconclusive;
  double rate = 0.0;   // -slope when Exponential, 0 otherwise
  double slope = 0.0;  // least-squares slope of log d_n over the fit tail
  bool tends_to_zero = false;
  std::size_t window = 0;
  std::size_t fit_length = 0;
  std::vector<EpsilonRow> table;
};

/// Ratio tests on e^{eps n} d_n over first/last windows plus a log-slope
/// fit. Needs at least 32 entries and positive increasing epsilons; throws
/// DegenerateSeries when a run of zeros covers more than half the series.
RateVerdict classify_rate(const DistanceSeries& series, std::span<const double> epsilons,
                          const RateOptions& options = {});

}  // namespace twistlab
