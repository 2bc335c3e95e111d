#pragma once

#include <span>
#include <vector>

#include "twistlab/action_solver.hpp"
#include "twistlab/map_core.hpp"
#include "twistlab/spectral.hpp"

namespace twistlab {

enum class Provenance { OrbitSample, PeriodicOrbitUnion, CurveSample };

const char* to_string(Provenance p);

/// Finite sample of an invariant set. Clouds built from periodic orbits keep
/// the configurations so that Green slopes can cycle the exact orbit.
struct PointCloud {
  std::vector<AnnulusPoint> points;
  Provenance provenance = Provenance::CurveSample;
  std::vector<Configuration> orbits;
  /// For PeriodicOrbitUnion: (orbit index, position in orbit) per point.
  std::vector<std::pair<int, int>> membership;
};

PointCloud periodic_orbit_cloud(const GeneratingFunction& gf, std::span<const Configuration> orbits);
PointCloud orbit_sample_cloud(std::span<const LiftPoint> orbit);
PointCloud curve_sample_cloud(std::vector<AnnulusPoint> points);

struct SlopeSpread {
  AnnulusPoint base;
  double delta = 0.0;
  double slope_min = 0.0;
  double slope_max = 0.0;
  long pair_count = 0;

  double spread() const { return slope_max - slope_min; }
};

/// 0.1 * 2^-i for i = 0..4.
std::vector<double> default_deltas();

/// Largest |dr| / circle distance over all pairs. Throws GraphViolation when
/// two points share an angle (within 1e-12) but not the fiber coordinate.
double lipschitz_graph_check(const PointCloud& cloud);

/// Secant slopes between points of the cloud within `delta` of `base`, one
/// record per delta that has at least one pair.
std::vector<SlopeSpread> paratangent_spread(const PointCloud& cloud, const AnnulusPoint& base,
                                            std::span<const double> deltas);

/// paratangent_spread at every cloud point, ordered by base angle.
std::vector<SlopeSpread> spread_at_all_bases(const PointCloud& cloud, std::span<const double> deltas);

/// Median spread among the records taken at `delta`; NaN when there are none.
double median_spread(std::span<const SlopeSpread> records, double delta);

struct GreenGap {
  AnnulusPoint point;
  double gap = 0.0;  // +infinity when a slope is vertical
};

/// s_plus - s_minus at depth n for every point, ordered by angle.
/// Requires a cloud made of minimizing orbits.
std::vector<GreenGap> green_gap_profile(const GeneratingFunction& gf, const PointCloud& cloud, int n);

/// Median of a sample; NaN for an empty one.
double median(std::vector<double> values);

/// Linear-interpolated quantile in [0, 1]; NaN for an empty sample.
double quantile(std::vector<double> values, double level);

}  // namespace twistlab
