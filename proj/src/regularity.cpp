#include "twistlab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace twistlab {

namespace {

constexpr double kSameAngle = 1e-12;

std::vector<std::size_t> order_by_angle(const std::vector<AnnulusPoint>& pts) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].theta() != pts[b].theta()) return pts[a].theta() < pts[b].theta();
    return pts[a].r() < pts[b].r();
  });
  return idx;
}

}  // namespace

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::OrbitSample: return "orbit-sample";
    case Provenance::PeriodicOrbitUnion: return "periodic-orbit-union";
    case Provenance::CurveSample: return "curve-sample";
  }
  return "curve-sample";
}

PointCloud periodic_orbit_cloud(const GeneratingFunction& gf, std::span<const Configuration> orbits) {
  PointCloud cloud;
  cloud.provenance = Provenance::PeriodicOrbitUnion;
  cloud.orbits.assign(orbits.begin(), orbits.end());
  for (std::size_t o = 0; o < orbits.size(); ++o) {
    const auto pts = configuration_to_orbit(gf, orbits[o]);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      cloud.points.push_back(project(pts[j]));
      cloud.membership.emplace_back(static_cast<int>(o), static_cast<int>(j));
    }
  }
  return cloud;
}

PointCloud orbit_sample_cloud(std::span<const LiftPoint> orbit) {
  PointCloud cloud;
  cloud.provenance = Provenance::OrbitSample;
  for (const auto& p : orbit) cloud.points.push_back(project(p));
  return cloud;
}

PointCloud curve_sample_cloud(std::vector<AnnulusPoint> points) {
  PointCloud cloud;
  cloud.provenance = Provenance::CurveSample;
  cloud.points = std::move(points);
  return cloud;
}

std::vector<double> default_deltas() {
  std::vector<double> d;
  for (int i = 0; i <= 4; ++i) d.push_back(0.1 * std::ldexp(1.0, -i));
  return d;
}

double lipschitz_graph_check(const PointCloud& cloud) {
  const auto& pts = cloud.points;
  if (pts.size() < 2) throw InvalidArgument("lipschitz check needs at least two points");
  double lip = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dtheta = circle_distance(pts[i].theta(), pts[j].theta());
      const double dr = std::abs(pts[i].r() - pts[j].r());
      if (dtheta <= kSameAngle) {
        if (dr > 1e-9) {
          std::ostringstream msg;
          msg << "points " << i << " and " << j << " share theta " << pts[i].theta()
              << " with r " << pts[i].r() << " vs " << pts[j].r();
          throw GraphViolation(msg.str());
        }
        continue;
      }
      lip = std::max(lip, dr / dtheta);
    }
  }
  return lip;
}

std::vector<SlopeSpread> paratangent_spread(const PointCloud& cloud, const AnnulusPoint& base,
                                            std::span<const double> deltas) {
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw InvalidArgument("deltas must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw InvalidArgument("deltas must be decreasing");
  }
  const bool member = std::any_of(cloud.points.begin(), cloud.points.end(), [&](const AnnulusPoint& p) {
    return circle_distance(p.theta(), base.theta()) <= kSameAngle && std::abs(p.r() - base.r()) <= 1e-9;
  });
  if (!member) throw InvalidArgument("paratangent base is not a point of the cloud");

  std::vector<SlopeSpread> out;
  if (deltas.empty()) return out;
  // Candidates within the largest delta; each smaller ball is a subset.
  std::vector<std::pair<double, AnnulusPoint>> near;
  for (const auto& p : cloud.points) {
    const double d = annulus_distance(p, base);
    if (d <= deltas.front()) near.emplace_back(d, p);
  }
  for (double delta : deltas) {
    SlopeSpread rec;
    rec.base = base;
    rec.delta = delta;
    rec.slope_min = std::numeric_limits<double>::infinity();
    rec.slope_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < near.size(); ++i) {
      if (near[i].first > delta) continue;
      for (std::size_t j = i + 1; j < near.size(); ++j) {
        if (near[j].first > delta) continue;
        const auto& a = near[i].second;
        const auto& b = near[j].second;
        const double dtheta = wrapped_difference(a.theta(), b.theta());
        if (std::abs(dtheta) <= kSameAngle) continue;
        const double s = (a.r() - b.r()) / dtheta;
        rec.slope_min = std::min(rec.slope_min, s);
        rec.slope_max = std::max(rec.slope_max, s);
        ++rec.pair_count;
      }
    }
    if (rec.pair_count > 0) out.push_back(rec);
  }
  return out;
}

std::vector<SlopeSpread> spread_at_all_bases(const PointCloud& cloud, std::span<const double> deltas) {
  std::vector<SlopeSpread> out;
  for (std::size_t i : order_by_angle(cloud.points)) {
    auto recs = paratangent_spread(cloud, cloud.points[i], deltas);
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double quantile(std::vector<double> values, double level) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = level * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0) return values[lo];
  return (1.0 - w) * values[lo] + w * values[hi];
}

double median_spread(std::span<const SlopeSpread> records, double delta) {
  std::vector<double> v;
  for (const auto& r : records)
    if (r.delta == delta) v.push_back(r.spread());
  return median(std::move(v));
}

std::vector<GreenGap> green_gap_profile(const GeneratingFunction& gf, const PointCloud& cloud, int n) {
  if (cloud.provenance == Provenance::CurveSample)
    throw InvalidArgument("green gap profile needs a cloud of minimizing orbits, got a curve sample");
  std::vector<GreenGap> out;
  for (std::size_t i : order_by_angle(cloud.points)) {
    GreenPair pair;
    if (cloud.provenance == Provenance::PeriodicOrbitUnion) {
      const auto [o, j] = cloud.membership.at(i);
      pair = green_slopes_periodic(gf, cloud.orbits.at(o), j, n);
    } else {
      pair = green_slopes(gf, lift(cloud.points[i]), n);
    }
    out.push_back({cloud.points[i], pair.width()});
  }
  return out;
}

}  // namespace twistlab
