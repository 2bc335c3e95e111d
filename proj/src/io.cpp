#include "twistlab/io.hpp"

#include <cmath>
#include <cstdio>

namespace twistlab {

namespace {

nlohmann::ordered_json slope_json(const ProjectiveSlope& s) {
  if (s.is_vertical()) return "vertical";
  return s.value();
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  if (v == 0.0) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_configuration_csv(std::ostream& os, const GeneratingFunction& gf, const Configuration& c) {
  os << "j,theta,r\n";
  for (long j = 0; j < c.q; ++j) {
    const double r = -gf.S1(c.theta(j), c.theta(j + 1));
    os << j << ',' << format_double(c.theta(j)) << ',' << format_double(r) << '\n';
  }
}

void write_records_csv(std::ostream& os, std::span<const ResidueRecord> records) {
  os << "p,q,trace,residue,mean_residue,lambda_max\n";
  for (const auto& r : records) {
    os << r.p << ',' << r.q << ',' << format_double(r.trace) << ',' << format_double(r.residue) << ','
       << format_double(r.mean_residue) << ',' << (r.lambda_max ? format_double(*r.lambda_max) : "")
       << '\n';
  }
}

void write_spread_csv(std::ostream& os, std::span<const SlopeSpread> records) {
  os << "base_theta,base_r,delta,slope_min,slope_max,pair_count\n";
  for (const auto& r : records) {
    os << format_double(r.base.theta()) << ',' << format_double(r.base.r()) << ','
       << format_double(r.delta) << ',' << format_double(r.slope_min) << ','
       << format_double(r.slope_max) << ',' << r.pair_count << '\n';
  }
}

void write_gap_csv(std::ostream& os, std::span<const GreenGap> gaps) {
  os << "theta,r,green_gap\n";
  for (const auto& g : gaps)
    os << format_double(g.point.theta()) << ',' << format_double(g.point.r()) << ','
       << format_double(g.gap) << '\n';
}

void write_series_csv(std::ostream& os, const DistanceSeries& series) {
  os << "n,d_n\n";
  for (std::size_t i = 0; i < series.d.size(); ++i) os << i << ',' << format_double(series.d[i]) << '\n';
}

void write_orbit_csv(std::ostream& os, std::span<const LiftPoint> points) {
  os << "n,theta,r\n";
  for (std::size_t i = 0; i < points.size(); ++i)
    os << i << ',' << format_double(points[i].x) << ',' << format_double(points[i].r) << '\n';
}

nlohmann::ordered_json to_json(const ResidueRecord& r) {
  nlohmann::ordered_json j;
  j["p"] = r.p;
  j["q"] = r.q;
  j["trace"] = r.trace;
  j["residue"] = r.residue;
  j["mean_residue"] = r.mean_residue;
  j["lambda_max"] = r.lambda_max ? nlohmann::ordered_json(*r.lambda_max) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json to_json(const GreeneReport& report) {
  nlohmann::ordered_json j;
  j["map"] = report.map;
  j["k"] = report.k;
  j["omega_cf"] = report.target.cf;
  j["omega"] = report.target.omega;
  j["sigma"] = report.sigma;
  j["margin"] = report.margin;
  j["tail_window"] = report.tail_window;
  auto records = nlohmann::ordered_json::array();
  for (const auto& r : report.records) records.push_back(to_json(r));
  j["records"] = std::move(records);
  j["failed"] = report.failed;
  j["verdict"] = to_string(report.verdict);
  j["verdict_basis"] = report.verdict_basis;
  return j;
}

nlohmann::ordered_json to_json(const RateVerdict& v) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(v.kind);
  j["rate"] = v.rate;
  j["slope"] = v.slope;
  auto table = nlohmann::ordered_json::array();
  for (const auto& row : v.table) {
    nlohmann::ordered_json r;
    r["epsilon"] = row.epsilon;
    r["log_statistic"] = row.log_statistic;
    table.push_back(std::move(r));
  }
  j["epsilon_table"] = std::move(table);
  j["windows"] = {{"first_last", v.window}, {"fit", v.fit_length}};
  j["tends_to_zero"] = v.tends_to_zero;
  return j;
}

nlohmann::ordered_json to_json(const GreenPair& g) {
  nlohmann::ordered_json j;
  j["depth"] = g.depth;
  j["s_minus"] = slope_json(g.s_minus);
  j["s_plus"] = slope_json(g.s_plus);
  const double w = g.width();
  j["width"] = std::isinf(w) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(w);
  return j;
}

}  // namespace twistlab
