#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "twistlab/action_solver.hpp"
#include "twistlab/greene.hpp"
#include "twistlab/rate_probe.hpp"
#include "twistlab/regularity.hpp"
#include "twistlab/spectral.hpp"

namespace twistlab {

/// %.17g; infinities print as "inf" / "-inf".
std::string format_double(double v);

// CSV: comma separated, header row, LF line endings.
void write_configuration_csv(std::ostream& os, const GeneratingFunction& gf, const Configuration& c);
void write_records_csv(std::ostream& os, std::span<const ResidueRecord> records);
void write_spread_csv(std::ostream& os, std::span<const SlopeSpread> records);
void write_gap_csv(std::ostream& os, std::span<const GreenGap> gaps);
void write_series_csv(std::ostream& os, const DistanceSeries& series);
void write_orbit_csv(std::ostream& os, std::span<const LiftPoint> points);

nlohmann::ordered_json to_json(const ResidueRecord& r);
nlohmann::ordered_json to_json(const GreeneReport& report);
nlohmann::ordered_json to_json(const RateVerdict& v);
nlohmann::ordered_json to_json(const GreenPair& g);

}  // namespace twistlab
