#include "twistlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "twistlab/greene.hpp"
#include "twistlab/io.hpp"
#include "twistlab/rate_probe.hpp"
#include "twistlab/regularity.hpp"

namespace twistlab::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ';', ',');
  std::stringstream ss(cleaned);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(field + ": '" + s + "' is not a number");
  }
}

long to_long(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument(field + ": '" + s + "' is not an integer");
  }
}

std::vector<double> parse_doubles(const std::string& text, const std::string& field) {
  std::vector<double> v;
  for (const auto& item : split_list(text)) v.push_back(to_double(item, field));
  return v;
}

std::vector<long> parse_longs(const std::string& text, const std::string& field) {
  std::vector<long> v;
  for (const auto& item : split_list(text)) v.push_back(to_long(item, field));
  return v;
}

unsigned effective_threads(unsigned requested, std::size_t cells) {
  unsigned n = requested;
  if (n == 0) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(std::max<std::size_t>(cells, 1), hw));
  }
  if (const char* cap = std::getenv("TWISTLAB_MAX_THREADS")) {
    const long c = std::strtol(cap, nullptr, 10);
    if (c >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(c));
  }
  return std::max(1u, n);
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  body(os);
  if (!os) throw Error("failed writing '" + path + "'");
}

RotationTarget make_target(const std::string& omega, const std::string& cf, int levels) {
  if (!cf.empty()) return convergents_from_cf(parse_longs(cf, "cf"), levels);
  if (omega == "golden") return golden_target(levels);
  const double w = to_double(omega, "omega");
  if (!(w > 0.0 && w < 1.0)) throw InvalidArgument("omega must lie in (0, 1)");
  return convergents_from_omega(w, levels);
}

ordered_json point_json(const LiftPoint& p) { return ordered_json{{"theta", p.x}, {"r", p.r}}; }

// --- config files --------------------------------------------------------

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  throw InvalidArgument("config: unsupported value " + v.dump());
}

// (flag name, value) pairs from a JSON or TOML document. A section named
// after the command takes precedence over top-level keys.
std::vector<std::pair<std::string, std::string>> load_config(const std::string& path,
                                                             const std::string& command) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("config: cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << is.rdbuf();
  const std::string text = buffer.str();

  std::map<std::string, std::string> top, section;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw InvalidArgument(std::string("config: invalid JSON: ") + e.what());
    }
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (it.value().is_object()) {
        if (it.key() != command) continue;
        for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
          std::string v;
          if (jt.value().is_array()) {
            for (const auto& e : jt.value()) v += (v.empty() ? "" : ",") + json_scalar(e);
          } else {
            v = json_scalar(jt.value());
          }
          section[jt.key()] = v;
        }
        continue;
      }
      std::string v;
      if (it.value().is_array()) {
        for (const auto& e : it.value()) v += (v.empty() ? "" : ",") + json_scalar(e);
      } else {
        v = json_scalar(it.value());
      }
      top[it.key()] = v;
    }
  } else {
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
      items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
      throw InvalidArgument(std::string("config: invalid TOML: ") + e.what());
    }
    for (const auto& item : items) {
      if (item.name == "++" || item.name == "--") continue;
      std::string v;
      for (const auto& in_value : item.inputs) v += (v.empty() ? "" : ",") + in_value;
      if (item.parents.empty())
        top[item.name] = v;
      else if (item.parents.size() == 1 && item.parents[0] == command)
        section[item.name] = v;
    }
  }
  for (const auto& [k, v] : section) top[k] = v;

  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, v] : top) {
    std::string k = key;
    std::replace(k.begin(), k.end(), '_', '-');
    out.emplace_back(k, v);
  }
  return out;
}

// Splices config values into the argument list right after the command,
// skipping any flag the user already gave.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InvalidArgument("--config needs a file name");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::size_t command_at = 0;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (!args[i].empty() && args[i][0] != '-') {
      command_at = i;
      break;
    }
  }
  if (command_at == 0) throw InvalidArgument("--config needs a command");

  auto given = [&](const std::string& flag) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
  };
  std::vector<std::string> injected;
  for (const auto& [key, value] : load_config(path, args[command_at])) {
    const std::string flag = "--" + key;
    if (given(flag)) continue;
    if (value == "true") {
      injected.push_back(flag);
    } else if (value == "false") {
      continue;
    } else {
      injected.push_back(flag);
      injected.push_back(value);
    }
  }
  args.insert(args.begin() + static_cast<long>(command_at) + 1, injected.begin(), injected.end());
  return args;
}

// --- commands ------------------------------------------------------------

struct MapFlags {
  std::string map = "standard";
  double k = 0.0;

  void add(CLI::App* app) {
    app->add_option("--map", map, "Map family: standard or integrable")->capture_default_str();
    app->add_option("--k", k, "Standard map parameter")->capture_default_str();
  }
  GeneratingFunction family() const { return make_family(map, k); }
};

struct SolverFlags {
  int restarts = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--restarts", restarts, "Phase seeds per minimization (0: max(8, q))");
    app->add_option("--seed", seed, "Seed shifting the restart phases");
    app->add_option("--threads", threads, "Worker threads (0: automatic)");
  }
  MinimizeOptions options(std::size_t cells) const {
    if (restarts < 0) throw InvalidArgument("restarts must be >= 0");
    MinimizeOptions o;
    o.restarts = restarts;
    o.seed = seed;
    o.threads = effective_threads(threads, cells);
    return o;
  }
};

int cmd_orbit(const MapFlags& m, double theta, double r, long n, const std::string& csv,
              std::ostream& out) {
  const auto gf = m.family();
  const auto pts = orbit(gf, {theta, r}, n);
  if (!csv.empty()) write_file(csv, [&](std::ostream& os) { write_orbit_csv(os, pts); });
  ordered_json j;
  j["command"] = "orbit";
  j["map"] = gf.name;
  j["k"] = gf.k;
  j["start"] = point_json(pts.front());
  j["n"] = n;
  j["end"] = point_json(pts.back());
  if (pts.size() >= 2) j["rotation_number"] = (pts.back().x - pts.front().x) / static_cast<double>(n);
  out << j.dump(2) << '\n';
  return 0;
}

int cmd_minimize(const MapFlags& m, const SolverFlags& s, int p, int q, const std::string& csv,
                 const std::string& records_csv, std::ostream& out) {
  const auto gf = m.family();
  const auto result = minimize_periodic(gf, p, q, s.options(static_cast<std::size_t>(std::max(8, q))));
  const auto rec = residue(monodromy(gf, result.config), p, q);
  if (!csv.empty())
    write_file(csv, [&](std::ostream& os) { write_configuration_csv(os, gf, result.config); });
  if (!records_csv.empty())
    write_file(records_csv, [&](std::ostream& os) { write_records_csv(os, std::span(&rec, 1)); });

  ordered_json j;
  j["command"] = "minimize";
  j["map"] = gf.name;
  j["k"] = gf.k;
  j["p"] = p;
  j["q"] = q;
  j["action"] = result.report.value;
  j["gradient_inf_norm"] = result.report.gradient_inf_norm;
  j["hessian_min_eig"] = result.report.hessian_min_eig;
  j["restarts_used"] = result.report.restarts_used;
  j["ordered"] = result.report.ordered;
  j["record"] = to_json(rec);
  auto config = ordered_json::array();
  const auto pts = configuration_to_orbit(gf, result.config);
  for (long i = 0; i < q; ++i) config.push_back({{"j", i}, {"theta", pts[i].x}, {"r", pts[i].r}});
  j["configuration"] = std::move(config);
  out << j.dump(2) << '\n';
  return 0;
}

struct GreeneFlags {
  std::string omega = "golden";
  std::string cf;
  int levels = 12;
  double sigma = 1.05;
  double margin = 0.05;
  int tail_window = 3;
  long q_max = 233;
  bool no_continuation = false;
  std::string json_path, csv_path;
};

int cmd_greene(const MapFlags& m, const SolverFlags& s, const GreeneFlags& g, std::ostream& out) {
  const auto gf = m.family();
  const auto target = make_target(g.omega, g.cf, g.levels);
  GreeneOptions o;
  o.sigma = g.sigma;
  o.margin = g.margin;
  o.tail_window = g.tail_window;
  o.q_max = g.q_max;
  o.continuation = !g.no_continuation;
  o.minimize = s.options(static_cast<std::size_t>(std::max<long>(8, g.q_max)));
  const auto report = greene_scan(gf, target, o);
  const std::string text = to_json(report).dump(2) + "\n";
  if (!g.json_path.empty()) write_file(g.json_path, [&](std::ostream& os) { os << text; });
  if (!g.csv_path.empty())
    write_file(g.csv_path, [&](std::ostream& os) { write_records_csv(os, report.records); });
  out << text;
  return 0;
}

int cmd_green_bundles(const MapFlags& m, const SolverFlags& s, double theta, double r, int p, int q,
                      int index, int depth, std::ostream& out) {
  const auto gf = m.family();
  ordered_json j;
  j["command"] = "green-bundles";
  j["map"] = gf.name;
  j["k"] = gf.k;
  GreenPair pair;
  if (q > 0) {
    const auto result = minimize_periodic(gf, p, q, s.options(static_cast<std::size_t>(std::max(8, q))));
    if (index < 0 || index >= q) throw InvalidArgument("index must lie in [0, q)");
    pair = green_slopes_periodic(gf, result.config, index, depth);
    j["center"] = point_json(configuration_to_orbit(gf, result.config)[index]);
  } else {
    pair = green_slopes(gf, {theta, r}, depth);
    j["center"] = point_json({theta, r});
  }
  j["green"] = to_json(pair);
  out << j.dump(2) << '\n';
  return 0;
}

// First point of the minimizing orbit of the largest golden convergent with
// q <= q_max: a start inside the golden-mean region.
LiftPoint golden_region_start(const GeneratingFunction& gf, long q_max, const MinimizeOptions& o) {
  const auto target = golden_target(20);
  std::pair<long, long> best{0, 1};
  for (const auto& c : target.convergents)
    if (c.second <= q_max) best = c;
  const auto result = minimize_periodic(gf, static_cast<int>(best.first), static_cast<int>(best.second), o);
  return configuration_to_orbit(gf, result.config).front();
}

int cmd_lyapunov(const MapFlags& m, const SolverFlags& s, double theta, double r, long n,
                 bool golden_start, long q_max, std::ostream& out) {
  const auto gf = m.family();
  const LiftPoint start = golden_start ? golden_region_start(gf, q_max, s.options(q_max)) : LiftPoint{theta, r};
  ordered_json j;
  j["command"] = "lyapunov";
  j["map"] = gf.name;
  j["k"] = gf.k;
  j["start"] = point_json(start);
  j["n"] = n;
  j["lyapunov_exponent"] = lyapunov_exponent(gf, start, n);
  out << j.dump(2) << '\n';
  return 0;
}

struct RegularityFlags {
  std::string omega = "golden";
  std::string cf;
  std::string qs = "34,55,89";
  std::string deltas;
  std::string source = "periodic";
  double theta = 0.0, r = 0.0;
  long orbit_length = 2000;
  int depth = 200;
  std::string spread_csv, gap_csv;
};

int cmd_regularity(const MapFlags& m, const SolverFlags& s, const RegularityFlags& f, std::ostream& out) {
  const auto gf = m.family();
  std::vector<double> deltas = f.deltas.empty() ? default_deltas() : parse_doubles(f.deltas, "deltas");
  PointCloud cloud;
  if (f.source == "periodic") {
    const auto qs = parse_longs(f.qs, "qs");
    if (qs.empty()) throw InvalidArgument("qs: at least one denominator is required");
    const long qmax = *std::max_element(qs.begin(), qs.end());
    // Enough levels to reach qmax: denominators grow at least like Fibonacci.
    int levels = 2;
    RotationTarget target = make_target(f.omega, f.cf, levels);
    while (target.convergents.back().second < qmax && levels < 90) {
      ++levels;
      target = make_target(f.omega, f.cf, levels);
    }
    std::vector<Configuration> orbits;
    for (long q : qs) {
      const auto it = std::find_if(target.convergents.begin(), target.convergents.end(),
                                   [&](const auto& c) { return c.second == q; });
      if (it == target.convergents.end())
        throw InvalidArgument("qs: " + std::to_string(q) + " is not a convergent denominator of the target");
      orbits.push_back(minimize_periodic(gf, static_cast<int>(it->first), static_cast<int>(q),
                                         s.options(static_cast<std::size_t>(std::max<long>(8, q))))
                           .config);
    }
    cloud = periodic_orbit_cloud(gf, orbits);
  } else if (f.source == "orbit") {
    const auto pts = orbit(gf, {f.theta, f.r}, f.orbit_length);
    cloud = orbit_sample_cloud(pts);
  } else {
    throw InvalidArgument("source must be periodic or orbit");
  }

  const auto spreads = spread_at_all_bases(cloud, deltas);
  const auto gaps = green_gap_profile(gf, cloud, f.depth);
  if (!f.spread_csv.empty()) write_file(f.spread_csv, [&](std::ostream& os) { write_spread_csv(os, spreads); });
  if (!f.gap_csv.empty()) write_file(f.gap_csv, [&](std::ostream& os) { write_gap_csv(os, gaps); });

  ordered_json j;
  j["command"] = "regularity";
  j["map"] = gf.name;
  j["k"] = gf.k;
  j["provenance"] = to_string(cloud.provenance);
  j["points"] = cloud.points.size();
  auto per_delta = ordered_json::array();
  for (double d : deltas) {
    std::vector<double> v;
    for (const auto& rec : spreads)
      if (rec.delta == d) v.push_back(rec.spread());
    ordered_json row;
    row["delta"] = d;
    row["bases"] = v.size();
    if (v.empty()) {
      row["median_spread"] = nullptr;
    } else {
      row["q25"] = quantile(v, 0.25);
      row["median_spread"] = quantile(v, 0.5);
      row["q75"] = quantile(v, 0.75);
    }
    per_delta.push_back(std::move(row));
  }
  j["spread"] = std::move(per_delta);
  std::vector<double> g;
  for (const auto& x : gaps) g.push_back(x.gap);
  j["green_depth"] = f.depth;
  j["median_green_gap"] = median(g);
  out << j.dump(2) << '\n';
  return 0;
}

struct RateFlags {
  double theta = 0.0, r = 0.0;
  long n = 1000;
  std::string target_points;
  double target_circle = std::numeric_limits<double>::quiet_NaN();
  int target_samples = 1000;
  std::string target_periodic;
  std::string series_path;
  std::string epsilons = "0.1,0.3,0.5";
  double window_fraction = 0.25;
  double divergence_threshold = 10.0;
  double exponential_threshold = 0.1;
  std::string series_csv;
};

DistanceSeries read_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("series: cannot read '" + path + "'");
  DistanceSeries s;
  s.target = path;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.find_first_of("0123456789") != 0) continue;
    }
    const auto fields = split_list(line);
    s.d.push_back(to_double(fields.size() >= 2 ? fields[1] : fields.at(0), "series"));
  }
  return s;
}

int cmd_rate(const MapFlags& m, const SolverFlags& sf, const RateFlags& f, std::ostream& out) {
  DistanceSeries series;
  std::string target_id;
  if (!f.series_path.empty()) {
    series = read_series(f.series_path);
    target_id = "series:" + f.series_path;
  } else {
    const auto gf = m.family();
    PointCloud target;
    if (!f.target_points.empty()) {
      const auto v = parse_doubles(f.target_points, "target-points");
      if (v.size() % 2 != 0) throw InvalidArgument("target-points: expected theta,r pairs");
      std::vector<AnnulusPoint> pts;
      for (std::size_t i = 0; i < v.size(); i += 2) pts.emplace_back(v[i], v[i + 1]);
      target = curve_sample_cloud(std::move(pts));
      target_id = "points";
    } else if (!std::isnan(f.target_circle)) {
      if (f.target_samples < 1) throw InvalidArgument("target-samples must be >= 1");
      std::vector<AnnulusPoint> pts;
      for (int i = 0; i < f.target_samples; ++i)
        pts.emplace_back(static_cast<double>(i) / f.target_samples, f.target_circle);
      target = curve_sample_cloud(std::move(pts));
      target_id = "circle:" + format_double(f.target_circle);
    } else if (!f.target_periodic.empty()) {
      const auto slash = f.target_periodic.find('/');
      if (slash == std::string::npos) throw InvalidArgument("target-periodic: expected p/q");
      const int p = static_cast<int>(to_long(f.target_periodic.substr(0, slash), "target-periodic"));
      const int q = static_cast<int>(to_long(f.target_periodic.substr(slash + 1), "target-periodic"));
      const auto c = minimize_periodic(gf, p, q, sf.options(static_cast<std::size_t>(std::max(8, q)))).config;
      const Configuration cs[] = {c};
      target = periodic_orbit_cloud(gf, cs);
      target_id = "periodic:" + f.target_periodic;
    } else {
      throw InvalidArgument("rate: give --series, --target-points, --target-circle or --target-periodic");
    }
    series = distance_series(gf, {f.theta, f.r}, target, f.n, target_id);
  }
  RateOptions ro;
  ro.window_fraction = f.window_fraction;
  ro.divergence_threshold = f.divergence_threshold;
  ro.exponential_threshold = f.exponential_threshold;
  if (!(ro.window_fraction > 0.0 && ro.window_fraction <= 0.5))
    throw InvalidArgument("window-fraction must lie in (0, 0.5]");
  const auto eps = parse_doubles(f.epsilons, "epsilons");
  const auto verdict = classify_rate(series, eps, ro);
  if (!f.series_csv.empty()) write_file(f.series_csv, [&](std::ostream& os) { write_series_csv(os, series); });

  ordered_json j;
  j["command"] = "rate";
  j["target"] = series.target;
  j["length"] = series.d.size();
  j["verdict"] = to_json(verdict);
  out << j.dump(2) << '\n';
  return 0;
}

struct SweepFlags {
  std::string ks;
  int p = 0, q = 0;
  std::string omega;
  std::string cf;
  int levels = 0;
  long q_max = 233;
  std::string out_path;
};

struct SweepRow {
  double k = 0.0;
  int p = 0, q = 1;
  std::string line;
};

int cmd_sweep(const MapFlags& m, const SolverFlags& s, const SweepFlags& f, std::ostream& out) {
  const auto ks = parse_doubles(f.ks, "ks");
  std::vector<std::pair<int, int>> cells_pq;
  if (f.q > 0) {
    cells_pq.emplace_back(f.p, f.q);
  } else if (f.levels > 0) {
    const auto target = make_target(f.omega.empty() ? "golden" : f.omega, f.cf, f.levels);
    for (const auto& [p, q] : target.convergents)
      if (q <= f.q_max) cells_pq.emplace_back(static_cast<int>(p), static_cast<int>(q));
  } else if (!ks.empty()) {
    throw InvalidArgument("sweep: give --p/--q or --levels");
  }
  make_family(m.map, 0.0);  // validates the family name up front
  for (const auto& [p, q] : cells_pq)
    if (q < 1 || std::gcd(p, q) != 1) throw InvalidArgument("p,q not coprime");

  std::vector<SweepRow> rows;
  for (double k : ks)
    for (const auto& [p, q] : cells_pq) rows.push_back({k, p, q, {}});

  MinimizeOptions mo = s.options(rows.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(mo.threads, static_cast<unsigned>(std::max<std::size_t>(rows.size(), 1))));
  mo.threads = 1;

  auto compute = [&](SweepRow& row) {
    std::ostringstream line;
    line << format_double(row.k) << ',' << row.p << ',' << row.q << ',';
    try {
      const auto gf = make_family(m.map, row.k);
      const auto result = minimize_periodic(gf, row.p, row.q, mo);
      const auto rec = residue(monodromy(gf, result.config), row.p, row.q);
      line << format_double(result.report.value) << ',' << format_double(rec.trace) << ','
           << format_double(rec.residue) << ',' << format_double(rec.mean_residue) << ','
           << (rec.lambda_max ? format_double(*rec.lambda_max) : "") << ",ok";
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      line << ",,,,," << msg;
    }
    row.line = line.str();
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < rows.size(); i += workers) compute(rows[i]);
      });
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.k != b.k) return a.k < b.k;
    if (a.q != b.q) return a.q < b.q;
    return a.p < b.p;
  });

  auto emit = [&](std::ostream& os) {
    os << "k,p,q,action,trace,residue,mean_residue,lambda_max,status\n";
    for (const auto& row : rows) os << row.line << '\n';
  };
  if (f.out_path.empty())
    emit(out);
  else
    write_file(f.out_path, emit);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  try {
    args = apply_config(raw_args);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"Numerical laboratory for symplectic twist maps of the annulus", "twistlab"};
  app.require_subcommand(1);

  MapFlags map_flags;
  SolverFlags solver_flags;

  double theta = 0.0, r = 0.0;
  long n = 100;
  std::string csv_out, records_out;
  auto* orbit_cmd = app.add_subcommand("orbit", "Iterate the map from a point");
  map_flags.add(orbit_cmd);
  orbit_cmd->add_option("--theta", theta, "Lifted start angle");
  orbit_cmd->add_option("--r", r, "Start fiber coordinate");
  orbit_cmd->add_option("--n", n, "Number of steps (negative: inverse map)");
  orbit_cmd->add_option("--out", csv_out, "CSV of (n, theta, r)");

  int p = 0, q = 1;
  auto* minimize_cmd = app.add_subcommand("minimize", "Minimizing (p, q)-periodic orbit and its residue");
  map_flags.add(minimize_cmd);
  solver_flags.add(minimize_cmd);
  minimize_cmd->add_option("--p", p, "Rotation numerator")->required();
  minimize_cmd->add_option("--q", q, "Rotation denominator")->required();
  minimize_cmd->add_option("--out", csv_out, "CSV of (j, theta_j, r_j)");
  minimize_cmd->add_option("--records", records_out, "CSV of the residue record");

  GreeneFlags greene_flags;
  auto* greene_cmd = app.add_subcommand("greene", "Residue scan along continued-fraction convergents");
  map_flags.add(greene_cmd);
  solver_flags.add(greene_cmd);
  greene_cmd->add_option("--omega", greene_flags.omega, "'golden' or a number in (0, 1)");
  greene_cmd->add_option("--cf", greene_flags.cf, "Partial quotients a0,a1,... (overrides --omega)");
  greene_cmd->add_option("--levels", greene_flags.levels, "Number of convergents");
  greene_cmd->add_option("--sigma", greene_flags.sigma, "Threshold sigma > 1 for the eigenvalue bound");
  greene_cmd->add_option("--margin", greene_flags.margin, "Dead band around 1");
  greene_cmd->add_option("--tail-window", greene_flags.tail_window, "Convergents in the tail test");
  greene_cmd->add_option("--qmax", greene_flags.q_max, "Largest denominator scanned");
  greene_cmd->add_flag("--no-continuation", greene_flags.no_continuation, "Only use fresh phase seeds");
  greene_cmd->add_option("--out-json", greene_flags.json_path, "Write the JSON report");
  greene_cmd->add_option("--out-csv", greene_flags.csv_path, "Write the residue records as CSV");

  int index = 0, depth = 30;
  int gb_p = 0, gb_q = 0;
  auto* green_cmd = app.add_subcommand("green-bundles", "Finite-depth Green bundle slopes");
  map_flags.add(green_cmd);
  solver_flags.add(green_cmd);
  green_cmd->add_option("--theta", theta, "Center angle");
  green_cmd->add_option("--r", r, "Center fiber coordinate");
  green_cmd->add_option("--p", gb_p, "Use the minimizing p/q orbit instead of a point");
  green_cmd->add_option("--q", gb_q, "Denominator of the periodic orbit");
  green_cmd->add_option("--index", index, "Point of the periodic orbit");
  green_cmd->add_option("--n", depth, "Depth");

  long lyap_n = 10000;
  bool golden_start = false;
  long lyap_qmax = 233;
  auto* lyap_cmd = app.add_subcommand("lyapunov", "Finite-time Lyapunov exponent");
  map_flags.add(lyap_cmd);
  solver_flags.add(lyap_cmd);
  lyap_cmd->add_option("--theta", theta, "Start angle");
  lyap_cmd->add_option("--r", r, "Start fiber coordinate");
  lyap_cmd->add_option("--n", lyap_n, "Number of steps (>= 100)");
  lyap_cmd->add_flag("--golden-start", golden_start, "Start on the minimizing orbit of a golden convergent");
  lyap_cmd->add_option("--qmax", lyap_qmax, "Largest convergent denominator for --golden-start");

  RegularityFlags reg;
  auto* reg_cmd = app.add_subcommand("regularity", "Paratangent spreads and Green gaps of a point cloud");
  map_flags.add(reg_cmd);
  solver_flags.add(reg_cmd);
  reg_cmd->add_option("--source", reg.source, "periodic (union of minimizing orbits) or orbit");
  reg_cmd->add_option("--omega", reg.omega, "'golden' or a number in (0, 1)");
  reg_cmd->add_option("--cf", reg.cf, "Partial quotients a0,a1,...");
  reg_cmd->add_option("--qs", reg.qs, "Convergent denominators forming the cloud");
  reg_cmd->add_option("--theta", reg.theta, "Orbit start angle (source orbit)");
  reg_cmd->add_option("--r", reg.r, "Orbit start fiber coordinate (source orbit)");
  reg_cmd->add_option("--length", reg.orbit_length, "Orbit length (source orbit)");
  reg_cmd->add_option("--deltas", reg.deltas, "Decreasing radii (default 0.1 * 2^-i, i = 0..4)");
  reg_cmd->add_option("--depth", reg.depth, "Green slope depth");
  reg_cmd->add_option("--spread-out", reg.spread_csv, "CSV of per-base slope spreads");
  reg_cmd->add_option("--gap-out", reg.gap_csv, "CSV of Green gaps");

  RateFlags rate;
  auto* rate_cmd = app.add_subcommand("rate", "Classify the decay of the distance to a target set");
  map_flags.add(rate_cmd);
  solver_flags.add(rate_cmd);
  rate_cmd->add_option("--theta", rate.theta, "Start angle");
  rate_cmd->add_option("--r", rate.r, "Start fiber coordinate");
  rate_cmd->add_option("--n", rate.n, "Number of steps");
  rate_cmd->add_option("--target-points", rate.target_points, "theta,r,theta,r,...");
  rate_cmd->add_option("--target-circle", rate.target_circle, "Horizontal circle r = const");
  rate_cmd->add_option("--target-samples", rate.target_samples, "Samples of the circle");
  rate_cmd->add_option("--target-periodic", rate.target_periodic, "Minimizing p/q orbit");
  rate_cmd->add_option("--series", rate.series_path, "Classify an existing CSV (n, d_n) instead");
  rate_cmd->add_option("--epsilons", rate.epsilons, "Increasing epsilon grid");
  rate_cmd->add_option("--window-fraction", rate.window_fraction, "First/last window length");
  rate_cmd->add_option("--divergence-threshold", rate.divergence_threshold, "Sub-exponential threshold");
  rate_cmd->add_option("--exponential-threshold", rate.exponential_threshold, "Exponential threshold");
  rate_cmd->add_option("--out", rate.series_csv, "CSV of (n, d_n)");

  SweepFlags sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Residues over a grid of k and rotation numbers");
  map_flags.add(sweep_cmd);
  solver_flags.add(sweep_cmd);
  sweep_cmd->add_option("--ks", sweep.ks, "Comma separated k values (empty: empty grid)");
  sweep_cmd->add_option("--p", sweep.p, "Single cell numerator");
  sweep_cmd->add_option("--q", sweep.q, "Single cell denominator");
  sweep_cmd->add_option("--omega", sweep.omega, "Target for convergent levels");
  sweep_cmd->add_option("--cf", sweep.cf, "Partial quotients for convergent levels");
  sweep_cmd->add_option("--levels", sweep.levels, "Number of convergents");
  sweep_cmd->add_option("--qmax", sweep.q_max, "Largest denominator");
  sweep_cmd->add_option("--out", sweep.out_path, "CSV output (default stdout)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "orbit") return cmd_orbit(map_flags, theta, r, n, csv_out, out);
    if (command == "minimize") return cmd_minimize(map_flags, solver_flags, p, q, csv_out, records_out, out);
    if (command == "greene") return cmd_greene(map_flags, solver_flags, greene_flags, out);
    if (command == "green-bundles")
      return cmd_green_bundles(map_flags, solver_flags, theta, r, gb_p, gb_q, index, depth, out);
    if (command == "lyapunov")
      return cmd_lyapunov(map_flags, solver_flags, theta, r, lyap_n, golden_start, lyap_qmax, out);
    if (command == "regularity") return cmd_regularity(map_flags, solver_flags, reg, out);
    if (command == "rate") return cmd_rate(map_flags, solver_flags, rate, out);
    if (command == "sweep") return cmd_sweep(map_flags, solver_flags, sweep, out);
  } catch (const InvalidArgument& e) {
    err << command << ": " << e.what() << '\n';
    return 2;
  } catch (const RationalTarget& e) {
    err << command << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << command << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
    return 1;
  }
  err << "unknown command " << command << '\n';
  return 2;
}

}  // namespace twistlab::cli
