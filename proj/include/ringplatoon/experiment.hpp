#pragma once

// Batch experiments: the density x penetration x strategy-combination sweep,
// the probability-model and string-stability verification reports, and
// the pivoted plot tables.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "ringplatoon/csv.hpp"
#include "ringplatoon/energy_emissions.hpp"
#include "ringplatoon/fleet_composition.hpp"
#include "ringplatoon/platoon_manager.hpp"
#include "ringplatoon/random.hpp"
#include "ringplatoon/ring_sim.hpp"
#include "ringplatoon/stability.hpp"

namespace ringplatoon {

// ---------------------------------------------------------------------------
// Sweep

struct SweepSpec {
  std::vector<double> densities;
  std::vector<double> penetrations;
  std::vector<int> combos;
  SimConfig base;
  std::filesystem::path output_dir = ".";
  unsigned parallelism = 1;
  int replications = 1;

  static SweepSpec full_grid() {
    SweepSpec s;
    for (int d = 5; d <= 100; d += 5) s.densities.push_back(d);
    s.penetrations = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    for (const auto& c : kCombos) s.combos.push_back(c.id);
    return s;
  }

  void validate() const {
    if (densities.empty() || penetrations.empty() || combos.empty())
      throw std::invalid_argument("SweepSpec: densities, penetrations and combos must be non-empty");
    if (replications < 1) throw std::invalid_argument("SweepSpec: replications must be >= 1");
    for (int c : combos) combo_by_id(c);
  }
};

struct CellResult {
  double density = 0.0;
  double penetration = 0.0;
  int combo = 1;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  std::optional<FleetFootprint> footprint;
  std::size_t violations = 0;
};

inline std::uint64_t cell_seed(std::uint64_t base, double density, double penetration, int combo, int replicate) {
  // Keys are quantized so that 0.6 and 0.6000000001 hash alike.
  std::uint64_t h = mix64(base);
  h = hash_combine(h, static_cast<std::uint64_t>(std::llround(density * 1e6)));
  h = hash_combine(h, static_cast<std::uint64_t>(std::llround(penetration * 1e6)));
  h = hash_combine(h, static_cast<std::uint64_t>(combo));
  h = hash_combine(h, static_cast<std::uint64_t>(replicate));
  return h;
}

inline std::string sanitize_status(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

inline CellResult run_cell(const SimConfig& base, double density, double penetration, int combo, int replicate) {
  CellResult r;
  r.density = density;
  r.penetration = penetration;
  r.combo = combo;
  r.replicate = replicate;
  r.seed = cell_seed(base.seed, density, penetration, combo, replicate);
  try {
    SimConfig cfg = base;
    cfg.density = density;
    cfg.penetration = penetration;
    cfg.combo_id = combo;
    cfg.seed = r.seed;
    const TrajectoryLog log = run(cfg);
    r.violations = log.violations.size();
    if (log.samples.empty()) throw std::runtime_error("no samples recorded after warm-up");
    r.footprint = fleet_footprint(log.samples);
    if (!r.footprint->nff) r.status = "zero_mean_speed";
  } catch (const std::exception& e) {
    r.status = sanitize_status(std::string("error: ") + e.what());
    r.footprint.reset();
  }
  return r;
}

/// Runs every cell, up to `spec.parallelism` at a time. Results come back
/// sorted by (combo, p, density, replicate) regardless of scheduling.
inline std::vector<CellResult> run_sweep(const SweepSpec& spec) {
  spec.validate();
  struct Key {
    double density, p;
    int combo, replicate;
  };
  std::vector<double> ps = spec.penetrations, ds = spec.densities;
  std::vector<int> cs = spec.combos;
  std::sort(ps.begin(), ps.end());
  std::sort(ds.begin(), ds.end());
  std::sort(cs.begin(), cs.end());
  std::vector<Key> keys;
  for (int c : cs)
    for (double p : ps)
      for (double d : ds)
        for (int r = 0; r < spec.replications; ++r) keys.push_back({d, p, c, r});

  std::vector<CellResult> results(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++)
      results[i] = run_cell(spec.base, keys[i].density, keys[i].p, keys[i].combo, keys[i].replicate);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(spec.parallelism, static_cast<unsigned>(keys.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

inline const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> h = {
      "density",      "p",          "combo",        "mean_speed_mps", "nff_g_per_km", "co2_g_per_km", "nox_g_per_km",
      "voc_g_per_km", "pm_g_per_km", "violations", "combo_name",     "replicate",    "status"};
  return h;
}

inline std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : "nan"; }

inline CsvTable metrics_table(const std::vector<CellResult>& results) {
  CsvTable t;
  t.header = metrics_header();
  for (const auto& r : results) {
    const std::string name = combo_by_id(r.combo).name();
    if (r.footprint) {
      const auto& f = *r.footprint;
      t.add(r.density, r.penetration, r.combo, f.mean_speed, optional_cell(f.nff), optional_cell(f.per_km(Pollutant::CO2)),
            optional_cell(f.per_km(Pollutant::NOx)), optional_cell(f.per_km(Pollutant::VOC)),
            optional_cell(f.per_km(Pollutant::PM)), r.violations, name, r.replicate, r.status);
    } else {
      t.add(r.density, r.penetration, r.combo, "nan", "nan", "nan", "nan", "nan", "nan", r.violations, name,
            r.replicate, r.status);
    }
  }
  return t;
}

/// Sort keys of the metrics table: combo, p, density, replicate.
inline std::vector<std::size_t> metrics_keys() { return {2, 1, 0, 11}; }

// ---------------------------------------------------------------------------
// Plot tables

struct PlotMetric {
  const char* column;
  const char* tag;
};

inline constexpr std::array<PlotMetric, 6> kPlotMetrics = {{{"nff_g_per_km", "nff"},
                                                            {"co2_g_per_km", "co2"},
                                                            {"nox_g_per_km", "nox"},
                                                            {"voc_g_per_km", "voc"},
                                                            {"pm_g_per_km", "pm"},
                                                            {"mean_speed_mps", "speed"}}};

/// Densities used for the metric-versus-penetration family.
inline constexpr std::array<double, 3> kFocusDensities = {15.0, 55.0, 95.0};

inline std::string number_tag(double v) {
  std::string s = format_double(v);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

/// Pivots a metrics table into two plot families and writes them under
/// `dir`; returns the files written. Replicates are averaged.
///  - `<metric>_vs_density_<combo>.csv`: density rows, one column per p.
///  - `<metric>_vs_p_density<d>.csv`: p rows, one column per combo, for
///    d in {15, 55, 95} when present.
inline std::vector<std::filesystem::path> emit_plot_data(const CsvTable& metrics, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  if (metrics.rows.empty()) return written;
  std::filesystem::create_directories(dir);

  const std::size_t c_density = metrics.column("density");
  const std::size_t c_p = metrics.column("p");
  const std::size_t c_combo = metrics.column("combo");
  auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };

  std::vector<double> densities, ps;
  std::vector<int> combos;
  for (const auto& r : metrics.rows) {
    densities.push_back(num(r[c_density]));
    ps.push_back(num(r[c_p]));
    combos.push_back(static_cast<int>(num(r[c_combo])));
  }
  auto uniq = [](auto v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto du = uniq(densities);
  const auto pu = uniq(ps);
  const auto cu = uniq(combos);

  for (const auto& m : kPlotMetrics) {
    const std::size_t c_val = metrics.column(m.column);
    // (combo, p, density) -> mean over replicates; NaN propagates.
    std::map<std::tuple<int, double, double>, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < metrics.rows.size(); ++i) {
      auto& slot = acc[{combos[i], ps[i], densities[i]}];
      slot.first += num(metrics.rows[i][c_val]);
      slot.second += 1;
    }
    auto value = [&](int c, double p, double d) -> std::string {
      const auto it = acc.find({c, p, d});
      if (it == acc.end()) return "";
      return format_double(it->second.first / it->second.second);
    };

    for (int c : cu) {
      CsvTable t;
      t.header.push_back("density");
      for (double p : pu) t.header.push_back("p_" + format_double(p));
      for (double d : du) {
        std::vector<std::string> row{format_double(d)};
        for (double p : pu) row.push_back(value(c, p, d));
        t.rows.push_back(std::move(row));
      }
      const auto path = dir / (std::string(m.tag) + "_vs_density_" + combo_by_id(c).name() + ".csv");
      t.write_file(path, {0});
      written.push_back(path);
    }

    for (double d : kFocusDensities) {
      if (!std::binary_search(du.begin(), du.end(), d)) continue;
      CsvTable t;
      t.header.push_back("p");
      for (int c : cu) t.header.push_back(combo_by_id(c).name());
      for (double p : pu) {
        std::vector<std::string> row{format_double(p)};
        for (int c : cu) row.push_back(value(c, p, d));
        t.rows.push_back(std::move(row));
      }
      const auto path = dir / (std::string(m.tag) + "_vs_p_density" + number_tag(d) + ".csv");
      t.write_file(path, {0});
      written.push_back(path);
    }
  }
  return written;
}

// ---------------------------------------------------------------------------
// Probability model verification

struct ProbabilityReport {
  double intensity = 0.0;
  std::vector<double> p;
  std::vector<ClassDistribution> theory;
  std::vector<ClassDistribution> empirical;
  FitQuality lv1, lv2, pv;
  std::string note;
};

inline ProbabilityReport verify_probability_model(std::span<const double> p_grid, double intensity, int runs,
                                                  std::size_t n_vehicles = 100, std::size_t max_platoon_size = 4,
                                                  std::uint64_t base_seed = 0) {
  if (p_grid.empty()) throw std::invalid_argument("verify_probability_model: empty p grid");
  if (runs < 1) throw std::invalid_argument("verify_probability_model: runs must be >= 1");
  ProbabilityReport rep;
  rep.intensity = intensity;
  for (std::size_t k = 0; k < p_grid.size(); ++k) {
    const double p = p_grid[k];
    std::vector<std::vector<VehicleClass>> seqs;
    seqs.reserve(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r) {
      FleetSpec spec{n_vehicles, p, intensity, max_platoon_size,
                     hash_combine(hash_combine(base_seed, k), static_cast<std::uint64_t>(r))};
      seqs.push_back(generate_sequence(spec));
    }
    rep.p.push_back(p);
    rep.theory.push_back(class_probabilities(p, intensity, max_platoon_size));
    rep.empirical.push_back(empirical_distribution(seqs));
  }
  auto curve = [](const std::vector<ClassDistribution>& d, double ClassDistribution::*field) {
    std::vector<double> out;
    for (const auto& x : d) out.push_back(x.*field);
    return out;
  };
  rep.lv1 = goodness_of_fit(curve(rep.theory, &ClassDistribution::lv1), curve(rep.empirical, &ClassDistribution::lv1));
  rep.lv2 = goodness_of_fit(curve(rep.theory, &ClassDistribution::lv2), curve(rep.empirical, &ClassDistribution::lv2));
  rep.pv = goodness_of_fit(curve(rep.theory, &ClassDistribution::pv), curve(rep.empirical, &ClassDistribution::pv));
  if (p_grid.size() < 2) rep.note = "single penetration value: r_squared is not informative";
  return rep;
}

/// intensity, class, r_squared, rmse, note
inline void append_fit_rows(CsvTable& t, const ProbabilityReport& rep) {
  if (t.header.empty()) t.header = {"intensity", "class", "r_squared", "rmse", "note"};
  t.add(rep.intensity, "LV1", rep.lv1.r_squared, rep.lv1.rmse, rep.note);
  t.add(rep.intensity, "LV2", rep.lv2.r_squared, rep.lv2.rmse, rep.note);
  t.add(rep.intensity, "PV", rep.pv.r_squared, rep.pv.rmse, rep.note);
}

/// p, theory and simulated probability of each CAV class
inline CsvTable probability_curves(const ProbabilityReport& rep) {
  CsvTable t;
  t.header = {"p", "theory_lv1", "sim_lv1", "theory_lv2", "sim_lv2", "theory_pv", "sim_pv"};
  for (std::size_t i = 0; i < rep.p.size(); ++i)
    t.add(rep.p[i], rep.theory[i].lv1, rep.empirical[i].lv1, rep.theory[i].lv2, rep.empirical[i].lv2,
          rep.theory[i].pv, rep.empirical[i].pv);
  return t;
}

// ---------------------------------------------------------------------------
// Stability verification

struct StabilityRow {
  Strategy strategy = Strategy::CTG;
  double time_gap = 0.6;
  bool k_in_range = false;
  double margin_at_reference = 0.0;
  double min_margin = 0.0;
  bool stable = false;
  bool approximate = false;
  std::vector<RegionSample> region;
};

/// One row per strategy: margin at `v_reference` plus the margin curve over
/// `speeds`; a strategy is reported stable only if it is stable at every
/// sampled speed.
inline std::vector<StabilityRow> verify_stability(std::span<const Strategy> strategies, const ControllerParams& params,
                                                  std::span<const double> speeds, double v_reference = 15.0,
                                                  double time_gap = 0.6) {
  std::vector<StabilityRow> rows;
  for (Strategy s : strategies) {
    StabilityRow row;
    row.strategy = s;
    row.time_gap = time_gap;
    const auto ref = string_stable(s, params, v_reference, time_gap);
    row.k_in_range = ref.k_in_range;
    row.margin_at_reference = ref.margin;
    row.approximate = ref.approximate;
    row.region = stability_region(s, params, speeds, time_gap);
    row.stable = ref.stable;
    row.min_margin = ref.margin;
    for (const auto& r : row.region) {
      row.stable = row.stable && r.stable;
      row.min_margin = std::min(row.min_margin, r.margin);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CsvTable stability_table(const std::vector<StabilityRow>& rows) {
  CsvTable t;
  t.header = {"strategy", "time_gap", "k_in_range", "margin", "min_margin", "stable", "note"};
  for (const auto& r : rows)
    t.add(to_string(r.strategy), r.strategy == Strategy::CTG ? r.time_gap : 0.0, r.k_in_range,
          r.margin_at_reference, r.min_margin, r.stable,
          r.approximate ? "leader coupling held fixed" : "");
  return t;
}

inline CsvTable region_table(const std::vector<StabilityRow>& rows) {
  CsvTable t;
  t.header = {"strategy", "v_e", "margin", "stable"};
  for (const auto& r : rows)
    for (const auto& s : r.region) t.add(to_string(r.strategy), s.v_e, s.margin, s.stable);
  return t;
}

inline CsvTable equilibrium_table(std::span<const double> speeds) {
  CsvTable t;
  t.header = {"v_mps", "nff_g_per_km", "co2_g_per_km", "nox_g_per_km", "voc_g_per_km", "pm_g_per_km"};
  for (const auto& p : equilibrium_curves(speeds))
    t.add(p.v, p.nff, p.emission_per_km[0], p.emission_per_km[1], p.emission_per_km[2], p.emission_per_km[3]);
  return t;
}

/// Inclusive arithmetic grid, robust to accumulated rounding.
inline std::vector<double> linspace_step(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw std::invalid_argument("grid: need step > 0 and hi >= lo");
  std::vector<double> out;
  const long long n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  for (long long i = 0; i <= n; ++i) out.push_back(std::min(hi, lo + static_cast<double>(i) * step));
  return out;
}

// ---------------------------------------------------------------------------
// Config

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

/// Combination ids or names ("7", "VTG1-CS", "all").
inline std::vector<int> parse_combos(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) {
    if (item == "all") {
      for (const auto& c : kCombos) out.push_back(c.id);
    } else if (std::all_of(item.begin(), item.end(), ::isdigit)) {
      out.push_back(combo_by_id(std::stoi(item)).id);
    } else {
      out.push_back(combo_by_name(item).id);
    }
  }
  return out;
}

/// Applies one `key = value` setting; unknown keys are errors.
inline void apply_setting(SweepSpec& spec, const std::string& key, const std::string& value) {
  SimConfig& c = spec.base;
  auto d = [&] { return parse_doubles(value).at(0); };
  if (key == "densities") spec.densities = parse_doubles(value);
  else if (key == "penetrations") spec.penetrations = parse_doubles(value);
  else if (key == "combos") spec.combos = parse_combos(value);
  else if (key == "output_dir") spec.output_dir = value;
  else if (key == "parallelism") spec.parallelism = static_cast<unsigned>(std::stoul(value));
  else if (key == "replications") spec.replications = std::stoi(value);
  else if (key == "ring_length_m") c.ring_length_m = d();
  else if (key == "dt_s") c.dt_s = d();
  else if (key == "duration_s") c.duration_s = d();
  else if (key == "warmup_s") c.warmup_s = d();
  else if (key == "v_max") c.v_max = d();
  else if (key == "a_max") c.a_max = d();
  else if (key == "a_min") c.a_min = d();
  else if (key == "seed") c.seed = std::stoull(value);
  else if (key == "record_every_steps") c.record_every_steps = std::stoi(value);
  else if (key == "vehicle_length") c.vehicle_length = c.params.bdbm.length = d();
  else if (key == "max_platoon_size") c.max_platoon_size = std::stoul(value);
  else if (key == "h_leader") c.time_gaps.leader = d();
  else if (key == "h_follower") c.time_gaps.follower = d();
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

/// Flat `key = value` file; '#' starts a comment.
inline void load_config(std::istream& is, SweepSpec& spec) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_setting(spec, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace ringplatoon
