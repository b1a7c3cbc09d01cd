// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ringplatoon/experiment.hpp"

using namespace ringplatoon;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome stability_scalar() {
  const auto v = string_stable(Strategy::VTG1, ControllerParams{}, 15.0);
  return {std::abs(v.margin - 0.0624) <= 1e-4 && v.stable, fmt("margin=%.6f", v.margin)};
}

Outcome probability_fit() {
  const auto grid = linspace_step(0.01, 0.99, 0.01);
  const auto random = verify_probability_model(grid, 0.0, 200, 100, 4, 1);
  const auto full = verify_probability_model(grid, 1.0, 200, 100, 4, 2);
  const bool ok = random.lv1.r_squared >= 0.90 && random.lv2.r_squared >= 0.90 && random.pv.r_squared >= 0.90 &&
                  full.lv1.rmse <= 0.02 && full.pv.r_squared >= 0.99;
  std::ostringstream d;
  d << "O=0 r2 lv1=" << random.lv1.r_squared << " lv2=" << random.lv2.r_squared << " pv=" << random.pv.r_squared
    << "; O=1 rmse lv1=" << full.lv1.rmse << " r2 pv=" << full.pv.r_squared;
  return {ok, d.str()};
}

Outcome probability_closure() {
  std::mt19937_64 rng(2025);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_sum = 0.0, worst_limit = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), o = u(rng);
    const std::size_t s = 1 + rng() % 10;
    const auto d = class_probabilities(p, o, s);
    worst_sum = std::max(worst_sum, std::abs(d.lv1 + d.lv2 + d.pv - p));
    const auto near = class_probabilities(p, 1.0 - 1e-9, s);
    const auto at = class_probabilities(p, 1.0, s);
    worst_limit = std::max({worst_limit, std::abs(near.lv1 - at.lv1), std::abs(near.lv2 - at.lv2),
                            std::abs(near.pv - at.pv)});
  }
  std::ostringstream d;
  d << "max closure error=" << worst_sum << " max limit error=" << worst_limit;
  return {worst_sum <= 1e-12 && worst_limit <= 1e-6, d.str()};
}

double law(Strategy s, const ControllerParams& params, double v, double dx, double dv) {
  ControlContext c;
  c.self = {0, v, 0};
  c.predecessor = {dx, v + dv, 0};
  c.gap = dx - c.length;
  return desired_accel(s, c, params, 0.6);
}

Outcome partials_oracle() {
  const ControllerParams params;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> speed(0.5, 33.3);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double v = speed(rng);
    for (Strategy s : {Strategy::CTG, Strategy::VTG1, Strategy::VTG2}) {
      const auto p = equilibrium_partials(s, params, v, 0.6);
      const double dx = equilibrium_gap(s, v, params, 0.6) + 5.0;
      const double h = 1e-4;
      const double fv = oracle::central_difference([&](double x) { return law(s, params, x, dx, 0); }, v, h);
      const double fdx = oracle::central_difference([&](double x) { return law(s, params, v, x, 0); }, dx, h);
      const double fdv = oracle::central_difference([&](double x) { return law(s, params, v, dx, x); }, 0.0, h);
      worst = std::max({worst, std::abs(fv - p.g_v) / std::abs(p.g_v), std::abs(fdx - p.g_dx) / std::abs(p.g_dx),
                        std::abs(fdv - p.g_dv) / std::abs(p.g_dv)});
    }
  }
  int disagreements = 0;
  for (Strategy s : {Strategy::CTG, Strategy::VTG1, Strategy::VTG2})
    for (double v : {2.0, 9.0, 15.0, 24.0, 33.0}) {
      const auto p = equilibrium_partials(s, params, v, 0.6);
      const bool margin_ok = string_stable(p).margin >= 0.0;
      const bool grid_ok = oracle::dense_grid_max(p.g_v, p.g_dx, p.g_dv, p.k) <= 1.0 + 1e-9;
      if (margin_ok != grid_ok) ++disagreements;
    }
  std::ostringstream d;
  d << "max relative error=" << worst << " sign disagreements=" << disagreements;
  return {worst <= 1e-6 && disagreements == 0, d.str()};
}

Outcome equilibrium_hold() {
  struct Case {
    const char* name;
    int combo;
    bool human;
  };
  const Case cases[] = {{"CTG", 1, false}, {"VTG1", 2, false}, {"VTG2", 3, false}, {"BDBM", 4, false}, {"HV", 1, true}};
  bool ok = true;
  std::ostringstream d;
  for (const auto& c : cases) {
    SimConfig cfg;
    cfg.combo_id = c.combo;
    cfg.duration_s = 100.0;
    cfg.warmup_s = 0.0;
    std::vector<VehicleClass> labels;
    for (int k = 0; k < 20; ++k)
      labels.push_back(c.human ? VehicleClass::HV : (k % 4 == 0 ? VehicleClass::LV2 : VehicleClass::PV));
    RingSetup setup = equilibrium_setup(labels, cfg, 15.0);
    const auto start = ring_gaps(setup.state, cfg.ring_length_m, cfg.vehicle_length);
    RingState st = setup.state;
    double drift = 0.0, accel = 0.0;
    for (long long k = 1; k <= cfg.total_steps(); ++k) {
      step(st, setup.assignment, cfg, k);
      const auto g = ring_gaps(st, cfg.ring_length_m, cfg.vehicle_length);
      for (std::size_t i = 0; i < g.size(); ++i) {
        drift = std::max(drift, std::abs(g[i] - start[i]));
        accel = std::max(accel, std::abs(st.a[i]));
      }
    }
    ok = ok && drift < 1e-3 && accel < 1e-6;
    d << c.name << " drift=" << drift << " |a|=" << accel << "; ";
  }
  return {ok, d.str()};
}

Outcome fuel_emission_points() {
  std::ostringstream d;
  bool ok = nfr(-5.0) == 1.0;
  d << "nfr(-5)=" << nfr(-5.0);
  bool nox_braking = true;
  for (double v = 0.0; v <= 33.3 + 1e-9; v += 0.1)
    nox_braking = nox_braking && emission_rate(v, -1.0, Pollutant::NOx) == 2.17e-4;
  ok = ok && nox_braking;
  d << " nox(a=-1) constant=" << nox_braking;

  std::vector<double> pm_speeds, nox_speeds;
  for (int i = 1; 20.0 + 0.01 * i <= 33.3 + 1e-9; ++i) pm_speeds.push_back(20.0 + 0.01 * i);
  for (int i = 1; 25.0 + 0.01 * i <= 33.3 + 1e-9; ++i) nox_speeds.push_back(25.0 + 0.01 * i);
  double pm_max = 0.0, nox_max = 0.0, nox_last_positive = 0.0;
  for (const auto& p : equilibrium_curves(pm_speeds)) pm_max = std::max(pm_max, p.emission_per_km[3]);
  for (const auto& p : equilibrium_curves(nox_speeds)) {
    nox_max = std::max(nox_max, p.emission_per_km[1]);
    if (p.emission_per_km[1] > 0.0) nox_last_positive = p.v;
  }
  ok = ok && pm_max == 0.0 && nox_max == 0.0;
  d << " max PM(v>20)=" << pm_max << " g/km, max NOx(v>25)=" << nox_max << " g/km";
  if (nox_max > 0.0) d << " (NOx positive up to v=" << nox_last_positive << ")";
  return {ok, d.str()};
}

SimConfig desk_config() {
  SimConfig cfg;
  cfg.duration_s = 600.0;
  cfg.warmup_s = 300.0;
  return cfg;
}

double metric(const CellResult& r, int which) {
  if (!r.footprint) return std::nan("");
  const auto& f = *r.footprint;
  const auto v = which < 0 ? f.nff : f.emission_per_km[static_cast<std::size_t>(which)];
  return v ? *v : std::nan("");
}

Outcome desk_rankings() {
  const SimConfig base = desk_config();
  std::ostringstream d;

  // a. sparse traffic: every combination burns about the same fuel.
  std::vector<double> sparse;
  for (const auto& c : kCombos) sparse.push_back(metric(run_cell(base, 15, 0.8, c.id, 0), -1));
  const auto [lo, hi] = std::minmax_element(sparse.begin(), sparse.end());
  double mean = 0.0;
  for (double x : sparse) mean += x;
  mean /= static_cast<double>(sparse.size());
  const double spread = (*hi - *lo) / mean;
  const bool a = std::isfinite(spread) && spread <= 0.10;
  d << "a: spread=" << spread << (a ? " ok" : " FAIL") << "; ";

  // b. balanced spacing fuel over penetration at medium density.
  std::vector<double> bs;
  for (double p : {0.6, 0.8, 1.0}) bs.push_back(metric(run_cell(base, 55, p, 4, 0), -1));
  // Ties are judged at 1e-9 relative: summation order alone moves the last bits.
  auto not_below = [](double lo, double hi) { return hi >= lo - 1e-9 * std::abs(lo); };
  const bool b = not_below(bs[0], bs[1]) && not_below(bs[1], bs[2]);
  const bool flat = std::abs(bs[2] - bs[0]) <= 1e-9 * std::abs(bs[0]);
  d << "b: BS-BS nff=" << bs[0] << "," << bs[1] << "," << bs[2] << (flat ? " (flat)" : "") << (b ? " ok" : " FAIL")
    << "; ";

  // c/d. dense, full penetration.
  std::map<std::string, CellResult> dense;
  for (const auto& c : kCombos) dense.emplace(c.name(), run_cell(base, 95, 1.0, c.id, 0));
  std::vector<std::pair<double, std::string>> order;
  for (const auto& [name, r] : dense) order.emplace_back(metric(r, -1), name);
  std::sort(order.begin(), order.end());
  const bool c = order.size() >= 3 &&
                 ((order[0].second == "VTG1-CS" && order[1].second == "VTG2-CS") ||
                  (order[0].second == "VTG2-CS" && order[1].second == "VTG1-CS")) &&
                 order[2].second == "CTG-CS";
  d << "c: lowest nff " << order[0].second << "=" << order[0].first << ", " << order[1].second << "="
    << order[1].first << ", " << order[2].second << "=" << order[2].first << (c ? " ok" : " FAIL") << "; ";

  bool dd = true;
  for (std::size_t k = 0; k < kPollutants.size(); ++k) {
    const double ref = metric(dense.at("CTG-CTG"), static_cast<int>(k));
    for (const char* name : {"VTG1-CS", "VTG2-CS", "CTG-CS"}) {
      const double x = metric(dense.at(name), static_cast<int>(k));
      if (!(x < ref)) {
        dd = false;
        d << "d: " << name << " " << to_string(kPollutants[k]) << "=" << x << " >= CTG-CTG " << ref << "; ";
      }
    }
  }
  if (dd) d << "d: CS mixes below CTG-CTG for all pollutants ok";
  return {a && b && c && dd, d.str()};
}

Outcome determinism() {
  SweepSpec spec;
  spec.densities = {15, 55, 95};
  spec.penetrations = {0.2, 0.8};
  spec.combos = {1, 4, 7, 10};
  spec.base.duration_s = 120.0;
  spec.base.warmup_s = 60.0;
  const fs::path root = fs::temp_directory_path() / "ringplatoon_acceptance_determinism";
  fs::remove_all(root);
  auto produce = [&](const fs::path& dir, unsigned threads) {
    SweepSpec s = spec;
    s.parallelism = threads;
    fs::create_directories(dir);
    const auto table = metrics_table(run_sweep(s));
    table.write_file(dir / "metrics.csv", metrics_keys());
    emit_plot_data(table, dir / "plots");
  };
  produce(root / "first", 1);
  produce(root / "second", 1);
  produce(root / "threaded", 3);
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  std::size_t files = 0, mismatches = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "first")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "first");
    ++files;
    const std::string ref = read(e.path());
    if (read(root / "second" / rel) != ref || read(root / "threaded" / rel) != ref) ++mismatches;
  }
  fs::remove_all(root);
  std::ostringstream d;
  d << files << " files compared, " << mismatches << " differ";
  return {files > 1 && mismatches == 0, d.str()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 stability scalar", stability_scalar},
      {"2 probability-model fit", probability_fit},
      {"3 probability closure", probability_closure},
      {"4 partials oracle", partials_oracle},
      {"5 equilibrium hold", equilibrium_hold},
      {"6 fuel/emission point checks", fuel_emission_points},
      {"7 desk-scale rankings", desk_rankings},
      {"8 determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s: criterion %s (%.1fs) %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
  return failures == 0 ? 0 : 1;
}
