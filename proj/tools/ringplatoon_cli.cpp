// Command-line front end for the ring-road platoon experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ringplatoon/experiment.hpp"

namespace fs = std::filesystem;
using namespace ringplatoon;

namespace {

void write_stream_file(const fs::path& path, auto&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  writer(out);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

std::vector<Strategy> parse_strategies(const std::string& list) {
  std::vector<Strategy> out;
  for (const auto& name : split_list(list)) {
    bool found = false;
    for (Strategy s : {Strategy::CS, Strategy::CTG, Strategy::VTG1, Strategy::VTG2, Strategy::BS, Strategy::HV}) {
      if (to_string(s) == name) {
        out.push_back(s);
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("unknown strategy '" + name + "'");
  }
  return out;
}

/// Flags shared by `sweep` and `simulate`; applied on top of a config file.
struct SimFlags {
  std::string config;
  std::vector<std::string> settings;  // key=value overrides
  std::string densities, penetrations, combos;
  std::optional<double> duration, warmup, dt;
  std::optional<int> record_every;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", settings, "extra key=value override (repeatable)");
    app->add_option("--duration", duration, "simulated seconds");
    app->add_option("--warmup", warmup, "seconds discarded before measuring");
    app->add_option("--dt", dt, "time step in seconds");
    app->add_option("--record-every", record_every, "record cadence in steps");
    app->add_option("--seed", seed, "base seed");
  }

  void apply(SweepSpec& spec) const {
    if (!config.empty()) {
      std::ifstream in(config);
      load_config(in, spec);
    }
    for (const auto& kv : settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      apply_setting(spec, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!densities.empty()) spec.densities = parse_doubles(densities);
    if (!penetrations.empty()) spec.penetrations = parse_doubles(penetrations);
    if (!combos.empty()) spec.combos = parse_combos(combos);
    if (duration) spec.base.duration_s = *duration;
    if (warmup) spec.base.warmup_s = *warmup;
    if (dt) spec.base.dt_s = *dt;
    if (record_every) spec.base.record_every_steps = *record_every;
    if (seed) spec.base.seed = *seed;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-traffic ring road simulator with CAV platoon spacing strategies"};
  app.require_subcommand(1);

  // sweep ------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "run the density x penetration x strategy grid");
  SimFlags sweep_flags;
  sweep_flags.attach(sweep);
  std::string sweep_out;
  unsigned sweep_jobs = 0;
  int sweep_reps = 0;
  sweep->add_option("--densities", sweep_flags.densities, "veh/km list, e.g. 15,55,95");
  sweep->add_option("--penetrations", sweep_flags.penetrations, "CAV penetration list, e.g. 0,0.2,1");
  sweep->add_option("--combos", sweep_flags.combos, "strategy combination ids or names, or 'all'");
  sweep->add_option("-o,--output", sweep_out, "output directory");
  sweep->add_option("-j,--jobs", sweep_jobs, "cells run concurrently");
  sweep->add_option("--replications", sweep_reps, "runs per cell");

  // simulate ---------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "run one cell and export its trajectory");
  SimFlags sim_flags;
  sim_flags.attach(simulate);
  double sim_density = 55.0, sim_p = 0.0;
  std::string sim_combo = "1", sim_out = "sim_out";
  simulate->add_option("--density", sim_density, "veh/km");
  simulate->add_option("-p,--penetration", sim_p, "CAV penetration rate");
  simulate->add_option("--combo", sim_combo, "strategy combination id or name");
  simulate->add_option("-o,--output", sim_out, "output directory");

  // verify-prob ------------------------------------------------------------
  auto* vprob = app.add_subcommand("verify-prob", "check the class-probability model against simulation");
  int prob_runs = 200;
  std::size_t prob_vehicles = 100, prob_size = 4;
  double prob_lo = 0.01, prob_hi = 0.99, prob_step = 0.01;
  std::string prob_intensities = "0,1", prob_out = "verify_prob";
  std::uint64_t prob_seed = 0;
  vprob->add_option("--runs", prob_runs, "sequences per penetration value");
  vprob->add_option("--vehicles", prob_vehicles, "vehicles per sequence");
  vprob->add_option("--size", prob_size, "maximum platoon size");
  vprob->add_option("--p-min", prob_lo);
  vprob->add_option("--p-max", prob_hi);
  vprob->add_option("--p-step", prob_step);
  vprob->add_option("--intensities", prob_intensities, "platoon intensity list");
  vprob->add_option("--seed", prob_seed);
  vprob->add_option("-o,--output", prob_out, "output directory");

  // verify-stability -------------------------------------------------------
  auto* vstab = app.add_subcommand("verify-stability", "string-stability margins and VTG2 region");
  std::string stab_strategies = "VTG1,VTG2", stab_out = "verify_stability";
  double stab_vref = 15.0, stab_vlo = 0.5, stab_vhi = 33.3, stab_vstep = 0.1, stab_h = 0.6;
  vstab->add_option("--strategies", stab_strategies, "subset of CS,CTG,VTG1,VTG2");
  vstab->add_option("--v-ref", stab_vref, "reference equilibrium speed for the margin column");
  vstab->add_option("--v-min", stab_vlo);
  vstab->add_option("--v-max", stab_vhi);
  vstab->add_option("--v-step", stab_vstep);
  vstab->add_option("--time-gap", stab_h, "CTG time gap");
  vstab->add_option("-o,--output", stab_out, "output directory");

  // curves -----------------------------------------------------------------
  auto* curves = app.add_subcommand("curves", "equilibrium fuel and emission curves");
  double curve_lo = 0.5, curve_hi = 33.3, curve_step = 0.1;
  std::string curve_out = "curves";
  curves->add_option("--v-min", curve_lo);
  curves->add_option("--v-max", curve_hi);
  curves->add_option("--v-step", curve_step);
  curves->add_option("-o,--output", curve_out, "output directory");

  // plot-data --------------------------------------------------------------
  auto* plot = app.add_subcommand("plot-data", "pivot a metrics table into per-figure CSVs");
  std::string plot_in, plot_out = "plot_data";
  plot->add_option("-m,--metrics", plot_in, "metrics.csv from sweep")->required()->check(CLI::ExistingFile);
  plot->add_option("-o,--output", plot_out, "output directory");

  // sequence ---------------------------------------------------------------
  auto* sequence = app.add_subcommand("sequence", "generate one labeled vehicle sequence");
  FleetSpec seq_spec;
  std::string seq_out;
  sequence->add_option("-n,--vehicles", seq_spec.n_vehicles);
  sequence->add_option("-p,--penetration", seq_spec.penetration);
  sequence->add_option("--intensity", seq_spec.intensity);
  sequence->add_option("--size", seq_spec.max_platoon_size);
  sequence->add_option("--seed", seq_spec.seed);
  sequence->add_option("-o,--output", seq_out, "CSV file (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      SweepSpec spec = SweepSpec::full_grid();
      sweep_flags.apply(spec);
      if (!sweep_out.empty()) spec.output_dir = sweep_out;
      if (sweep_jobs > 0) spec.parallelism = sweep_jobs;
      if (sweep_reps > 0) spec.replications = sweep_reps;
      spec.validate();
      ensure_dir(spec.output_dir);
      const auto results = run_sweep(spec);
      const CsvTable table = metrics_table(results);
      table.write_file(spec.output_dir / "metrics.csv", metrics_keys());
      std::size_t failed = 0;
      for (const auto& r : results) failed += r.status != "ok";
      std::cout << "wrote " << results.size() << " rows to " << (spec.output_dir / "metrics.csv").string();
      if (failed) std::cout << " (" << failed << " cells not ok, see status column)";
      std::cout << "\n";
    } else if (*simulate) {
      SweepSpec spec;
      sim_flags.apply(spec);
      SimConfig cfg = spec.base;
      cfg.density = sim_density;
      cfg.penetration = sim_p;
      cfg.combo_id = parse_combos(sim_combo).at(0);
      const fs::path dir = sim_out;
      ensure_dir(dir);
      const RingSetup setup = init_state(cfg);
      write_stream_file(dir / "sequence.csv",
                        [&](std::ostream& os) { write_sequence(os, setup.labels, cfg.max_platoon_size); });
      write_stream_file(dir / "strategy_map.csv", [&](std::ostream& os) { write_strategy_map(os, setup.assignment); });
      const TrajectoryLog log = run(cfg, setup);
      write_stream_file(dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory(os, log); });
      write_stream_file(dir / "violations.csv", [&](std::ostream& os) { write_violations(os, log); });
      const auto safety = safety_scan(log);
      const auto fp = fleet_footprint(log.samples);
      std::cout << "steps " << log.steps_executed << ", mean speed " << format_double(fp.mean_speed) << " m/s, NFF "
                << optional_cell(fp.nff) << " g/km, violations " << safety.violation_events << ", min gap "
                << format_double(safety.min_gap) << " m\n";
    } else if (*vprob) {
      const fs::path dir = prob_out;
      ensure_dir(dir);
      const auto grid = linspace_step(prob_lo, prob_hi, prob_step);
      CsvTable fit;
      for (double o : parse_doubles(prob_intensities)) {
        const auto rep = verify_probability_model(grid, o, prob_runs, prob_vehicles, prob_size, prob_seed);
        append_fit_rows(fit, rep);
        probability_curves(rep).write_file(dir / ("curves_O" + number_tag(o) + ".csv"), {0});
        std::cout << "O=" << format_double(o) << "  LV1 r2=" << format_double(rep.lv1.r_squared)
                  << " rmse=" << format_double(rep.lv1.rmse) << "  LV2 r2=" << format_double(rep.lv2.r_squared)
                  << " rmse=" << format_double(rep.lv2.rmse) << "  PV r2=" << format_double(rep.pv.r_squared)
                  << " rmse=" << format_double(rep.pv.rmse) << (rep.note.empty() ? "" : "  (" + rep.note + ")")
                  << "\n";
      }
      fit.write_file(dir / "fit.csv");
    } else if (*vstab) {
      const fs::path dir = stab_out;
      ensure_dir(dir);
      const auto strategies = parse_strategies(stab_strategies);
      const auto speeds = linspace_step(stab_vlo, stab_vhi, stab_vstep);
      const auto rows = verify_stability(strategies, ControllerParams{}, speeds, stab_vref, stab_h);
      const CsvTable report = stability_table(rows);
      report.write_file(dir / "stability.csv");
      region_table(rows).write_file(dir / "region.csv");
      report.write(std::cout);
    } else if (*curves) {
      const fs::path dir = curve_out;
      ensure_dir(dir);
      const auto speeds = linspace_step(curve_lo, curve_hi, curve_step);
      equilibrium_table(speeds).write_file(dir / "equilibrium.csv", {0});
      std::cout << "wrote " << speeds.size() << " rows to " << (dir / "equilibrium.csv").string() << "\n";
    } else if (*plot) {
      std::ifstream in(plot_in);
      const CsvTable metrics = CsvTable::read(in);
      if (metrics.rows.empty()) {
        std::cerr << "warning: metrics table is empty, nothing written\n";
        return 0;
      }
      const auto files = emit_plot_data(metrics, plot_out);
      std::cout << "wrote " << files.size() << " files to " << plot_out << "\n";
    } else if (*sequence) {
      const auto labels = generate_sequence(seq_spec);
      if (seq_out.empty()) {
        write_sequence(std::cout, labels, seq_spec.max_platoon_size);
      } else {
        write_stream_file(seq_out, [&](std::ostream& os) { write_sequence(os, labels, seq_spec.max_platoon_size); });
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
