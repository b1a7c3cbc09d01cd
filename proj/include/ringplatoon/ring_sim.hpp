#pragma once

// Fixed-step single-lane ring road engine.
//
// Vehicle i follows vehicle i-1 and vehicle 0 follows vehicle N-1. Positions
// are integrated on an unwrapped arc coordinate so that gaps stay exact even
// when vehicles overlap; they are wrapped only for output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ringplatoon/controllers.hpp"
#include "ringplatoon/csv.hpp"
#include "ringplatoon/fleet_composition.hpp"
#include "ringplatoon/platoon_manager.hpp"

namespace ringplatoon {

struct SimConfig {
  double ring_length_m = 1000.0;
  double dt_s = 0.1;
  double duration_s = 3600.0;
  double warmup_s = 1800.0;
  double v_max = 33.3;
  double a_max = 1.0;
  double a_min = -5.0;
  double density = 55.0;  // veh/km
  double penetration = 0.0;
  int combo_id = 1;
  std::size_t max_platoon_size = 4;
  std::uint64_t seed = 0;
  int record_every_steps = 10;
  double vehicle_length = 5.0;
  double controller_gap_floor = 0.01;  // m, lower bound on gaps fed to controllers
  ControllerParams params;
  TimeGaps time_gaps;

  std::size_t vehicle_count() const {
    return static_cast<std::size_t>(std::llround(density * ring_length_m / 1000.0));
  }
  long long total_steps() const { return std::llround(duration_s / dt_s); }
  long long warmup_steps() const { return std::llround(warmup_s / dt_s); }

  void validate() const {
    if (!(dt_s > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
    if (!(ring_length_m > 0.0)) throw std::invalid_argument("SimConfig: ring length must be positive");
    if (!(duration_s > 0.0)) throw std::invalid_argument("SimConfig: duration must be positive");
    if (!(warmup_s >= 0.0 && warmup_s < duration_s))
      throw std::invalid_argument("SimConfig: warmup must lie in [0, duration)");
    if (vehicle_count() < 1) throw std::invalid_argument("SimConfig: density yields no vehicles");
    if (!(penetration >= 0.0 && penetration <= 1.0))
      throw std::domain_error("SimConfig: penetration must lie in [0, 1]");
    if (record_every_steps < 1) throw std::invalid_argument("SimConfig: record_every_steps must be >= 1");
    if (!(a_min < 0.0 && a_max > 0.0 && v_max > 0.0)) throw std::invalid_argument("SimConfig: invalid bounds");
    combo_by_id(combo_id);
    params.vtg.validate(vehicle_length, params.linear.d0, params.bdbm.v_free);
  }
};

struct RingState {
  double t = 0.0;
  std::vector<double> s;  // unwrapped arc position of the front bumper, m
  std::vector<double> v;
  std::vector<double> a;

  std::size_t size() const { return s.size(); }
};

/// Bumper gap of every vehicle to its predecessor.
inline std::vector<double> ring_gaps(const RingState& st, double ring_length, double vehicle_length) {
  const std::size_t n = st.size();
  std::vector<double> gaps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = i == 0 ? st.s[n - 1] + ring_length - st.s[0] : st.s[i - 1] - st.s[i];
    gaps[i] = dx - vehicle_length;
  }
  return gaps;
}

/// Fleet layout, platoons, strategies and initial kinematics.
struct RingSetup {
  std::vector<VehicleClass> labels;
  std::vector<Platoon> platoons;
  std::vector<VehicleAssignment> assignment;
  RingState state;
};

inline RingSetup make_setup(std::vector<VehicleClass> labels, const SimConfig& cfg) {
  RingSetup setup;
  setup.labels = std::move(labels);
  if (std::any_of(setup.labels.begin(), setup.labels.end(), is_cav))
    setup.platoons = form_platoons(setup.labels, cfg.max_platoon_size);
  setup.assignment = assign_strategies(setup.labels, setup.platoons, combo_by_id(cfg.combo_id), cfg.time_gaps);
  return setup;
}

/// Evenly spaced vehicles at rest; CAVs gathered into one block chunked into
/// platoons of the configured maximum size.
inline RingSetup init_state(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.vehicle_count();
  const double spacing = cfg.ring_length_m / static_cast<double>(n);
  if (spacing < cfg.vehicle_length)
    throw std::invalid_argument("init_state: density leaves less than one vehicle length per vehicle");

  FleetSpec fleet;
  fleet.n_vehicles = n;
  fleet.penetration = cfg.penetration;
  fleet.intensity = 1.0;
  fleet.max_platoon_size = cfg.max_platoon_size;
  fleet.seed = cfg.seed;
  RingSetup setup = make_setup(generate_sequence(fleet), cfg);

  setup.state.s.resize(n);
  setup.state.v.assign(n, 0.0);
  setup.state.a.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) setup.state.s[i] = static_cast<double>(n - 1 - i) * spacing;
  return setup;
}

/// Ring whose vehicles all sit at their own strategy's equilibrium gap for
/// speed `v_e`. Overwrites `cfg.ring_length_m` with the resulting length.
inline RingSetup equilibrium_setup(std::vector<VehicleClass> labels, SimConfig& cfg, double v_e) {
  RingSetup setup = make_setup(std::move(labels), cfg);
  const std::size_t n = setup.labels.size();
  std::vector<double> gaps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = setup.assignment[i];
    gaps[i] = equilibrium_gap(a.strategy, v_e, cfg.params, a.time_gap);
  }
  setup.state.s.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) setup.state.s[i] = setup.state.s[i - 1] - gaps[i] - cfg.vehicle_length;
  cfg.ring_length_m = 0.0;
  for (double g : gaps) cfg.ring_length_m += g + cfg.vehicle_length;
  const double shift = -setup.state.s[n - 1];
  for (double& s : setup.state.s) s += shift;
  setup.state.v.assign(n, v_e);
  setup.state.a.assign(n, 0.0);
  return setup;
}

struct Violation {
  double t = 0.0;
  std::size_t follower = 0;
  double gap = 0.0;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Controller inputs for vehicle `i` given the current gaps.
inline ControlContext control_context(const RingState& st, std::span<const double> gaps, std::size_t i,
                                      const VehicleAssignment& who, const SimConfig& cfg) {
  const std::size_t n = st.size();
  const std::size_t pred = i == 0 ? n - 1 : i - 1;
  ControlContext ctx;
  ctx.self = {st.s[i], st.v[i], st.a[i]};
  ctx.predecessor = {st.s[pred], st.v[pred], st.a[pred]};
  ctx.gap = std::max(gaps[i], cfg.controller_gap_floor);
  ctx.length = cfg.vehicle_length;
  if (who.leader) {
    LeaderRef lead;
    const std::size_t l = *who.leader;
    lead.state = {st.s[l], st.v[l], st.a[l]};
    lead.hops = who.hops;
    double distance = 0.0;
    std::size_t j = i;
    for (int h = 0; h < who.hops; ++h) {
      distance += gaps[j] + cfg.vehicle_length;
      j = j == 0 ? n - 1 : j - 1;
    }
    lead.distance = distance;
    ctx.leader = lead;
  }
  if (who.rear_gap_vehicle) ctx.follower_gap = std::max(gaps[*who.rear_gap_vehicle], cfg.controller_gap_floor);
  return ctx;
}

/// Advances every vehicle by one step using the previous state for all
/// controller inputs. Desired accelerations are clamped to [a_min, a_max],
/// speeds to [0, v_max], and the stored acceleration is the one actually
/// realized over the step.
inline void step(RingState& st, std::span<const VehicleAssignment> assignment, const SimConfig& cfg,
                 long long step_index) {
  const std::size_t n = st.size();
  const std::vector<double> gaps = ring_gaps(st, cfg.ring_length_m, cfg.vehicle_length);
  std::vector<double> v_next(n), a_next(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ControlContext ctx = control_context(st, gaps, i, assignment[i], cfg);
    const double u = desired_accel(assignment[i].strategy, ctx, cfg.params, assignment[i].time_gap);
    if (!std::isfinite(u)) {
      std::ostringstream msg;
      msg << "non-finite acceleration at t=" << st.t << " for vehicle " << i << " ("
          << to_string(assignment[i].strategy) << "): v=" << ctx.self.v << " a=" << ctx.self.a
          << " gap=" << ctx.gap << " pred_v=" << ctx.predecessor.v << " pred_a=" << ctx.predecessor.a;
      throw SimulationError(msg.str());
    }
    const double a_cmd = std::clamp(u, cfg.a_min, cfg.a_max);
    v_next[i] = std::clamp(st.v[i] + a_cmd * cfg.dt_s, 0.0, cfg.v_max);
    a_next[i] = (v_next[i] - st.v[i]) / cfg.dt_s;
  }
  for (std::size_t i = 0; i < n; ++i) {
    st.s[i] += 0.5 * (st.v[i] + v_next[i]) * cfg.dt_s;
    st.v[i] = v_next[i];
    st.a[i] = a_next[i];
  }
  st.t = static_cast<double>(step_index) * cfg.dt_s;
}

struct TrajectoryLog {
  std::size_t n_vehicles = 0;
  double ring_length = 0.0;
  long long steps_executed = 0;
  std::vector<double> times;
  std::vector<Kinematics> samples;  // times.size() x n_vehicles, x wrapped to [0, ring)
  std::vector<Violation> violations;
  double min_gap = std::numeric_limits<double>::infinity();  // over every step

  std::span<const Kinematics> at(std::size_t record) const {
    return std::span<const Kinematics>(samples).subspan(record * n_vehicles, n_vehicles);
  }
};

inline void record(TrajectoryLog& log, const RingState& st, double ring_length) {
  log.times.push_back(st.t);
  for (std::size_t i = 0; i < st.size(); ++i) {
    double x = std::fmod(st.s[i], ring_length);
    if (x < 0.0) x += ring_length;
    log.samples.push_back({x, st.v[i], st.a[i]});
  }
}

inline TrajectoryLog run(const SimConfig& cfg, RingSetup setup) {
  cfg.validate();
  RingState& st = setup.state;
  TrajectoryLog log;
  log.n_vehicles = st.size();
  log.ring_length = cfg.ring_length_m;
  const long long steps = cfg.total_steps();
  const long long warmup = cfg.warmup_steps();

  auto scan = [&] {
    const auto gaps = ring_gaps(st, cfg.ring_length_m, cfg.vehicle_length);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      log.min_gap = std::min(log.min_gap, gaps[i]);
      if (gaps[i] < 0.0) log.violations.push_back({st.t, i, gaps[i]});
    }
  };
  auto maybe_record = [&](long long k) {
    if (k >= warmup && (k - warmup) % cfg.record_every_steps == 0) record(log, st, cfg.ring_length_m);
  };

  scan();
  maybe_record(0);
  for (long long k = 1; k <= steps; ++k) {
    step(st, setup.assignment, cfg, k);
    ++log.steps_executed;
    scan();
    maybe_record(k);
  }
  return log;
}

inline TrajectoryLog run(const SimConfig& cfg) { return run(cfg, init_state(cfg)); }

struct SafetySummary {
  std::size_t violation_events = 0;
  std::size_t vehicles_affected = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  std::optional<double> first_violation_t;
};

inline SafetySummary safety_scan(const TrajectoryLog& log) {
  SafetySummary s;
  s.violation_events = log.violations.size();
  s.min_gap = log.min_gap;
  std::vector<bool> hit(log.n_vehicles, false);
  for (const auto& v : log.violations) {
    if (v.follower < hit.size() && !hit[v.follower]) {
      hit[v.follower] = true;
      ++s.vehicles_affected;
    }
    if (!s.first_violation_t || v.t < *s.first_violation_t) s.first_violation_t = v.t;
    s.min_gap = std::min(s.min_gap, v.gap);
  }
  return s;
}

/// t, vehicle_index, x, v, a
inline void write_trajectory(std::ostream& os, const TrajectoryLog& log) {
  CsvWriter csv(os, {"t", "vehicle_index", "x", "v", "a"});
  for (std::size_t r = 0; r < log.times.size(); ++r) {
    const auto rec = log.at(r);
    for (std::size_t i = 0; i < rec.size(); ++i) csv.row(log.times[r], i, rec[i].x, rec[i].v, rec[i].a);
  }
}

/// t, follower_index, gap
inline void write_violations(std::ostream& os, const TrajectoryLog& log) {
  CsvWriter csv(os, {"t", "follower_index", "gap"});
  for (const auto& v : log.violations) csv.row(v.t, v.follower, v.gap);
}

}  // namespace ringplatoon
