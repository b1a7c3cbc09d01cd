#pragma once

// Longitudinal car-following laws for human-driven vehicles (IDM) and the
// CAV spacing policies: constant spacing (CS), constant time gap (CTG), two
// variable time gap forms (VTG1, VTG2) and balanced spacing (BS, via the
// bidirectional distance-balanced model).
//
// All functions return the *desired* acceleration. Actuator limits are
// applied by the simulator, not here.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace ringplatoon {

enum class Strategy { HV, CS, CTG, VTG1, VTG2, BS };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::HV: return "HV";
    case Strategy::CS: return "CS";
    case Strategy::CTG: return "CTG";
    case Strategy::VTG1: return "VTG1";
    case Strategy::VTG2: return "VTG2";
    case Strategy::BS: return "BS";
  }
  return "?";
}

struct Kinematics {
  double x = 0.0;  // m, arc position
  double v = 0.0;  // m/s
  double a = 0.0;  // m/s^2
};

/// Platoon leader as seen from a CS follower (leader-predecessor-follower
/// topology).
struct LeaderRef {
  Kinematics state;
  int hops = 1;           // vehicles from the leader to self, self included
  double distance = 0.0;  // forward front-bumper distance from self to leader, m
};

struct ControlContext {
  Kinematics self;
  Kinematics predecessor;
  double gap = 0.0;     // bumper-to-bumper distance to the predecessor, m
  double length = 5.0;  // vehicle length L, m
  std::optional<LeaderRef> leader;
  std::optional<double> follower_gap;  // gap behind self (or behind own platoon), m

  /// Front-bumper to front-bumper distance to the predecessor.
  double headway_distance() const { return gap + length; }
  double relative_speed() const { return predecessor.v - self.v; }
};

struct CsGains {
  double q1 = 0.4;
  double q2 = 0.1;
  double q3 = 0.9;
  double q4 = 0.6;
  double d_pair = 0.0;
  double d0 = 2.0;
};

/// Gains shared by CTG, VTG1 and VTG2.
struct LinearGains {
  double k_e = 0.1;
  double k_v = 0.98;
  double k = 0.7;
  double d0 = 2.0;
};

struct VtgParams {
  double c1 = 0.6;        // s
  double mu = 0.1;        // s
  double eta = 0.3;       // s, engine constant
  double d_vtg2 = 7.0;    // m
  double m_speed = 8.83;  // m/s
  double v_eps = 0.1;     // m/s, below this the VTG1 ratio term is dropped

  /// Throws if c1 violates the VTG1 admissibility bound
  /// c1 > 2*eta - min(mu, (L + d0) / v_f).
  void validate(double length, double d0, double v_free) const {
    const double bound = 2.0 * eta - std::min(mu, (length + d0) / v_free);
    if (!(c1 > bound)) throw std::invalid_argument("VtgParams: c1 violates the admissibility bound");
  }
};

struct BdbmParams {
  double v_free = 33.3;  // m/s
  double T = 2.5;        // s
  double a_max = 1.0;    // m/s^2
  double b = 2.0;        // m/s^2
  double d0 = 2.0;       // m
  double lambda = 0.5;
  double length = 5.0;   // m
  double gap_floor = 0.1;  // m, lower bound for the gap in the interaction ratio
};

struct ControllerParams {
  CsGains cs;
  LinearGains linear;
  VtgParams vtg;
  BdbmParams bdbm;
};

// ---------------------------------------------------------------------------
// Desired spacing

inline double vtg1_time_gap(double v_self, double v_pred, const VtgParams& p) {
  if (v_self < p.v_eps) return p.c1;
  return p.c1 - p.mu * (v_pred / v_self - 1.0);
}

inline double vtg2_desired_spacing(double v_self, const VtgParams& p, double length) {
  return p.d_vtg2 * std::exp(v_self / (2.0 * p.m_speed)) - length;
}

/// IDM/BDBM desired gap S_i. Clamped at zero so that a large closing speed
/// cannot turn the interaction term into an attraction.
inline double bdbm_desired_gap(const ControlContext& ctx, const BdbmParams& p, double lambda) {
  const double v = ctx.self.v;
  double s = p.d0 + v * p.T - v * ctx.relative_speed() / (2.0 * std::sqrt(p.a_max * p.b));
  if (lambda != 0.0 && ctx.follower_gap) s += lambda * (*ctx.follower_gap - ctx.gap);
  return std::max(0.0, s);
}

/// Desired bumper-to-bumper gap for a strategy. `time_gap` is the CTG h.
inline double desired_spacing(Strategy strategy, const ControlContext& ctx, const ControllerParams& params,
                              double time_gap = 0.6) {
  switch (strategy) {
    case Strategy::CS: return params.cs.d_pair + params.cs.d0;
    case Strategy::CTG: return ctx.self.v * time_gap + params.linear.d0;
    case Strategy::VTG1:
      return ctx.self.v * vtg1_time_gap(ctx.self.v, ctx.predecessor.v, params.vtg) + params.linear.d0;
    case Strategy::VTG2: return vtg2_desired_spacing(ctx.self.v, params.vtg, ctx.length);
    case Strategy::BS: return bdbm_desired_gap(ctx, params.bdbm, params.bdbm.lambda);
    case Strategy::HV: return bdbm_desired_gap(ctx, params.bdbm, 0.0);
  }
  throw std::logic_error("desired_spacing: unknown strategy");
}

// ---------------------------------------------------------------------------
// Acceleration laws

/// Constant spacing under leader-predecessor-follower communication.
inline double cs_accel(const ControlContext& ctx, const CsGains& g) {
  if (!ctx.leader) throw std::invalid_argument("cs_accel: CS requires a platoon leader reference");
  const LeaderRef& lead = *ctx.leader;
  if (lead.hops < 1) throw std::invalid_argument("cs_accel: leader hop count must be >= 1");

  const double norm = 1.0 / (1.0 + g.q3);
  const double pair_spacing = ctx.length + g.d_pair + g.d0;
  const double pred_error = ctx.headway_distance() - pair_spacing;
  const double leader_error = lead.distance - lead.hops * pair_spacing;

  return norm * (ctx.predecessor.a + g.q3 * lead.state.a) +
         norm * (g.q1 + g.q2) * (ctx.predecessor.v - ctx.self.v) +
         norm * g.q2 * g.q1 * pred_error +
         norm * (g.q4 + g.q2 * g.q3) * (lead.state.v - ctx.self.v) +
         norm * g.q2 * g.q4 * leader_error;
}

inline double ctg_accel(const ControlContext& ctx, const LinearGains& g, double time_gap) {
  if (!(time_gap > 0.0)) throw std::invalid_argument("ctg_accel: time gap must be positive");
  const double e = ctx.headway_distance() - ctx.length - ctx.self.v * time_gap - g.d0;
  return g.k_e * e + g.k_v * ctx.relative_speed() + g.k * ctx.predecessor.a;
}

inline double vtg1_accel(const ControlContext& ctx, const LinearGains& g, const VtgParams& p) {
  const double dx = ctx.headway_distance();
  double e;
  if (ctx.self.v < p.v_eps)
    e = dx - ctx.length - p.c1 * ctx.self.v - g.d0;
  else  // expanded form, affine in the state
    e = dx - ctx.length - (p.c1 + p.mu) * ctx.self.v + p.mu * ctx.predecessor.v - g.d0;
  return g.k_e * e + g.k_v * ctx.relative_speed() + g.k * ctx.predecessor.a;
}

inline double vtg2_accel(const ControlContext& ctx, const LinearGains& g, const VtgParams& p) {
  const double e = ctx.headway_distance() - p.d_vtg2 * std::exp(ctx.self.v / (2.0 * p.m_speed));
  return g.k_e * e + g.k_v * ctx.relative_speed() + g.k * ctx.predecessor.a;
}

/// Bidirectional distance-balanced model. Uses `ctx.follower_gap` for the
/// rear gap; without one the balance term is zero.
inline double bdbm_accel(const ControlContext& ctx, const BdbmParams& p) {
  const double s = bdbm_desired_gap(ctx, p, p.lambda);
  const double d = std::max(ctx.gap, p.gap_floor);
  const double ratio = s / d;
  const double vr = ctx.self.v / p.v_free;
  return p.a_max * (1.0 - vr * vr * vr * vr - ratio * ratio);
}

/// Human driver: the balanced-spacing model with the balance weight removed,
/// i.e. the intelligent driver model with the same parameters.
inline double hv_accel(const ControlContext& ctx, BdbmParams p) {
  p.lambda = 0.0;
  ControlContext plain = ctx;
  plain.follower_gap.reset();
  return bdbm_accel(plain, p);
}

/// Dispatches to the acceleration law for `strategy`.
inline double desired_accel(Strategy strategy, const ControlContext& ctx, const ControllerParams& params,
                            double time_gap = 0.6) {
  switch (strategy) {
    case Strategy::HV: return hv_accel(ctx, params.bdbm);
    case Strategy::CS: return cs_accel(ctx, params.cs);
    case Strategy::CTG: return ctg_accel(ctx, params.linear, time_gap);
    case Strategy::VTG1: return vtg1_accel(ctx, params.linear, params.vtg);
    case Strategy::VTG2: return vtg2_accel(ctx, params.linear, params.vtg);
    case Strategy::BS: return bdbm_accel(ctx, params.bdbm);
  }
  throw std::logic_error("desired_accel: unknown strategy");
}

/// Gap at which a homogeneous stream of this strategy cruises at `v` with
/// zero acceleration (balanced rear gap for BS, leader at the same speed
/// for CS).
inline double equilibrium_gap(Strategy strategy, double v, const ControllerParams& params,
                              double time_gap = 0.6) {
  switch (strategy) {
    case Strategy::CS: return params.cs.d_pair + params.cs.d0;
    case Strategy::CTG: return v * time_gap + params.linear.d0;
    case Strategy::VTG1: return params.vtg.c1 * v + params.linear.d0;
    case Strategy::VTG2: return vtg2_desired_spacing(v, params.vtg, params.bdbm.length);
    case Strategy::BS:
    case Strategy::HV: {
      const BdbmParams& p = params.bdbm;
      const double vr = v / p.v_free;
      const double free = 1.0 - vr * vr * vr * vr;
      if (!(free > 0.0)) throw std::domain_error("equilibrium_gap: speed at or above free-flow speed");
      return (p.d0 + v * p.T) / std::sqrt(free);
    }
  }
  throw std::logic_error("equilibrium_gap: unknown strategy");
}

}  // namespace ringplatoon
