#pragma once

// String stability of homogeneous CAV streams in the frequency domain.
//
// A predecessor-following law a = g(v, dx, dv) + k * a_pred, linearized at
// the equilibrium (v_e, dx_e, 0), propagates speed disturbances through
//
//   G(jw) = ((g_dx - k w^2) + j w g_dv) / ((g_dx - w^2) + j w (g_dv - g_v))
//
// and the stream is string stable iff |G(jw)| <= 1 for all w >= 0, which is
// equivalent to 0 <= k <= 1 and g_v^2 - 2 g_v g_dv - 2 (1 - k) g_dx >= 0.

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ringplatoon/controllers.hpp"
#include "ringplatoon/csv.hpp"

namespace ringplatoon {

struct EquilibriumPartials {
  double g_v = 0.0;
  double g_dx = 0.0;
  double g_dv = 0.0;
  double k = 0.0;
  double v_e = 0.0;
  /// Partials ignore part of the law (CS leader coupling).
  bool approximate = false;
};

/// Closed-form partials of `strategy`'s acceleration law with respect to
/// own speed, front-bumper spacing and relative speed (v_pred = v + dv).
inline EquilibriumPartials equilibrium_partials(Strategy strategy, const ControllerParams& params, double v_e,
                                                double time_gap = 0.6) {
  if (!(v_e > 0.0 && v_e <= params.bdbm.v_free))
    throw std::domain_error("equilibrium_partials: v_e must lie in (0, v_free]");
  const LinearGains& lin = params.linear;
  EquilibriumPartials p;
  p.v_e = v_e;
  switch (strategy) {
    case Strategy::CTG:
      p.g_v = -lin.k_e * time_gap;
      p.g_dx = lin.k_e;
      p.g_dv = lin.k_v;
      p.k = lin.k;
      return p;
    case Strategy::VTG1:
      p.g_v = -lin.k_e * params.vtg.c1;
      p.g_dx = lin.k_e;
      p.g_dv = lin.k_e * params.vtg.mu + lin.k_v;
      p.k = lin.k;
      return p;
    case Strategy::VTG2: {
      const double two_m = 2.0 * params.vtg.m_speed;
      p.g_v = -lin.k_e * (params.vtg.d_vtg2 / two_m) * std::exp(v_e / two_m);
      p.g_dx = lin.k_e;
      p.g_dv = lin.k_v;
      p.k = lin.k;
      return p;
    }
    case Strategy::CS: {
      // Leader speed, position and acceleration are held fixed; the
      // leader-position term's dependence on own position is dropped.
      const CsGains& g = params.cs;
      const double norm = 1.0 / (1.0 + g.q3);
      p.g_v = -norm * (g.q4 + g.q2 * g.q3);
      p.g_dx = norm * g.q1 * g.q2;
      p.g_dv = norm * (g.q1 + g.q2);
      p.k = norm;
      p.approximate = true;
      return p;
    }
    case Strategy::BS:
    case Strategy::HV: break;
  }
  throw std::invalid_argument("equilibrium_partials: " + std::string(to_string(strategy)) +
                              " is not a scalar predecessor-following law");
}

inline double transfer_magnitude(const EquilibriumPartials& p, double omega) {
  if (!(omega >= 0.0)) throw std::domain_error("transfer_magnitude: omega must be >= 0");
  const double w2 = omega * omega;
  const std::complex<double> num(p.g_dx - p.k * w2, omega * p.g_dv);
  const std::complex<double> den(p.g_dx - w2, omega * (p.g_dv - p.g_v));
  return std::abs(num) / std::abs(den);
}

struct StabilityVerdict {
  bool stable = false;
  bool k_in_range = false;
  double margin = 0.0;
  bool approximate = false;
};

inline StabilityVerdict string_stable(const EquilibriumPartials& p) {
  StabilityVerdict s;
  s.k_in_range = p.k >= 0.0 && p.k <= 1.0;
  s.margin = p.g_v * p.g_v - 2.0 * p.g_v * p.g_dv - 2.0 * (1.0 - p.k) * p.g_dx;
  s.stable = s.k_in_range && s.margin >= 0.0;
  s.approximate = p.approximate;
  return s;
}

inline StabilityVerdict string_stable(Strategy strategy, const ControllerParams& params, double v_e,
                                      double time_gap = 0.6) {
  return string_stable(equilibrium_partials(strategy, params, v_e, time_gap));
}

/// Maximum of |G(jw)| over log-spaced samples of (0, omega_max].
inline double max_transfer_magnitude(const EquilibriumPartials& p, double omega_min = 1e-4,
                                     double omega_max = 100.0, std::size_t samples = 100000) {
  double best = transfer_magnitude(p, 0.0);
  const double log_lo = std::log(omega_min);
  const double step = (std::log(omega_max) - log_lo) / static_cast<double>(samples - 1);
  for (std::size_t i = 0; i < samples; ++i) best = std::max(best, transfer_magnitude(p, std::exp(log_lo + step * i)));
  return best;
}

struct RegionSample {
  double v_e = 0.0;
  double margin = 0.0;
  bool stable = false;
};

inline std::vector<RegionSample> stability_region(Strategy strategy, const ControllerParams& params,
                                                  std::span<const double> speeds, double time_gap = 0.6) {
  std::vector<RegionSample> out;
  out.reserve(speeds.size());
  for (double v : speeds) {
    const auto verdict = string_stable(strategy, params, v, time_gap);
    out.push_back({v, verdict.margin, verdict.stable});
  }
  return out;
}

/// strategy, v_e, margin, stable
inline void write_region(std::ostream& os, Strategy strategy, std::span<const RegionSample> region) {
  CsvWriter csv(os, {"strategy", "v_e", "margin", "stable"});
  for (const auto& s : region) csv.row(to_string(strategy), s.v_e, s.margin, s.stable);
}

}  // namespace ringplatoon
