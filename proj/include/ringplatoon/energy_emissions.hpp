#pragma once

// Fuel and pollutant post-processing of trajectories.
//
// Fuel: vehicle specific power (VSP, kW/ton, flat road) feeds a normalized
// fuel rate (NFR, g/s); the fleet figure is the normalized fuel factor
// (NFF, g/km). Emissions: an instantaneous regression in speed and
// acceleration per pollutant, floored at zero, with separate coefficient
// rows for hard deceleration on NOx and VOC.
//
// Note: the NFR curve is discontinuous at VSP = 0. Positive VSP follows the
// power law (which tends to 0), negative VSP is pinned at 1 g/s.

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ringplatoon/controllers.hpp"

namespace ringplatoon {

inline double vsp(double v, double a) { return v * (1.1 * a + 0.132) + 0.000302 * v * v * v; }

inline double nfr(double vsp_value) {
  if (vsp_value < 0.0) return 1.0;
  return 1.71 * std::pow(vsp_value, 0.42);
}

enum class Pollutant { CO2, NOx, VOC, PM };
inline constexpr std::array<Pollutant, 4> kPollutants = {Pollutant::CO2, Pollutant::NOx, Pollutant::VOC,
                                                         Pollutant::PM};

inline std::string_view to_string(Pollutant p) {
  switch (p) {
    case Pollutant::CO2: return "CO2";
    case Pollutant::NOx: return "NOx";
    case Pollutant::VOC: return "VOC";
    case Pollutant::PM: return "PM";
  }
  return "?";
}

inline Pollutant pollutant_from_string(std::string_view name) {
  for (Pollutant p : kPollutants)
    if (to_string(p) == name) return p;
  throw std::invalid_argument("unknown pollutant tag");
}

/// f1..f6 for E = f1 + f2 v + f3 v^2 + f4 a + f5 a^2 + f6 v a.
using EmissionRow = std::array<double, 6>;

struct EmissionCoeffs {
  EmissionRow normal;                // a >= threshold, or the only row
  std::optional<EmissionRow> braking;  // a < threshold
  double threshold = -0.5;           // m/s^2
};

inline const EmissionCoeffs& emission_coeffs(Pollutant p) {
  static const EmissionCoeffs co2{{5.53e-01, 1.61e-01, -2.89e-03, 2.66e-01, 5.11e-01, 1.83e-01}, std::nullopt};
  static const EmissionCoeffs nox{{6.19e-04, 8.00e-05, -4.03e-06, -4.13e-04, 3.80e-04, 1.77e-04},
                                  EmissionRow{2.17e-04, 0, 0, 0, 0, 0}};
  static const EmissionCoeffs voc{{4.47e-03, 7.32e-07, -2.87e-08, -3.41e-06, 4.94e-06, 1.66e-06},
                                  EmissionRow{2.63e-03, 0, 0, 0, 0, 0}};
  static const EmissionCoeffs pm{{0, 1.57e-05, -9.21e-07, 0, 3.75e-05, 1.89e-05}, std::nullopt};
  switch (p) {
    case Pollutant::CO2: return co2;
    case Pollutant::NOx: return nox;
    case Pollutant::VOC: return voc;
    case Pollutant::PM: return pm;
  }
  throw std::invalid_argument("unknown pollutant tag");
}

/// Instantaneous emission rate in g/s.
inline double emission_rate(double v, double a, Pollutant p) {
  const EmissionCoeffs& c = emission_coeffs(p);
  const EmissionRow& f = (c.braking && a < c.threshold) ? *c.braking : c.normal;
  const double e = f[0] + f[1] * v + f[2] * v * v + f[3] * a + f[4] * a * a + f[5] * v * a;
  return e > 0.0 ? e : 0.0;
}

/// Running sums over (v, a) samples. Every sample carries equal weight, so
/// merging accumulators over disjoint chunks gives the same footprint as one
/// pass over the whole log.
struct FootprintAccumulator {
  std::size_t count = 0;
  double sum_v = 0.0;
  double sum_nfr = 0.0;
  std::array<double, 4> sum_emission{};

  void add(double v, double a) {
    ++count;
    sum_v += v;
    sum_nfr += nfr(vsp(v, a));
    for (std::size_t k = 0; k < kPollutants.size(); ++k) sum_emission[k] += emission_rate(v, a, kPollutants[k]);
  }

  void merge(const FootprintAccumulator& o) {
    count += o.count;
    sum_v += o.sum_v;
    sum_nfr += o.sum_nfr;
    for (std::size_t k = 0; k < sum_emission.size(); ++k) sum_emission[k] += o.sum_emission[k];
  }
};

struct FleetFootprint {
  double mean_speed = 0.0;  // m/s
  double mean_nfr = 0.0;    // g/s
  /// Per-km figures are absent when the mean speed is zero.
  std::optional<double> nff;  // g/km
  std::array<std::optional<double>, 4> emission_per_km{};
  std::array<double, 4> mean_emission_rate{};  // g/s

  std::optional<double> per_km(Pollutant p) const { return emission_per_km[static_cast<std::size_t>(p)]; }
};

/// Mean rates over all samples, converted to per-km figures with the mean
/// speed in km/h: per_km = 3600 * rate / v_kmh.
inline FleetFootprint finalize(const FootprintAccumulator& acc) {
  if (acc.count == 0) throw std::invalid_argument("fleet footprint: no samples");
  const double n = static_cast<double>(acc.count);
  FleetFootprint f;
  f.mean_speed = acc.sum_v / n;
  f.mean_nfr = acc.sum_nfr / n;
  const double v_kmh = f.mean_speed * 3.6;
  for (std::size_t k = 0; k < kPollutants.size(); ++k) f.mean_emission_rate[k] = acc.sum_emission[k] / n;
  if (v_kmh > 0.0) {
    f.nff = 3600.0 * f.mean_nfr / v_kmh;
    for (std::size_t k = 0; k < kPollutants.size(); ++k) f.emission_per_km[k] = 3600.0 * f.mean_emission_rate[k] / v_kmh;
  }
  return f;
}

inline FleetFootprint fleet_footprint(std::span<const Kinematics> samples) {
  FootprintAccumulator acc;
  for (const auto& s : samples) acc.add(s.v, s.a);
  return finalize(acc);
}

struct FuelSummary {
  double mean_nfr = 0.0;
  std::optional<double> nff;
};

inline FuelSummary fleet_fuel(std::span<const Kinematics> samples) {
  const FleetFootprint f = fleet_footprint(samples);
  return {f.mean_nfr, f.nff};
}

inline std::array<std::optional<double>, 4> fleet_emissions(std::span<const Kinematics> samples) {
  return fleet_footprint(samples).emission_per_km;
}

struct EquilibriumPoint {
  double v = 0.0;
  double nff = 0.0;
  std::array<double, 4> emission_per_km{};
};

/// Constant-speed, zero-acceleration footprint at each grid speed.
inline std::vector<EquilibriumPoint> equilibrium_curves(std::span<const double> speeds) {
  std::vector<EquilibriumPoint> out;
  out.reserve(speeds.size());
  for (double v : speeds) {
    if (!(v > 0.0)) throw std::domain_error("equilibrium_curves: speeds must be positive");
    FootprintAccumulator acc;
    acc.add(v, 0.0);
    const FleetFootprint f = finalize(acc);
    EquilibriumPoint p;
    p.v = v;
    p.nff = *f.nff;
    for (std::size_t k = 0; k < kPollutants.size(); ++k) p.emission_per_km[k] = *f.emission_per_km[k];
    out.push_back(p);
  }
  return out;
}

}  // namespace ringplatoon
