#pragma once

// Fleet composition on the ring: which vehicles are human-driven, which are
// connected automated vehicles (CAVs), and which role each CAV plays in its
// platoon. Also carries the closed-form Markov-chain class probabilities and
// the Monte-Carlo tools used to check them.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ringplatoon/random.hpp"

namespace ringplatoon {

enum class VehicleClass { HV, LV1, LV2, PV };

/// Class-agnostic driver type, input to role labeling.
enum class Driver { Human, Automated };

inline std::string_view to_string(VehicleClass c) {
  switch (c) {
    case VehicleClass::HV: return "HV";
    case VehicleClass::LV1: return "LV1";
    case VehicleClass::LV2: return "LV2";
    case VehicleClass::PV: return "PV";
  }
  return "?";
}

inline bool is_cav(VehicleClass c) { return c != VehicleClass::HV; }
inline bool is_platoon_leader(VehicleClass c) {
  return c == VehicleClass::LV1 || c == VehicleClass::LV2;
}

struct FleetSpec {
  std::size_t n_vehicles = 100;
  double penetration = 0.0;  // p
  double intensity = 1.0;    // O
  std::size_t max_platoon_size = 4;  // S
  std::uint64_t seed = 0;

  void validate() const {
    if (n_vehicles < 1) throw std::invalid_argument("FleetSpec: n_vehicles must be >= 1");
    if (!(penetration >= 0.0 && penetration <= 1.0))
      throw std::domain_error("FleetSpec: penetration must lie in [0, 1]");
    if (!(intensity >= 0.0 && intensity <= 1.0))
      throw std::domain_error("FleetSpec: intensity must lie in [0, 1]");
    if (max_platoon_size < 1) throw std::invalid_argument("FleetSpec: max platoon size must be >= 1");
  }
};

/// Number of CAVs placed for a penetration rate: nearest integer, ties up.
inline std::size_t cav_count(std::size_t n_vehicles, double penetration) {
  // 1e-9 absorbs representation error in products like 0.2 * 55.
  return static_cast<std::size_t>(std::floor(penetration * static_cast<double>(n_vehicles) + 0.5 + 1e-9));
}

/// Probabilities that the vehicle behind a vehicle of one type is of another
/// type (A = automated, H = human).
struct TransitionProbs {
  double t_AH = 0.0;
  double t_AA = 1.0;
  double t_HA = 0.0;
  double t_HH = 1.0;
};

inline TransitionProbs transition_probs(double p, double intensity) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("transition_probs: p must lie in [0, 1]");
  if (!(intensity >= 0.0 && intensity <= 1.0))
    throw std::domain_error("transition_probs: intensity must lie in [0, 1]");
  TransitionProbs t;
  t.t_AH = (1.0 - intensity) * (1.0 - p);
  t.t_AA = 1.0 - t.t_AH;
  t.t_HA = (1.0 - intensity) * p;
  t.t_HH = 1.0 - t.t_HA;
  return t;
}

struct ClassDistribution {
  double hv = 0.0;
  double lv1 = 0.0;
  double lv2 = 0.0;
  double pv = 0.0;
  /// Set when the O < 1 formulas were singular (t_AA = 1) and the O = 1
  /// closed form was used instead.
  bool saturated_fallback = false;

  double lv() const { return lv1 + lv2; }
  double cav() const { return lv1 + lv2 + pv; }
};

inline ClassDistribution class_probabilities(double p, double intensity, std::size_t max_platoon_size) {
  if (max_platoon_size < 1) throw std::invalid_argument("class_probabilities: S must be >= 1");
  const TransitionProbs t = transition_probs(p, intensity);
  const double s = static_cast<double>(max_platoon_size);

  ClassDistribution d;
  d.hv = 1.0 - p;
  d.lv1 = (1.0 - p) * t.t_HA;

  auto saturated = [&] {
    d.lv1 = 0.0;
    d.lv2 = p / s;
    d.pv = (s - 1.0) * p / s;
  };

  if (p == 0.0) return d;
  if (intensity == 1.0) {
    saturated();
    return d;
  }
  if (t.t_AH == 0.0) {
    // Only reachable at p = 1 with O < 1: every follower of a CAV is a CAV.
    saturated();
    d.saturated_fallback = true;
    return d;
  }

  // 1 - t_AA^n evaluated through log1p/expm1: t_AA is close to 1 near O -> 1
  // and the direct form cancels catastrophically.
  const double log_aa = std::log1p(-t.t_AH);
  auto one_minus_pow = [&](double n) { return -std::expm1(n * log_aa); };

  const double one_minus_aa_s = one_minus_pow(s);
  const double aa_s = 1.0 - one_minus_aa_s;
  d.lv2 = aa_s * (1.0 - p) * t.t_HA / one_minus_aa_s;
  d.pv = t.t_AA * one_minus_pow(s - 1.0) * (1.0 - p) * t.t_HA / (t.t_AH * one_minus_aa_s);
  return d;
}

/// Assigns platoon roles to a circular HV/CAV sequence. Vehicle i follows
/// vehicle i-1 and vehicle 0 follows the last one.
///
/// Within each maximal CAV run the head is LV1 when it follows an HV, every
/// S-th vehicle after the head is LV2, and everything else is PV. A ring
/// with no HV at all is chunked from index 0 with LV2 chunk heads.
inline std::vector<VehicleClass> label_roles(std::span<const Driver> drivers, std::size_t max_platoon_size) {
  if (max_platoon_size < 1) throw std::invalid_argument("label_roles: S must be >= 1");
  const std::size_t n = drivers.size();
  std::vector<VehicleClass> labels(n, VehicleClass::HV);
  if (n == 0) return labels;

  std::size_t first_hv = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (drivers[i] == Driver::Human) {
      first_hv = i;
      break;
    }
  }

  if (first_hv == n) {
    for (std::size_t i = 0; i < n; ++i)
      labels[i] = (i % max_platoon_size == 0) ? VehicleClass::LV2 : VehicleClass::PV;
    return labels;
  }

  std::size_t run_pos = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t i = (first_hv + k) % n;
    if (drivers[i] == Driver::Human) {
      run_pos = 0;
      continue;
    }
    if (run_pos == 0)
      labels[i] = VehicleClass::LV1;
    else if (run_pos % max_platoon_size == 0)
      labels[i] = VehicleClass::LV2;
    else
      labels[i] = VehicleClass::PV;
    ++run_pos;
  }
  return labels;
}

/// Ordered class sequence for a fleet.
///
/// O = 1: one contiguous HV block at the front of the list followed by one
/// contiguous CAV block of round(p * n) vehicles. O < 1: a Markov walk over
/// the list using the transition probabilities; the first vehicle is a CAV
/// with probability p and the wrap-around transition is not conditioned.
inline std::vector<VehicleClass> generate_sequence(const FleetSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_vehicles;
  std::vector<Driver> drivers(n, Driver::Human);

  if (spec.intensity == 1.0) {
    const std::size_t n_cav = cav_count(n, spec.penetration);
    for (std::size_t i = n - n_cav; i < n; ++i) drivers[i] = Driver::Automated;
  } else {
    const TransitionProbs t = transition_probs(spec.penetration, spec.intensity);
    Rng rng(spec.seed);
    drivers[0] = rng.bernoulli(spec.penetration) ? Driver::Automated : Driver::Human;
    for (std::size_t i = 1; i < n; ++i) {
      const double to_cav = drivers[i - 1] == Driver::Automated ? t.t_AA : t.t_HA;
      drivers[i] = rng.bernoulli(to_cav) ? Driver::Automated : Driver::Human;
    }
  }
  return label_roles(drivers, spec.max_platoon_size);
}

/// Per-class frequencies pooled over all vehicles of all sequences.
inline ClassDistribution empirical_distribution(std::span<const std::vector<VehicleClass>> sequences) {
  std::size_t counts[4] = {0, 0, 0, 0};
  std::size_t total = 0;
  for (const auto& seq : sequences) {
    for (VehicleClass c : seq) ++counts[static_cast<int>(c)];
    total += seq.size();
  }
  if (total == 0) throw std::invalid_argument("empirical_distribution: no vehicles");
  const double inv = 1.0 / static_cast<double>(total);
  ClassDistribution d;
  d.hv = counts[0] * inv;
  d.lv1 = counts[1] * inv;
  d.lv2 = counts[2] * inv;
  d.pv = counts[3] * inv;
  return d;
}

struct FitQuality {
  double r_squared = 0.0;
  double rmse = 0.0;
};

/// Coefficient of determination of the empirical curve against the
/// theoretical one (1 - SS_res / SS_tot, SS_tot about the empirical mean)
/// plus root-mean-square error. An empirical curve that is constant up to
/// rounding yields r2 = 1 if it matches exactly and 0 otherwise.
inline FitQuality goodness_of_fit(std::span<const double> theory, std::span<const double> empirical) {
  if (theory.size() != empirical.size())
    throw std::invalid_argument("goodness_of_fit: curves differ in length");
  if (theory.empty()) throw std::invalid_argument("goodness_of_fit: empty curves");
  const double n = static_cast<double>(theory.size());
  double mean = 0.0;
  for (double y : empirical) mean += y;
  mean /= n;
  double ss_res = 0.0, ss_tot = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < theory.size(); ++i) {
    const double r = empirical[i] - theory[i];
    ss_res += r * r;
    const double d = empirical[i] - mean;
    ss_tot += d * d;
    scale += empirical[i] * empirical[i];
  }
  FitQuality fit;
  fit.rmse = std::sqrt(ss_res / n);
  if (ss_tot > 1e-20 * scale)
    fit.r_squared = 1.0 - ss_res / ss_tot;
  else
    fit.r_squared = ss_res == 0.0 ? 1.0 : 0.0;
  return fit;
}

}  // namespace ringplatoon
