#pragma once

// Platoon partitioning and per-vehicle strategy assignment for the ten
// leader/follower strategy combinations.

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ringplatoon/controllers.hpp"
#include "ringplatoon/csv.hpp"
#include "ringplatoon/fleet_composition.hpp"

namespace ringplatoon {

struct StrategyCombo {
  int id = 1;
  Strategy lv = Strategy::CTG;
  Strategy pv = Strategy::CTG;

  std::string name() const { return std::string(to_string(lv)) + "-" + std::string(to_string(pv)); }
  bool single_strategy() const { return lv == pv; }
};

inline constexpr std::array<StrategyCombo, 10> kCombos = {{
    {1, Strategy::CTG, Strategy::CTG},
    {2, Strategy::VTG1, Strategy::VTG1},
    {3, Strategy::VTG2, Strategy::VTG2},
    {4, Strategy::BS, Strategy::BS},
    {5, Strategy::CTG, Strategy::CS},
    {6, Strategy::VTG1, Strategy::CTG},
    {7, Strategy::VTG1, Strategy::CS},
    {8, Strategy::VTG2, Strategy::CTG},
    {9, Strategy::VTG2, Strategy::CS},
    {10, Strategy::BS, Strategy::CS},
}};

inline const StrategyCombo& combo_by_id(int id) {
  if (id < 1 || id > static_cast<int>(kCombos.size()))
    throw std::invalid_argument("unknown strategy combination id " + std::to_string(id));
  return kCombos[static_cast<std::size_t>(id - 1)];
}

inline const StrategyCombo& combo_by_name(const std::string& name) {
  for (const auto& c : kCombos)
    if (c.name() == name) return c;
  throw std::invalid_argument("unknown strategy combination '" + name + "'");
}

struct Platoon {
  int id = 0;
  std::vector<std::size_t> members;  // leader first, then followers in driving order

  std::size_t leader() const { return members.front(); }
  std::size_t tail() const { return members.back(); }
  std::size_t size() const { return members.size(); }
};

/// Groups CAVs into platoons: each LV1/LV2 opens a platoon and PVs join the
/// platoon of the nearest LV ahead of them. The sequence is circular.
inline std::vector<Platoon> form_platoons(std::span<const VehicleClass> labels, std::size_t max_platoon_size) {
  const std::size_t n = labels.size();
  std::vector<Platoon> platoons;
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_platoon_leader(labels[i])) {
      start = i;
      break;
    }
  }
  if (start == n) {
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == VehicleClass::PV)
        throw std::logic_error("form_platoons: PV at index " + std::to_string(i) + " has no platoon leader");
    return platoons;
  }

  bool open = false;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (start + k) % n;
    switch (labels[i]) {
      case VehicleClass::HV: open = false; break;
      case VehicleClass::LV1:
      case VehicleClass::LV2:
        platoons.push_back(Platoon{0, {i}});
        open = true;
        break;
      case VehicleClass::PV:
        if (!open)
          throw std::logic_error("form_platoons: PV at index " + std::to_string(i) + " has no platoon leader");
        platoons.back().members.push_back(i);
        if (platoons.back().size() > max_platoon_size)
          throw std::logic_error("form_platoons: platoon exceeds the maximum size");
        break;
    }
  }
  std::sort(platoons.begin(), platoons.end(),
            [](const Platoon& a, const Platoon& b) { return a.leader() < b.leader(); });
  for (std::size_t k = 0; k < platoons.size(); ++k) platoons[k].id = static_cast<int>(k);
  return platoons;
}

struct TimeGaps {
  double leader = 1.1;    // s, CTG h for platoon leaders
  double follower = 0.6;  // s, CTG h for platoon followers
};

/// Everything the simulator needs to evaluate one vehicle's controller.
struct VehicleAssignment {
  VehicleClass cls = VehicleClass::HV;
  Strategy strategy = Strategy::HV;
  double time_gap = 0.0;  // CTG h, 0 for other strategies
  int platoon_id = -1;
  std::optional<std::size_t> leader;  // CS: platoon leader index
  int hops = 0;                       // CS: vehicles from leader to self
  /// BS: vehicle whose gap to its predecessor is the rear gap fed to the
  /// balance term (own follower, or the vehicle behind the platoon tail).
  std::optional<std::size_t> rear_gap_vehicle;
};

inline std::vector<VehicleAssignment> assign_strategies(std::span<const VehicleClass> labels,
                                                        std::span<const Platoon> platoons,
                                                        const StrategyCombo& combo, const TimeGaps& gaps = {}) {
  const std::size_t n = labels.size();
  std::vector<VehicleAssignment> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].cls = labels[i];

  const bool extended_vehicle = combo.lv == Strategy::BS && combo.pv == Strategy::CS;

  for (const Platoon& pl : platoons) {
    for (std::size_t pos = 0; pos < pl.size(); ++pos) {
      const std::size_t i = pl.members[pos];
      VehicleAssignment& a = out[i];
      if (!is_cav(labels[i])) throw std::logic_error("assign_strategies: HV inside a platoon");
      a.platoon_id = pl.id;
      const bool is_leader = pos == 0;
      a.strategy = is_leader ? combo.lv : combo.pv;
      if (a.strategy == Strategy::CTG) a.time_gap = is_leader ? gaps.leader : gaps.follower;
      if (a.strategy == Strategy::CS) {
        a.leader = pl.leader();
        a.hops = static_cast<int>(pos);
      }
      if (a.strategy == Strategy::BS) {
        const std::size_t back = (extended_vehicle && is_leader) ? pl.tail() : i;
        a.rear_gap_vehicle = (back + 1) % n;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (is_cav(labels[i]) && out[i].platoon_id < 0)
      throw std::logic_error("assign_strategies: CAV " + std::to_string(i) + " is not in any platoon");
  return out;
}

/// Rear gap of a platoon treated as one extended vehicle: the bumper gap
/// between its last member and the vehicle behind it. `gaps[j]` is vehicle
/// j's gap to its predecessor.
inline double extended_vehicle_follower_gap(const Platoon& platoon, std::span<const double> gaps) {
  if (gaps.empty()) throw std::invalid_argument("extended_vehicle_follower_gap: empty ring");
  return gaps[(platoon.tail() + 1) % gaps.size()];
}

/// vehicle_index, class, platoon_id, strategy, h_param
inline void write_strategy_map(std::ostream& os, std::span<const VehicleAssignment> map) {
  CsvWriter csv(os, {"vehicle_index", "class", "platoon_id", "strategy", "h_param"});
  for (std::size_t i = 0; i < map.size(); ++i)
    csv.row(i, to_string(map[i].cls), map[i].platoon_id, to_string(map[i].strategy), map[i].time_gap);
}

/// index, class, platoon_id (-1 for HV)
inline void write_sequence(std::ostream& os, std::span<const VehicleClass> labels, std::size_t max_platoon_size) {
  const auto platoons = form_platoons(labels, max_platoon_size);
  std::vector<int> ids(labels.size(), -1);
  for (const auto& pl : platoons)
    for (std::size_t m : pl.members) ids[m] = pl.id;
  CsvWriter csv(os, {"index", "class", "platoon_id"});
  for (std::size_t i = 0; i < labels.size(); ++i) csv.row(i, to_string(labels[i]), ids[i]);
}

}  // namespace ringplatoon
