#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <vector>

#include "ringplatoon/platoon_manager.hpp"

namespace ringplatoon {
namespace {

using VC = VehicleClass;

TEST(Combos, TenDistinctRows) {
  std::set<std::string> names;
  for (const auto& c : kCombos) {
    names.insert(c.name());
    EXPECT_EQ(combo_by_id(c.id).name(), c.name());
    EXPECT_EQ(combo_by_name(c.name()).id, c.id);
    EXPECT_NE(c.lv, Strategy::CS);
    EXPECT_NE(c.lv, Strategy::HV);
  }
  EXPECT_EQ(names.size(), 10u);
  EXPECT_EQ(combo_by_id(7).name(), "VTG1-CS");
  EXPECT_EQ(combo_by_id(10).name(), "BS-CS");
  for (int id = 1; id <= 4; ++id) EXPECT_TRUE(combo_by_id(id).single_strategy());
  EXPECT_THROW(combo_by_id(0), std::invalid_argument);
  EXPECT_THROW(combo_by_id(11), std::invalid_argument);
  EXPECT_THROW(combo_by_name("CS-CS"), std::invalid_argument);
}

TEST(FormPlatoons, FromLabels) {
  const std::vector<VC> labels{VC::HV, VC::LV1, VC::PV, VC::PV, VC::PV, VC::LV2, VC::PV};
  const auto p = form_platoons(labels, 4);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].members, (std::vector<std::size_t>{1, 2, 3, 4}));
  EXPECT_EQ(p[1].members, (std::vector<std::size_t>{5, 6}));
  EXPECT_EQ(p[0].id, 0);
  EXPECT_EQ(p[1].id, 1);
}

TEST(FormPlatoons, AllHuman) { EXPECT_TRUE(form_platoons(std::vector<VC>(7, VC::HV), 4).empty()); }

TEST(FormPlatoons, WrapsAcrossListEnd) {
  const std::vector<VC> labels{VC::PV, VC::HV, VC::LV1, VC::PV};
  const auto p = form_platoons(labels, 4);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].members, (std::vector<std::size_t>{2, 3, 0}));
  EXPECT_EQ(p[0].tail(), 0u);
}

TEST(FormPlatoons, LabelingBugsAreErrors) {
  EXPECT_THROW(form_platoons(std::vector<VC>{VC::HV, VC::PV}, 4), std::logic_error);
  EXPECT_THROW(form_platoons(std::vector<VC>{VC::LV1, VC::HV, VC::PV}, 4), std::logic_error);
  EXPECT_THROW(form_platoons(std::vector<VC>{VC::HV, VC::LV1, VC::PV, VC::PV}, 2), std::logic_error);
}

TEST(FormPlatoons, FullIntensityCount) {
  const auto seq = generate_sequence(FleetSpec{100, 0.8, 1.0, 4, 0});
  const auto p = form_platoons(seq, 4);
  ASSERT_EQ(p.size(), 20u);
  for (const auto& pl : p) EXPECT_EQ(pl.size(), 4u);
}

TEST(AssignStrategies, CtgWithConstantSpacingFollowers) {
  const std::vector<VC> labels{VC::HV, VC::LV1, VC::PV, VC::PV};
  const auto p = form_platoons(labels, 4);
  const auto a = assign_strategies(labels, p, combo_by_id(5));
  EXPECT_EQ(a[0].strategy, Strategy::HV);
  EXPECT_EQ(a[0].platoon_id, -1);
  EXPECT_EQ(a[1].strategy, Strategy::CTG);
  EXPECT_DOUBLE_EQ(a[1].time_gap, 1.1);
  for (std::size_t i : {2u, 3u}) {
    EXPECT_EQ(a[i].strategy, Strategy::CS);
    ASSERT_TRUE(a[i].leader);
    EXPECT_EQ(*a[i].leader, 1u);
    EXPECT_DOUBLE_EQ(a[i].time_gap, 0.0);
  }
  EXPECT_EQ(a[2].hops, 1);
  EXPECT_EQ(a[3].hops, 2);
}

TEST(AssignStrategies, SingleStrategyDiffersOnlyInTimeGap) {
  const std::vector<VC> labels{VC::HV, VC::LV1, VC::PV, VC::PV};
  const auto p = form_platoons(labels, 4);
  const auto a = assign_strategies(labels, p, combo_by_id(1));
  EXPECT_EQ(a[1].strategy, Strategy::CTG);
  EXPECT_EQ(a[2].strategy, Strategy::CTG);
  EXPECT_DOUBLE_EQ(a[1].time_gap, 1.1);
  EXPECT_DOUBLE_EQ(a[2].time_gap, 0.6);
  for (int id = 2; id <= 4; ++id) {
    const auto b = assign_strategies(labels, p, combo_by_id(id));
    EXPECT_EQ(b[1].strategy, b[2].strategy);
    EXPECT_EQ(b[1].time_gap, 0.0);
  }
}

TEST(AssignStrategies, BalancedLeaderUsesGapBehindTail) {
  const std::vector<VC> labels{VC::HV, VC::LV1, VC::PV, VC::PV, VC::HV};
  const auto p = form_platoons(labels, 4);
  const auto extended = assign_strategies(labels, p, combo_by_id(10));
  EXPECT_EQ(extended[1].strategy, Strategy::BS);
  EXPECT_EQ(*extended[1].rear_gap_vehicle, 4u);
  EXPECT_FALSE(extended[2].rear_gap_vehicle);

  const auto plain = assign_strategies(labels, p, combo_by_id(4));
  EXPECT_EQ(*plain[1].rear_gap_vehicle, 2u);
  EXPECT_EQ(*plain[2].rear_gap_vehicle, 3u);
  EXPECT_EQ(*plain[3].rear_gap_vehicle, 4u);
}

TEST(AssignStrategies, SizeOnePlatoonMatchesBalancedPair) {
  const std::vector<VC> labels{VC::HV, VC::LV1, VC::HV};
  const auto p = form_platoons(labels, 4);
  EXPECT_EQ(*assign_strategies(labels, p, combo_by_id(10))[1].rear_gap_vehicle,
            *assign_strategies(labels, p, combo_by_id(4))[1].rear_gap_vehicle);
}

TEST(AssignStrategies, EveryCavCoveredAndPure) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto labels = generate_sequence(FleetSpec{60, 0.5, 0.4, 4, seed});
    const auto p = form_platoons(labels, 4);
    for (const auto& combo : kCombos) {
      const auto a = assign_strategies(labels, p, combo);
      const auto again = assign_strategies(labels, p, combo);
      for (std::size_t i = 0; i < labels.size(); ++i) {
        EXPECT_EQ(a[i].strategy, again[i].strategy);
        EXPECT_EQ(is_cav(labels[i]), a[i].platoon_id >= 0);
        if (a[i].strategy == Strategy::CS) {
          ASSERT_TRUE(a[i].leader);
          EXPECT_EQ(a[*a[i].leader].platoon_id, a[i].platoon_id);
          EXPECT_TRUE(is_platoon_leader(labels[*a[i].leader]));
        }
      }
    }
  }
}

TEST(ExtendedVehicle, PassThroughAndSingleVehicleRing) {
  Platoon pl{0, {1, 2, 3}};
  const std::vector<double> gaps{5, 6, 7, 8, 12};
  EXPECT_DOUBLE_EQ(extended_vehicle_follower_gap(pl, gaps), 12.0);
  Platoon solo{0, {0}};
  const std::vector<double> one{995.0};
  EXPECT_DOUBLE_EQ(extended_vehicle_follower_gap(solo, one), 995.0);
  EXPECT_THROW(extended_vehicle_follower_gap(solo, std::vector<double>{}), std::invalid_argument);
}

TEST(StrategyMap, CsvExport) {
  const std::vector<VC> labels{VC::HV, VC::LV1, VC::PV};
  const auto p = form_platoons(labels, 4);
  std::ostringstream os;
  write_strategy_map(os, assign_strategies(labels, p, combo_by_id(5)));
  EXPECT_EQ(os.str(),
            "vehicle_index,class,platoon_id,strategy,h_param\n0,HV,-1,HV,0\n1,LV1,0,CTG,1.1\n2,PV,0,CS,0\n");
}

}  // namespace
}  // namespace ringplatoon
