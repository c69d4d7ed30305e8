#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "canwake/power.hpp"

namespace canwake {
namespace {

using namespace std::chrono_literals;

BatteryConfig reference_battery() { return BatteryConfig{}; }

TEST(OperationTime, ParkedBaselineHours) {
  EXPECT_NEAR(operation_time_ideal(reference_battery(), 0.0122), 737.7, 0.1);
}

// Ideal hours and amplification per drain row, frozen from a decimal oracle.
struct DrainCase {
  double current_a;
  double hours;
  double amplification;
  double paper_days;
};

TEST(OperationTime, DrainRowsMatchOracleAndPublishedDays) {
  const DrainCase rows[] = {
      {0.0122, 737.70491803278689, 1.0, 30.7},
      {0.0420, 214.28571428571429, 3.4426229508196721, 8.92},
      {0.0745, 120.80536912751678, 6.1065573770491803, 5.02},
      {0.1011, 89.020771513353116, 8.2868852459016393, 3.70},
      {0.1533, 58.708414872798434, 12.565573770491803, 2.44},
  };
  const BatteryConfig b = reference_battery();
  for (const DrainCase& r : rows) {
    const double h = operation_time_ideal(b, r.current_a);
    EXPECT_NEAR(h, r.hours, 1e-9);
    EXPECT_NEAR(amplification(r.current_a, 0.0122), r.amplification, 1e-12);
    EXPECT_NEAR(h / 24.0, r.paper_days, r.paper_days * 0.005);
  }
}

TEST(OperationTime, PeukertOracle) {
  BatteryConfig b = reference_battery();
  b.peukert_exponent = 1.2;
  EXPECT_NEAR(operation_time_peukert(b, 0.0122), 1517.9351415394358, 1e-9);
  EXPECT_NEAR(operation_time_peukert(b, 0.1533), 72.817275641445984, 1e-9);
  b.rated_discharge_hours = 100.0;
  EXPECT_NEAR(operation_time_peukert(b, 0.1533), 52.776480549333271, 1e-9);
}

TEST(OperationTime, PeukertShortensOnlyAboveRatedCurrent) {
  BatteryConfig b = reference_battery();
  b.peukert_exponent = 1.2;
  b.rated_discharge_hours = 100.0;
  // Rated current is 9 Ah / 100 h = 90 mA.
  EXPECT_LT(operation_time_peukert(b, 0.1533), operation_time_ideal(b, 0.1533));
  EXPECT_LT(operation_time_peukert(b, 0.1533) / 24.0, 2.44);
  EXPECT_GT(operation_time_peukert(b, 0.0420), operation_time_ideal(b, 0.0420));
  EXPECT_NEAR(operation_time_peukert(b, 0.090), operation_time_ideal(b, 0.090), 1e-9);
}

TEST(OperationTime, PeukertExponentOneEqualsIdeal) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> current(0.001, 1.0);
  const BatteryConfig b = reference_battery();
  for (int i = 0; i < 1000; ++i) {
    const double a = current(rng);
    EXPECT_NEAR(operation_time_peukert(b, a), operation_time_ideal(b, a), 1e-9 * operation_time_ideal(b, a));
  }
}

TEST(OperationTime, MonotoneInCurrent) {
  const BatteryConfig b = reference_battery();
  double previous = INFINITY;
  for (double ma = 1.0; ma < 500.0; ma += 1.7) {
    const double h = operation_time_ideal(b, ma / 1000.0);
    EXPECT_LT(h, previous);
    previous = h;
  }
}

TEST(OperationTime, DeratingScalesLinearly) {
  BatteryConfig b = reference_battery();
  b.capacity_derating = 0.6;
  EXPECT_NEAR(operation_time_ideal(b, 0.0122), 737.70491803278689 * 0.6, 1e-9);
}

TEST(OperationTime, RejectsInvalidInputs) {
  EXPECT_THROW(operation_time_ideal(reference_battery(), 0.0), std::invalid_argument);
  EXPECT_THROW(amplification(0.01, 0.0), std::invalid_argument);
  BatteryConfig b = reference_battery();
  b.peukert_exponent = 0.9;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b = reference_battery();
  b.soc_min_start = 0.8;
  EXPECT_THROW(b.validate(), std::invalid_argument);
}

EcuConfig sleeper(double sleep_a, double normal_a) {
  EcuConfig c;
  c.name = "X";
  c.sleep_current_a = sleep_a;
  c.normal_current_a = normal_a;
  FunctionLoad lights;
  lights.load_a = 0.05;
  lights.hold = 5s;
  c.functions.push_back(lights);
  return c;
}

TEST(CurrentProfile, ReplaysModeAndLoadEvents) {
  PowerRoster roster{{sleeper(0.001, 0.011)}, 0.010};
  const std::vector<BusEvent> trace = {
      {1s, 0, EventKind::WakeupDetected, {}, -1},
      {2s, 0, EventKind::LoadOn, {}, 0},
      {3s, 0, EventKind::LoadOff, {}, 0},
      {4s, 0, EventKind::Sleep, {}, -1},
  };
  const auto p = current_profile(trace, roster, 10s);
  ASSERT_EQ(p.size(), 5U);
  EXPECT_DOUBLE_EQ(p[0].current_a, 0.011);
  EXPECT_DOUBLE_EQ(p[1].current_a, 0.021);
  EXPECT_DOUBLE_EQ(p[2].current_a, 0.071);
  EXPECT_DOUBLE_EQ(p[3].current_a, 0.021);
  EXPECT_DOUBLE_EQ(p[4].current_a, 0.011);
  EXPECT_EQ(p[4].from, 4s);
  EXPECT_EQ(p[4].to, 10s);
}

TEST(Integration, ConstantCurrentMeanAndImmobilization) {
  const BatteryConfig b = reference_battery();
  const CurrentSegment seg{SimTime{0}, std::chrono::hours(72), 0.1533};
  DrainReport r = integrate_profile(std::span(&seg, 1), b, std::chrono::hours(72), {.baseline_current_a = 0.0122});
  EXPECT_NEAR(r.mean_current_a, 0.1533, 1e-12);
  EXPECT_NEAR(r.amplification, 12.565573770491803, 1e-9);
  ASSERT_TRUE(r.immobilized_at.has_value());
  // 9 Ah at 153.3 mA lasts 211350.29 s; the first 1 s step past it trips.
  EXPECT_EQ(*r.immobilized_at, 211351s);
  EXPECT_TRUE(r.exceeds_parasitic_threshold);
  EXPECT_EQ(r.soc_timeline.size(), 73U);
  EXPECT_DOUBLE_EQ(r.soc_timeline.front().soc, 0.70);
  for (std::size_t i = 1; i < r.soc_timeline.size(); ++i) {
    EXPECT_LT(r.soc_timeline[i].soc, r.soc_timeline[i - 1].soc);
  }
}

TEST(Integration, BaselineStaysBelowParasiticThreshold) {
  const CurrentSegment seg{SimTime{0}, std::chrono::hours(72), 0.0122};
  DrainReport r = integrate_profile(std::span(&seg, 1), reference_battery(), std::chrono::hours(72));
  EXPECT_FALSE(r.exceeds_parasitic_threshold);
  EXPECT_FALSE(r.immobilized_at.has_value());
  EXPECT_DOUBLE_EQ(r.amplification, 1.0);
  EXPECT_NEAR(r.soc_timeline.back().soc, 0.70 - 0.0122 * 72.0 / 45.0, 1e-9);
}

TEST(Integration, StepSizeDoesNotChangeMeanCurrent) {
  const std::vector<CurrentSegment> p = {{SimTime{0}, 1500ms, 0.02}, {1500ms, 10s, 0.01}};
  IntegrationOptions coarse_step;
  coarse_step.dt = 3s;
  IntegrationOptions fine_step;
  fine_step.dt = 1ms;
  const auto coarse = integrate_profile(p, reference_battery(), 10s, coarse_step);
  const auto fine = integrate_profile(p, reference_battery(), 10s, fine_step);
  EXPECT_NEAR(coarse.mean_current_a, fine.mean_current_a, 1e-15);
  EXPECT_NEAR(fine.mean_current_a, (0.02 * 1.5 + 0.01 * 8.5) / 10.0, 1e-15);
}

}  // namespace
}  // namespace canwake
