#include <gtest/gtest.h>

#include <numeric>
#include <string>

#include "canwake/fleet.hpp"
#include "canwake/report.hpp"
#include "canwake/trace_io.hpp"
#include "canwake/units.hpp"
#include "canwake/vehicle_config.hpp"
#include "test_support.hpp"

namespace canwake {
namespace {

using namespace std::chrono_literals;
using testing::reference_vehicle;

const std::string kMinimal = R"(name: tiny
bitrate: 500 kbit/s
ecus:
  - name: BCM
    terminal: 30
    t_wakeup: 2 s
    sleep_current: 90 uA
    normal_current: 12 mA
    messages:
      - {id: 0x040, period: 500 ms, data: 00 00 00 00 00 00 00 00}
)";

int config_error_line(const std::string& text) {
  try {
    parse_vehicle(text, "t.cfg");
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.source(), "t.cfg");
    EXPECT_NE(std::string(e.what()).find("t.cfg:"), std::string::npos) << e.what();
    return e.line();
  }
  ADD_FAILURE() << "expected a config error";
  return -1;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

TEST(Units, ParsesExplicitUnits) {
  EXPECT_DOUBLE_EQ(parse_current_a("12.2 mA"), 0.0122);
  EXPECT_DOUBLE_EQ(parse_current_a("90uA"), 90e-6);
  EXPECT_DOUBLE_EQ(parse_current_a("1.5 A"), 1.5);
  EXPECT_DOUBLE_EQ(parse_capacity_ah("45 Ah"), 45.0);
  EXPECT_DOUBLE_EQ(parse_capacity_ah("800 mAh"), 0.8);
  EXPECT_DOUBLE_EQ(parse_bitrate_bps("500 kbit/s"), 500'000.0);
  EXPECT_DOUBLE_EQ(parse_bitrate_bps("1 Mbit/s"), 1'000'000.0);
  EXPECT_EQ(parse_duration("2.5 s"), 2500ms);
  EXPECT_EQ(parse_duration("72h"), 72h);
  EXPECT_EQ(parse_duration("3 d"), 72h);
  EXPECT_EQ(parse_duration("1 min"), 60s);
  EXPECT_EQ(parse_duration("500 us"), 500us);
}

TEST(Units, RejectsMissingOrForeignUnits) {
  EXPECT_THROW(parse_current_a("12.2"), UnitError);
  EXPECT_THROW(parse_current_a("12.2 mV"), UnitError);
  EXPECT_THROW(parse_current_a("mA"), UnitError);
  EXPECT_THROW(parse_duration("5 Ah"), UnitError);
  EXPECT_THROW(parse_bitrate_bps("500 k"), UnitError);
}

TEST(Units, Formatting) {
  EXPECT_EQ(format_current(0.1533), "153.3mA");
  EXPECT_EQ(format_duration(72h), "3d");
  EXPECT_EQ(format_duration(5h), "5h");
  EXPECT_EQ(format_duration(2s), "2s");
  EXPECT_EQ(format_duration(500ms), "500ms");
  EXPECT_EQ(format_duration(1500us), "1500us");
}

TEST(VehicleConfig, ReferenceVehicle) {
  const VehicleConfig& v = reference_vehicle();
  EXPECT_EQ(v.name, "reference-2017");
  EXPECT_EQ(v.ecus.size(), 13U);
  std::size_t t30 = 0;
  double parked = v.quiescent_load_a;
  for (const auto& e : v.ecus) {
    if (e.terminal == Terminal::T30) {
      ++t30;
      parked += e.sleep_current_a;
    }
  }
  EXPECT_EQ(t30, 4U);
  EXPECT_NEAR(parked, 0.0122, 1e-12);
  EXPECT_EQ(v.min_wakeable_t_wakeup(), 2s);
  EXPECT_EQ(v.transmitter_of(0x3B3), v.find_ecu("RCM"));
  const auto door = v.ecus[*v.find_ecu("DCM")].functions.at(0).control;
  EXPECT_EQ(door.id, 0x001);
  EXPECT_EQ(door.byte, 1);  // written as byte 2 in the file
}

TEST(VehicleConfig, MinimalParses) {
  const VehicleConfig v = parse_vehicle(kMinimal);
  EXPECT_EQ(v.ecus.size(), 1U);
  EXPECT_DOUBLE_EQ(v.ecus[0].normal_current_a, 0.012);
  EXPECT_EQ(v.battery.capacity_ah, 45.0);
}

TEST(VehicleConfig, ErrorsCarryLineNumbers) {
  EXPECT_EQ(config_error_line(replace(kMinimal, "12 mA", "12")), 8);
  EXPECT_EQ(config_error_line(replace(kMinimal, "500 ms", "500 parsecs")), 10);
  EXPECT_EQ(config_error_line(replace(kMinimal, "bitrate:", "bitrat:")), 2);
  EXPECT_EQ(config_error_line(replace(kMinimal, "terminal: 30", "terminal: 31")), 5);
}

TEST(VehicleConfig, RejectsEmptyRoster) {
  EXPECT_GT(config_error_line("name: x\nbitrate: 500 kbit/s\necus: []\n"), 0);
  EXPECT_EQ(config_error_line(""), 0);
}

TEST(VehicleConfig, RejectsSleepAboveNormal) {
  EXPECT_GT(config_error_line(replace(kMinimal, "90 uA", "20 mA")), 0);
}

TEST(VehicleConfig, RejectsDuplicateIds) {
  const std::string text = kMinimal + R"(  - name: DCM
    terminal: 30
    sleep_current: 60 uA
    normal_current: 7 mA
    messages:
      - {id: 0x040, period: 1 s, data: 00}
)";
  EXPECT_EQ(config_error_line(text), 16);
}

TEST(VehicleConfig, RenderParseRoundTrip) {
  const VehicleConfig& v = reference_vehicle();
  const std::string text = render_vehicle(v);
  const VehicleConfig back = parse_vehicle(text);
  EXPECT_EQ(render_vehicle(back), text);
  ASSERT_EQ(back.ecus.size(), v.ecus.size());
  for (std::size_t i = 0; i < v.ecus.size(); ++i) {
    EXPECT_EQ(back.ecus[i].name, v.ecus[i].name);
    EXPECT_DOUBLE_EQ(back.ecus[i].normal_current_a, v.ecus[i].normal_current_a);
    EXPECT_EQ(back.ecus[i].schedule.size(), v.ecus[i].schedule.size());
  }
}

TEST(Candump, RenderParseRoundTrip) {
  const Trace t = {{1500000us, CanFrame(0x001, std::vector<std::uint8_t>{0x00, 0x10, 0xAB})},
                   {1500001us, CanFrame(0x7FF, std::vector<std::uint8_t>{})}};
  const std::string text = render_candump(t);
  EXPECT_EQ(text, "(1.500000) vcan0 001#0010AB\n(1.500001) vcan0 7FF#\n");
  EXPECT_EQ(parse_candump(text), t);
}

TEST(Candump, StrictParsing) {
  EXPECT_NO_THROW(parse_candump("# comment\n\n(0.000100) vcan0 123#11\n"));
  const char* bad[] = {
      "(1.5) vcan0 123#11\n",           "(1.000000) vcan0 800#11\n",
      "(1.000000) vcan0 123#1\n",       "(1.000000) vcan0 123#112233445566778899\n",
      "(1.000000) vcan0 12#11\n",       "(2.000000) vcan0 123#11\n(1.000000) vcan0 123#11\n",
      "1.000000 vcan0 123#11\n",
  };
  for (const char* line : bad) {
    EXPECT_THROW(parse_candump(line), TraceParseError) << line;
  }
  try {
    parse_candump("(1.000000) vcan0 123#11\n(1.000000) vcan0 XYZ#11\n");
    FAIL();
  } catch (const TraceParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Candump, FixtureLoads) {
  const Trace t = load_candump(testing::data_path("fixtures/door_unlock_0x01.log"));
  EXPECT_EQ(t.size(), 1860U);
  EXPECT_TRUE(is_time_ordered(t));
}

TEST(Fleet, DeterministicPerSeed) {
  const auto a = generate_fleet(99, 5, Era::Modern);
  const auto b = generate_fleet(99, 5, Era::Modern);
  ASSERT_EQ(a.size(), 5U);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(render_vehicle(a[i]), render_vehicle(b[i]));
  }
  EXPECT_NE(render_vehicle(generate_fleet(100, 1, Era::Modern)[0]), render_vehicle(a[0]));
}

TEST(Fleet, ModernRatiosStayInBand) {
  const FleetOptions o;
  for (const VehicleConfig& v : generate_fleet(5, 20, Era::Modern)) {
    EXPECT_NO_THROW(v.validate());
    const auto m = measure_awakening(v);
    EXPECT_GE(m.ratio_percent, 100.0 * o.min_ratio - 1e-9) << v.name;
    EXPECT_LE(m.ratio_percent, 100.0 * o.max_ratio + 1e-9) << v.name;
    EXPECT_GE(m.awakened_ecus, 2U);
  }
}

TEST(Fleet, OldEraAwakensAtMostOneEcu) {
  for (const VehicleConfig& v : generate_fleet(5, 20, Era::Old)) {
    EXPECT_LE(measure_awakening(v).awakened_ecus, 1U) << v.name;
  }
}

TEST(Fleet, ReferenceVehicleAwakening) {
  const auto m = measure_awakening(reference_vehicle());
  EXPECT_EQ(m.awakened_ecus, 4U);
  EXPECT_EQ(m.s_off.size(), 20U);
  EXPECT_EQ(m.s_on.size(), 38U);
  EXPECT_NEAR(m.ratio_percent, 2000.0 / 38.0, 1e-9);
}

TEST(Report, DrainTableRecomputesColumns) {
  const std::vector<DrainRow> rows = {{"None", 0.0122}, {"+ Trunk open", 0.1533}};
  const auto table = drain_table(rows, reference_vehicle().battery);
  EXPECT_DOUBLE_EQ(table[0].amplification, 1.0);
  EXPECT_NEAR(table[1].amplification, 12.565573770491803, 1e-12);
  EXPECT_NEAR(table[1].operation_time_days, 2.4461839530332681, 1e-12);
  const std::string csv = render_drain_table_csv(table);
  EXPECT_NE(csv.find("+ Trunk open,153.3000,12.5656,58.7084,2.4462,58.7084"), std::string::npos) << csv;
  EXPECT_THROW(drain_table({}, reference_vehicle().battery), std::invalid_argument);
}

TEST(Report, DrainJsonRoundTrip) {
  const auto outcome = execute(wakeup_flood(2s), reference_vehicle(), 10min);
  const std::string json = drain_report_json("Wake-up", reference_vehicle(), 10min, outcome);
  const DrainRow row = parse_drain_report(json);
  EXPECT_EQ(row.label, "Wake-up");
  EXPECT_DOUBLE_EQ(row.mean_current_a, outcome.report.mean_current_a);
  EXPECT_THROW(parse_drain_report("{}"), std::invalid_argument);
  EXPECT_THROW(parse_drain_report("not json"), std::invalid_argument);
}

TEST(Report, ReconCsvUsesOneBasedBytes) {
  const ReconReport r = analyze(load_candump(testing::data_path("fixtures/door_unlock_0x01.log")));
  EXPECT_EQ(render_recon_csv(r),
            "rank,id,byte,mask,baseline,event_value,first_seen_us,last_seen_us\n"
            "1,0x001,2,0x20,0x10,0x30,32000000,34900000\n");
  EXPECT_NE(render_recon_text(r).find("0x001 byte 2 mask 0x20: 0x10 -> 0x30"), std::string::npos);
}

TEST(Reset, UserRequestSparesNeverRecover) {
  const DobOutcome dob_result = dob_attack(reference_vehicle());
  ASSERT_EQ(dob_result.permanently_off, std::vector<std::string>{"RCM"});
  std::vector<SavedEcuState> states;
  for (const EcuConfig& e : reference_vehicle().ecus) {
    const bool off = e.name == "RCM" || e.name == "BCM";
    states.push_back({e.name, off ? PowerMode::BusOff : Ecu::initial_state(e).mode, off ? 256 : 0, 0});
  }
  const auto user = apply_reset(reference_vehicle(), states, ResetKind::UserRequest);
  EXPECT_EQ(user[*reference_vehicle().find_ecu("BCM")].mode, PowerMode::Sleep);
  EXPECT_EQ(user[*reference_vehicle().find_ecu("RCM")].mode, PowerMode::BusOff);
  const auto battery = apply_reset(reference_vehicle(), states, ResetKind::Battery);
  EXPECT_EQ(battery[*reference_vehicle().find_ecu("RCM")].mode, PowerMode::Sleep);
  EXPECT_EQ(battery[*reference_vehicle().find_ecu("RCM")].tec, 0);
  EXPECT_EQ(battery[*reference_vehicle().find_ecu("PCM")].mode, PowerMode::Off);
}

TEST(Reset, StateFileRoundTrip) {
  const std::vector<SavedEcuState> states = {{"BCM", PowerMode::Sleep, 0, 0}, {"RCM", PowerMode::BusOff, 256, 3}};
  EXPECT_EQ(parse_ecu_states(ecu_states_json(states)), states);
  EXPECT_THROW(parse_ecu_states(R"({"ecus":[{"name":"X","mode":"dozing","tec":0,"rec":0}]})"),
               std::invalid_argument);
  SavedEcuState stranger{"NOPE", PowerMode::Sleep, 0, 0};
  EXPECT_THROW(apply_reset(reference_vehicle(), std::span(&stranger, 1), ResetKind::Battery), std::invalid_argument);
}

}  // namespace
}  // namespace canwake
