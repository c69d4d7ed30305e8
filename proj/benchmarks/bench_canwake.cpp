#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "canwake/attack.hpp"
#include "canwake/fleet.hpp"
#include "canwake/recon.hpp"
#include "canwake/trace_io.hpp"
#include "canwake/vehicle_config.hpp"
#include "canwake/wakeup.hpp"

namespace {

using namespace canwake;
using namespace std::chrono_literals;

const VehicleConfig& reference() {
  static const VehicleConfig v = load_vehicle(std::filesystem::path(CANWAKE_DATA_DIR) / "reference_2017.cfg");
  return v;
}

void BM_SerializeFrame(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<CanFrame> frames;
  for (int i = 0; i < 256; ++i) {
    std::vector<std::uint8_t> data(8);
    for (auto& b : data) {
      b = static_cast<std::uint8_t>(rng());
    }
    frames.emplace_back(static_cast<std::uint16_t>(rng() & 0x7FF), data);
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(serialize_frame(frames[i++ % frames.size()], 500'000.0));
  }
}
BENCHMARK(BM_SerializeFrame);

void BM_FrameWakesBus(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(frame_wakes_bus(all_ones_frame(), 125'000.0));
  }
}
BENCHMARK(BM_FrameWakesBus);

void BM_FullDrainExecute(benchmark::State& state) {
  const auto plan = scenario_plan(reference(), Scenario::Trunk);
  const Duration span = std::chrono::hours(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(execute(plan, reference(), span).report.mean_current_a);
  }
}
BENCHMARK(BM_FullDrainExecute)->Arg(1)->Arg(72)->Unit(benchmark::kMillisecond);

void BM_DobAttack(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(dob_attack(reference()).permanently_off.size());
  }
}
BENCHMARK(BM_DobAttack)->Unit(benchmark::kMillisecond);

void BM_ReconAnalyze(benchmark::State& state) {
  const Trace trace = simulate_driver_context(reference(), 3).trace;
  for (auto _ : state) {
    benchmark::DoNotOptimize(analyze(trace).candidates.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace.size()));
}
BENCHMARK(BM_ReconAnalyze)->Unit(benchmark::kMillisecond);

void BM_ParseCandump(benchmark::State& state) {
  const std::string text = render_candump(simulate_driver_context(reference(), 3).trace);
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_candump(text).size());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseCandump)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
