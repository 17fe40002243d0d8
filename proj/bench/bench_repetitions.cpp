// Serial reference against OpenMP repetitions for the setup and soft-failure runs.
#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>
#include <string>

#include "mst/scenario.hpp"

namespace {

mst::Scenario load(const char* name) {
  std::ifstream in(std::string(MST_SCENARIO_DIR) + "/" + name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return mst::load_scenario(s.str());
}

void setup_repetitions(benchmark::State& state, mst::Execution exec) {
  auto s = load("paper_setup.json");
  s.service->repetitions = static_cast<int>(state.range(0));
  const mst::RunOptions options{exec, false};
  for (auto _ : state) benchmark::DoNotOptimize(mst::run_setup_experiment(s, options));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void softfail_repetitions(benchmark::State& state, mst::Execution exec) {
  auto s = load("paper_softfail.json");
  s.softfail->repetitions = static_cast<int>(state.range(0));
  const mst::RunOptions options{exec, false};
  for (auto _ : state) benchmark::DoNotOptimize(mst::run_softfail_experiment(s, options));
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<int>(s.softfail->cases.size()));
}

}  // namespace

BENCHMARK_CAPTURE(setup_repetitions, serial, mst::Execution::Serial)->Arg(28)->Arg(256);
BENCHMARK_CAPTURE(setup_repetitions, parallel, mst::Execution::Parallel)->Arg(28)->Arg(256);
BENCHMARK_CAPTURE(softfail_repetitions, serial, mst::Execution::Serial)->Arg(5)->Arg(32);
BENCHMARK_CAPTURE(softfail_repetitions, parallel, mst::Execution::Parallel)->Arg(5)->Arg(32);

BENCHMARK_MAIN();
