// Compares the OpenMP multi-seed runner against the serial reference on a
// fixed workload and verifies that both produce identical outputs.
#include <chrono>
#include <cstdio>
#include <sstream>

#include "mmab/experiment.hpp"

using namespace mmab;
using Clock = std::chrono::steady_clock;

namespace {

ExperimentSpec bench_spec(int seeds) {
  ExperimentSpec spec;
  spec.bandit.num_arms = 10;
  spec.bandit.num_agents = 5;
  spec.bandit.horizon = 100000;
  spec.bandit.means.resize(10);
  for (int k = 0; k < 10; ++k) spec.bandit.means[k] = 0.9 - 0.05 * k;
  spec.bandit.seed = 1;
  spec.beta = 1.5;
  spec.num_seeds = seeds;
  return spec;
}

std::string runs_text(const ExperimentSpec& spec,
                      const ExperimentResult& result) {
  std::ostringstream os;
  write_runs_csv(os, spec, result.runs);
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  int seeds = 16;
  if (argc > 1) seeds = std::atoi(argv[1]);
  const ExperimentSpec spec = bench_spec(seeds);

  const auto t0 = Clock::now();
  const ExperimentResult serial = run_experiment(spec, /*parallel=*/false);
  const auto t1 = Clock::now();
  const ExperimentResult parallel = run_experiment(spec, /*parallel=*/true);
  const auto t2 = Clock::now();

  const double serial_s = std::chrono::duration<double>(t1 - t0).count();
  const double parallel_s = std::chrono::duration<double>(t2 - t1).count();
  std::printf("seeds            : %d\n", seeds);
  std::printf("serial reference : %.3f s\n", serial_s);
  std::printf("openmp runner    : %.3f s\n", parallel_s);
  std::printf("speedup          : %.2fx\n", serial_s / parallel_s);

  const bool identical =
      runs_text(spec, serial) == runs_text(spec, parallel);
  std::printf("outputs identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
