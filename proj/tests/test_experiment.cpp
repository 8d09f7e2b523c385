#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "mmab/experiment.hpp"

using namespace mmab;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.bandit.num_arms = 4;
  spec.bandit.num_agents = 2;
  spec.bandit.horizon = 20000;
  spec.bandit.means = {0.9, 0.7, 0.4, 0.2};
  spec.bandit.seed = 11;
  spec.beta = 1.5;
  spec.num_seeds = 4;
  spec.curve_points = 20;
  return spec;
}

std::string runs_text(const ExperimentSpec& spec,
                      const ExperimentResult& result) {
  std::ostringstream os;
  write_runs_csv(os, spec, result.runs);
  return os.str();
}

}  // namespace

TEST_CASE("validation collects every violated invariant") {
  ExperimentSpec spec = small_spec();
  spec.bandit.num_agents = 4;  // M == K
  spec.beta = 0.5;
  spec.bandit.means[2] = 1.5;
  try {
    spec.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("M < K") != std::string::npos);
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("[0,1]") != std::string::npos);
  }
}

TEST_CASE("tied means only warn") {
  ExperimentSpec spec = small_spec();
  spec.bandit.means = {0.9, 0.7, 0.7, 0.2};
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.warnings().size() == 1);
}

TEST_CASE("json round trip with linspace means") {
  const std::string text = R"({
    "K": 10, "M": 5, "T": 50000,
    "means_linspace": [0.9, 0.89],
    "seed": 1, "algorithm": "syncd", "beta": 4.0, "seeds": 20
  })";
  const ExperimentSpec spec = ExperimentSpec::from_json_text(text);
  CHECK(spec.bandit.num_arms == 10);
  CHECK(spec.bandit.means.front() == doctest::Approx(0.9));
  CHECK(spec.bandit.means.back() == doctest::Approx(0.89));
  CHECK(spec.num_seeds == 20);
  CHECK_NOTHROW(spec.validate());

  // The normalized echo parses back to the same spec.
  const ExperimentSpec again = ExperimentSpec::from_json_text(spec.to_json());
  CHECK(again.to_json() == spec.to_json());
  CHECK(again.config_hash() == spec.config_hash());
}

TEST_CASE("explicit seed lists and derived seeds") {
  ExperimentSpec spec = small_spec();
  CHECK(spec.run_seeds() == std::vector<std::uint64_t>{11, 12, 13, 14});
  spec.explicit_seeds = {5, 50};
  CHECK(spec.run_seeds() == std::vector<std::uint64_t>{5, 50});
}

TEST_CASE("experiments are deterministic and parallel matches serial") {
  const ExperimentSpec spec = small_spec();
  const ExperimentResult serial1 = run_experiment(spec, false);
  const ExperimentResult serial2 = run_experiment(spec, false);
  const ExperimentResult parallel = run_experiment(spec, true);
  CHECK(runs_text(spec, serial1) == runs_text(spec, serial2));
  CHECK(runs_text(spec, serial1) == runs_text(spec, parallel));
  CHECK(serial1.all_ok);

  // Curves are identical too.
  std::ostringstream c1, c2;
  write_curves_csv(c1, serial1.runs);
  write_curves_csv(c2, parallel.runs);
  CHECK(c1.str() == c2.str());
}

TEST_CASE("run results carry invariant checks and metrics") {
  const ExperimentSpec spec = small_spec();
  const RunResult r = run_single(spec, 11);
  REQUIRE(r.completed);
  CHECK(r.collision_free);
  CHECK(r.agreement_ok);
  CHECK(r.consistency_ok);
  CHECK(r.decomposition_ok);
  CHECK(r.regret.group_pseudo > 0.0);
  CHECK(r.comm.rounds >= 1);
  CHECK(r.rounds_bound > 0.0);
  CHECK(!r.curve.empty());
}

TEST_CASE("trace dump is well formed csv") {
  ExperimentSpec spec = small_spec();
  spec.bandit.horizon = 500;
  std::string trace;
  run_single(spec, 11, &trace);
  CHECK(trace.rfind("t,agent,arm,collision,reward,phase,active\n", 0) == 0);
  // One row per agent per step plus the header.
  const long lines = std::count(trace.begin(), trace.end(), '\n');
  CHECK(lines == 1 + 500 * 2);
}

TEST_CASE("async experiments flow through the same pipeline") {
  ExperimentSpec spec = small_spec();
  spec.algorithm = "async";
  spec.periods = {1, 2};
  spec.bandit.horizon = 60000;
  spec.num_seeds = 2;
  CHECK_NOTHROW(spec.validate());
  const ExperimentResult result = run_experiment(spec, false);
  CHECK(result.all_ok);
  for (const RunResult& r : result.runs) {
    CHECK(r.completed);
    CHECK(r.identified);  // sorting completes at this scale
    CHECK(r.async_pseudo_regret > 0.0);
    CHECK(r.lower_bound_const > 0.0);
  }
}

TEST_CASE("sweep varies exactly the requested parameter") {
  ExperimentSpec spec = small_spec();
  spec.bandit.horizon = 5000;
  spec.num_seeds = 2;
  const auto entries = sweep(spec, "delta_gap", {0.1, 0.2}, false);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].spec.bandit.means[1] == doctest::Approx(0.8));
  CHECK(entries[1].spec.bandit.means[1] == doctest::Approx(0.7));

  std::ostringstream os;
  write_sweep_csv(os, "delta_gap", entries);
  const std::string text = os.str();
  CHECK(text.find("parameter,value,seed") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 4);

  CHECK_THROWS_AS(sweep(spec, "bogus", {1.0}, false),
                  std::invalid_argument);
}
