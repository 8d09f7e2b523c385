#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmab/experiment.hpp"

namespace fs = std::filesystem;
using namespace mmab;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("MMAB_OUT_DIR");
  return env ? env : "out";
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

/// Emits runs.csv, aggregate.csv, curves.csv and the normalized spec.
/// Returns false when any run failed an invariant, alongside a
/// machine-readable failures.json.
bool emit_results(const ExperimentSpec& spec, const ExperimentResult& result,
                  const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ostringstream os;
    write_runs_csv(os, spec, result.runs);
    write_file(dir / "runs.csv", os.str());
  }
  {
    std::ostringstream os;
    write_aggregate_csv(os, result.runs);
    write_file(dir / "aggregate.csv", os.str());
  }
  {
    std::ostringstream os;
    write_curves_csv(os, result.runs);
    write_file(dir / "curves.csv", os.str());
  }
  write_file(dir / "spec.normalized.json", spec.to_json() + "\n");

  if (spec.dump_traces) {
    for (const auto& seed : spec.run_seeds()) {
      std::string trace;
      const RunResult r = run_single(spec, seed, &trace);
      write_file(dir / ("trace_" + std::to_string(seed) + ".csv"), trace);
      std::ostringstream os;
      write_messages_csv(os, r.messages);
      write_file(dir / ("messages_" + std::to_string(seed) + ".csv"),
                 os.str());
    }
  }

  if (!result.all_ok) {
    nlohmann::json report;
    report["status"] = "failed";
    nlohmann::json failures = nlohmann::json::array();
    for (const RunResult& r : result.runs) {
      if (r.invariants_ok()) continue;
      nlohmann::json f;
      f["seed"] = r.seed;
      f["completed"] = r.completed;
      f["error"] = r.error;
      f["collision_free"] = r.collision_free;
      f["agreement_ok"] = r.agreement_ok;
      f["consistency_ok"] = r.consistency_ok;
      f["decomposition_ok"] = r.decomposition_ok;
      failures.push_back(f);
    }
    report["failures"] = failures;
    write_file(dir / "failures.json", report.dump(2) + "\n");
    std::cerr << "invariant failures in " << failures.size()
              << " run(s); see " << (dir / "failures.json") << "\n";
    return false;
  }
  return true;
}

void print_warnings(const ExperimentSpec& spec) {
  for (const std::string& w : spec.warnings())
    std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collision-sensing multiplayer bandit simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = default_out_dir();
  int seeds_override = -1;
  double beta_override = -1.0;
  bool serial = false;
  bool dump_traces = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seeds", seeds_override, "override seed count");
    cmd->add_option("--beta", beta_override, "override beta");
    cmd->add_flag("--serial", serial, "single-threaded reference path");
    cmd->add_flag("--trace", dump_traces, "dump per-seed trace CSVs");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run all seeds of a config");
  add_common(run_cmd);

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep_cmd);
  std::string sweep_param;
  std::string sweep_values;
  sweep_cmd->add_option("--param", sweep_param, "delta_gap | beta | T")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated values")
      ->required();

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check and normalize a config");
  validate_cmd->add_option("--config", config_path, "experiment config")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentSpec spec = ExperimentSpec::from_json_file(config_path);
    if (seeds_override > 0) {
      spec.num_seeds = seeds_override;
      spec.explicit_seeds.clear();
    }
    if (beta_override > 0.0) spec.beta = beta_override;
    if (dump_traces) spec.dump_traces = true;
    if (out_dir != "out" || spec.out_dir.empty()) spec.out_dir = out_dir;

    if (validate_cmd->parsed()) {
      spec.validate();
      print_warnings(spec);
      std::cout << spec.to_json() << "\n";
      return 0;
    }

    spec.validate();
    print_warnings(spec);
    const fs::path dir = spec.out_dir;

    if (run_cmd->parsed()) {
      const ExperimentResult result = run_experiment(spec, !serial);
      const bool ok = emit_results(spec, result, dir);
      std::cout << "wrote " << (dir / "runs.csv") << " ("
                << result.runs.size() << " runs)\n";
      return ok ? 0 : 1;
    }

    // sweep
    std::vector<double> values;
    std::stringstream ss(sweep_values);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    if (values.empty()) throw std::invalid_argument("no sweep values");

    const auto entries = sweep(spec, sweep_param, values, !serial);
    fs::create_directories(dir);
    std::ostringstream os;
    write_sweep_csv(os, sweep_param, entries);
    write_file(dir / "sweep.csv", os.str());
    bool ok = true;
    for (const auto& e : entries) ok &= e.result.all_ok;
    std::cout << "wrote " << (dir / "sweep.csv") << " (" << entries.size()
              << " values)\n";
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    nlohmann::json report;
    report["status"] = "error";
    report["message"] = e.what();
    std::cerr << report.dump() << "\n";
    return 2;
  }
}
