#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmab/env.hpp"
#include "mmab/metrics.hpp"

namespace mmab {

struct ExperimentSpec {
  BanditConfig bandit;
  std::string algorithm = "syncd";  // "syncd" | "async"
  double beta = 4.0;
  std::vector<long> periods;  // async: activation periods by rank
  int num_seeds = 1;
  std::vector<std::uint64_t> explicit_seeds;
  std::string out_dir = "out";
  bool dump_traces = false;
  int curve_points = 512;
  double init_watchdog_factor = 50.0;

  /// Throws std::invalid_argument listing every violated invariant.
  void validate() const;
  std::vector<std::string> warnings() const;

  /// Seeds actually run: the explicit list, or master + run index.
  std::vector<std::uint64_t> run_seeds() const;

  std::string to_json() const;  // normalized echo, stable field order
  static ExperimentSpec from_json_text(const std::string& text);
  static ExperimentSpec from_json_file(const std::string& path);

  std::uint64_t config_hash() const;  // FNV-1a over the normalized echo
};

struct RunResult {
  std::uint64_t seed = 0;
  bool completed = false;
  std::string error;

  RegretBreakdown regret;
  double async_pseudo_regret = 0.0;  // async runs only
  CommAccounting comm;
  std::vector<MessageRecord> messages;
  std::vector<CurvePoint> curve;

  bool init_complete = false;
  long init_steps = 0;
  bool identified = false;  // sync: |Acc| = M; async: sorting complete
  long identify_time = -1;
  std::vector<int> final_arms;  // Acc in order, or the sorted top list
  long signal_phases = 0;

  // Invariants checked on every run.
  bool collision_free = true;  // no collisions tagged explore/exploit
  bool agreement_ok = true;
  bool consistency_ok = true;
  bool decomposition_ok = true;

  // Reference quantities (reported alongside, never asserted).
  double rounds_bound = 0.0;
  double bits_bound = 0.0;
  double regret_bound_ref = 0.0;
  double lower_bound_const = 0.0;

  bool invariants_ok() const {
    return completed && collision_free && agreement_ok && consistency_ok &&
           decomposition_ok;
  }
};

/// Runs one simulation and computes all metrics. `trace_csv` receives the
/// full trace when non-null.
RunResult run_single(const ExperimentSpec& spec, std::uint64_t seed,
                     std::string* trace_csv = nullptr);

struct ExperimentResult {
  std::vector<RunResult> runs;
  bool all_ok = true;
};

/// All seeds of the spec; `parallel` selects the OpenMP path, otherwise
/// the serial reference. Both produce identical results.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                bool parallel = true);

struct SweepEntry {
  double value = 0.0;
  ExperimentSpec spec;
  ExperimentResult result;
};

/// Parameter sweep over delta_gap (regenerates means down from 0.9),
/// beta, or T.
std::vector<SweepEntry> sweep(const ExperimentSpec& base,
                              const std::string& parameter,
                              const std::vector<double>& values,
                              bool parallel = true);

void write_runs_csv(std::ostream& os, const ExperimentSpec& spec,
                    const std::vector<RunResult>& runs);
void write_messages_csv(std::ostream& os,
                        const std::vector<MessageRecord>& messages);
void write_aggregate_csv(std::ostream& os,
                         const std::vector<RunResult>& runs);
void write_curves_csv(std::ostream& os, const std::vector<RunResult>& runs);
void write_sweep_csv(std::ostream& os, const std::string& parameter,
                     const std::vector<SweepEntry>& entries);

}  // namespace mmab
