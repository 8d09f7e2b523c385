#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mmab/channel.hpp"
#include "mmab/codec.hpp"
#include "mmab/env.hpp"

namespace mmab {

struct AgentParams {
  int num_arms = 0;
  long horizon = 0;
  double beta = 4.0;
  /// ln(1/delta); negative means "use the default delta = 1/T^2".
  double log_inv_delta = -1.0;

  double resolved_log_inv_delta() const;
};

/// Confidence interval state for one arm.
struct ConfidenceInterval {
  double lcb = 0.0;
  double ucb = 0.0;
  double radius = 0.0;
};

/// Lists produced by an accept/reject scan, sorted by arm id.
struct ScanResult {
  std::vector<int> accepted;
  std::vector<int> rejected;
  bool changed() const { return !accepted.empty() || !rejected.empty(); }
};

/// Counting rules over a set of intervals: arm k is accepted when at
/// least active_count - exploring_count other active arms sit entirely
/// below its LCB, rejected when at least exploring_count sit entirely
/// above its UCB. Self-comparisons are excluded. Throws std::logic_error
/// if any arm satisfies both rules.
ScanResult accept_reject_scan(const std::vector<int>& active,
                              const std::vector<ConfidenceInterval>& by_arm,
                              int exploring_count);

/// One agent of the synchronous elimination algorithm. The lockstep
/// driver sequences phases; every decision here depends only on the
/// agent's own observations, its rank, and quantities all agents share by
/// schedule symmetry.
class SyncAgent {
 public:
  SyncAgent(AgentParams params, int rank, int num_agents);

  int rank() const { return rank_; }
  int exploring_count() const { return exploring_count_; }
  const std::vector<int>& active() const { return active_; }
  const std::vector<int>& accepted() const { return accepted_; }
  const std::vector<int>& rejected() const { return rejected_; }
  bool exploration_done() const {
    return static_cast<int>(accepted_.size()) == num_agents_;
  }
  long phase_length() const {
    return static_cast<long>(num_agents_) * active_.size();
  }

  // --- exploration phase ---
  void begin_explore_phase();
  bool signalling() const { return signal_pending_; }
  ArmIndex explore_action(long step_in_phase) const;
  void observe_explore(const Observation& obs, long step_in_phase);
  /// Commits the phase's samples (or discards them after a signal) and
  /// reports whether an arm-sync round must follow.
  bool end_explore_phase();

  // --- communication ---
  bool ecr_trigger() const;
  /// Snapshots *_last statistics and returns the quantized means to
  /// announce, indexed by arm id. Call only when ecr_trigger() is true.
  std::vector<QuantizedMean> prepare_outgoing();
  PeerTable& table() { return table_; }
  const PeerTable& table() const { return table_; }
  /// Shared-data elimination scan run right after a communication round;
  /// applies the decisions directly (inputs are identical at all agents).
  ScanResult post_comm_scan();

  /// Boundary without communication: scan on private statistics, buffer
  /// any decisions and queue a signal. With a single agent the decisions
  /// apply immediately since there is no one to synchronize with.
  void no_comm_boundary();

  // --- arm-state synchronization ---
  ArmSyncSets take_pending_sets();
  /// Applies the merged union from a comm_a round, then rescans privately
  /// (buffered, to be announced through the next signal).
  void apply_arm_sync(const ArmSyncSets& merged);

  // --- exploitation ---
  ArmIndex exploit_action(long step_in_exploit) const;

  // --- estimator internals (exposed for tests and metrics) ---
  double estimate(int arm) const;
  ConfidenceInterval interval(int arm) const;
  long global_pulls(int arm) const { return pulls_global_[arm]; }
  long own_pulls(int arm) const { return pulls_own_[arm]; }
  double ecr_now() const;
  double ecr_last() const { return ecr_last_; }
  int comm_rounds_seen() const { return comm_rounds_; }

  /// Anchor arms for communication, one per rank: the frozen active set
  /// in sorted order, extended from the accepted list if fewer active
  /// arms than agents remain.
  std::vector<int> comm_anchors() const;

  /// JSON snapshot of the full private state, for phase-boundary debug
  /// dumps. Arm ids are 1-based to match the CSV outputs.
  std::string debug_snapshot_json() const;

 private:
  void private_scan_and_buffer();
  ScanResult scan_now() const;
  void apply_scan(const ScanResult& scan);

  AgentParams params_;
  int rank_;
  int num_agents_;
  double log_inv_delta_;

  std::vector<int> active_;    // sorted
  std::vector<int> accepted_;  // round-robin order
  std::vector<int> rejected_;
  int exploring_count_;

  // Committed statistics. Own pull counts are identical at every agent by
  // schedule symmetry, which makes the global count inferable.
  std::vector<long> pulls_own_;
  std::vector<double> reward_sum_;
  std::vector<long> pulls_global_;

  // Snapshots taken at each communication.
  std::vector<long> pulls_own_last_;
  std::vector<double> reward_sum_last_;
  std::vector<long> pulls_global_last_;
  double ecr_last_ = 1.0;
  int comm_rounds_ = 0;

  PeerTable table_;

  // Phase-local accumulation, discarded wholesale after a signal phase.
  std::vector<long> phase_pulls_;
  std::vector<double> phase_rewards_;
  bool phase_tainted_ = false;

  // Buffered private decisions awaiting synchronization.
  std::vector<int> buffered_accepted_;
  std::vector<int> buffered_rejected_;
  bool signal_pending_ = false;
};

struct SyncRunSummary {
  bool init_complete = false;
  long init_steps = 0;
  bool identified = false;
  long identify_time = -1;  // env clock when pure exploitation began
  std::vector<int> final_accepted;
  int comm_rounds = 0;
  int comm_a_rounds = 0;
  long comm_steps = 0;
  long comm_a_steps = 0;
  long signal_phases = 0;
  std::vector<MessageRecord> messages;
  bool agreement_ok = true;   // peer tables identical after every round
  bool consistency_ok = true; // unanimous triggers, scans and arm sets
};

/// Runs the complete synchronous algorithm over one environment:
/// initialization, exploration with communication, exploitation to the
/// horizon. Returns bookkeeping for metrics and invariant checks.
SyncRunSummary run_syncd(BanditEnv& env, double beta,
                         double log_inv_delta = -1.0,
                         double init_watchdog_factor = 50.0);

}  // namespace mmab
