#pragma once

#include <vector>

#include "mmab/activation.hpp"
#include "mmab/agent.hpp"
#include "mmab/channel.hpp"
#include "mmab/env.hpp"

namespace mmab {

/// Rejection rule of the periodic variant: arm k leaves the active set
/// once at least `min_dominators` active arms sit entirely above its
/// interval. Returns rejected arms sorted by id.
std::vector<int> reject_scan(const std::vector<int>& active,
                             const std::vector<ConfidenceInterval>& by_arm,
                             int min_dominators);

/// Sorting completion: true when the `top_count` arms with the highest
/// estimates are pairwise separated, i.e. for every pair i < j in
/// estimate order, LCB(top[i]) > UCB(top[j]).
bool sort_check(const std::vector<int>& top_by_estimate,
                const std::vector<ConfidenceInterval>& by_arm);

/// One agent of the periodic-asynchronous variant. Activation periods are
/// bound to ranks; the full schedule is common knowledge, which lets every
/// agent reconstruct everyone's pull counts without communication.
class AsyncAgent {
 public:
  AsyncAgent(AgentParams params, int rank, ActivationSchedule schedule);

  int rank() const { return rank_; }
  const std::vector<int>& active_arms() const { return active_; }
  const std::vector<int>& rejected_arms() const { return rejected_; }
  bool sorted() const { return sorted_; }
  const std::vector<int>& top_arms() const { return top_; }
  long phase_length() const {
    return schedule_.cycle_length() * static_cast<long>(active_.size());
  }

  // --- exploration (t is the 1-based physical time) ---
  void begin_explore_phase();
  ArmIndex explore_action(long t, long step_in_phase) const;
  void observe_explore(const Observation& obs);
  /// Commits the phase; returns false when a collision tainted it (which
  /// indicates a scheduling bug in this variant).
  bool end_explore_phase();

  // --- boundary processing ---
  bool ecr_trigger() const;
  std::vector<QuantizedMean> prepare_outgoing();
  PeerTable& table() { return table_; }
  const PeerTable& table() const { return table_; }
  /// Post-communication rejection pass; shared inputs make it identical
  /// at every agent. Returns the arms rejected now.
  std::vector<int> post_comm_reject();
  /// Post-communication sorting check; freezes the top list on success.
  bool try_complete_sort();

  // --- exploitation ---
  ArmIndex exploit_action(long t) const;

  double estimate(int arm) const;
  ConfidenceInterval interval(int arm) const;
  long global_pulls() const { return pulls_global_; }
  std::vector<int> comm_anchors() const;
  int comm_rounds_seen() const { return comm_rounds_; }

 private:
  AgentParams params_;
  int rank_;
  ActivationSchedule schedule_;
  int num_agents_;
  double log_inv_delta_;

  std::vector<int> active_;  // sorted
  std::vector<int> rejected_;
  bool sorted_ = false;
  std::vector<int> top_;  // estimate order, frozen at sort completion

  std::vector<long> pulls_own_;
  std::vector<double> reward_sum_;
  // Per-arm pull totals are uniform across active arms; committed phases
  // fix every peer's per-arm count through the schedule.
  long pulls_global_ = 0;
  std::vector<long> pulls_rank_;  // per rank, per arm

  std::vector<long> pulls_own_last_;
  std::vector<double> reward_sum_last_;
  std::vector<long> pulls_rank_last_;
  long pulls_global_last_ = 0;
  double ecr_last_ = 1.0;
  int comm_rounds_ = 0;

  PeerTable table_;

  std::vector<long> phase_pulls_;
  std::vector<double> phase_rewards_;
  bool phase_tainted_ = false;
};

struct AsyncRunSummary {
  bool init_complete = false;
  long init_steps = 0;
  bool sorted = false;
  long sort_time = -1;  // env clock when exploitation began
  std::vector<int> top_arms;
  int comm_rounds = 0;
  int comm_a_rounds = 0;
  long comm_steps = 0;
  long comm_a_steps = 0;
  std::vector<MessageRecord> messages;
  long explore_collisions = 0;
  bool agreement_ok = true;
  bool consistency_ok = true;
};

/// Runs the periodic-asynchronous algorithm over one environment. Agents
/// idle until the first cycle boundary, run the synchronous initialization
/// in a burst (periodic activation is suspended for coordination windows:
/// initialization and communication rounds), realign to the next cycle
/// boundary, then alternate exploration phases of cycle * active-arm
/// steps with boundary communication until the top arms are sorted;
/// exploitation follows the dynamic activity level to the horizon.
AsyncRunSummary run_async(BanditEnv& env, double beta,
                          const ActivationSchedule& schedule,
                          double log_inv_delta = -1.0,
                          double init_watchdog_factor = 50.0);

}  // namespace mmab
