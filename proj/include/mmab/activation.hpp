#pragma once

#include <vector>

namespace mmab {

/// Periodic activation pattern. Periods are bound to ranks (the indices
/// assigned during initialization) so that the whole pattern is common
/// knowledge once ranks are known. Agent with rank r acts at times
/// theta_r, 2*theta_r, ... (times are 1-based).
struct ActivationSchedule {
  std::vector<long> periods;

  void validate() const;  // throws std::invalid_argument
  int num_agents() const { return static_cast<int>(periods.size()); }

  long cycle_length() const;  // least common multiple of the periods

  bool is_active(int rank, long t) const { return t % periods[rank] == 0; }

  /// Ranks active at time t, ascending; the position in this list is the
  /// agent's local index for that step.
  std::vector<int> active_set(long t) const;
  int active_count(long t) const;
  /// Local index of `rank` at time t, -1 when inactive.
  int local_index(int rank, long t) const;

  /// Distinct positive activity levels over one cycle, ascending. These
  /// are the dynamic optimal-set thresholds.
  std::vector<int> activity_levels() const;

  /// Fraction of cycle steps with exactly `level` agents active,
  /// indexed 0..M.
  std::vector<double> level_step_frequency() const;

  /// Share of arm pulls made while exactly `level` agents are active:
  /// freq(level)*level normalized over levels.
  std::vector<double> level_pull_share() const;

  /// Pulls agent `rank` contributes to each arm over one full
  /// exploration phase of cycle_length * active_arms steps.
  long pulls_per_phase(int rank) const {
    return cycle_length() / periods[rank];
  }
};

}  // namespace mmab
