#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mmab {

/// Arm indices are 0-based everywhere in code; CSV output and config files
/// use 1-based arm ids to match the usual bandit convention.
using ArmIndex = int;
inline constexpr ArmIndex kIdle = -1;

/// Step tag recorded in the trace. Drives the regret decomposition.
enum class Phase : std::uint8_t { Init, Explore, Comm, CommArms, Exploit };

const char* phase_name(Phase p);

struct BanditConfig {
  int num_arms = 0;    // K
  int num_agents = 0;  // M, requires M < K
  long horizon = 0;    // T
  std::vector<double> means;  // size K, each in [0,1]
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
  bool has_tied_means() const;
};

struct AgentOutcome {
  ArmIndex arm = kIdle;
  bool collided = false;
  std::uint8_t reward = 0;  // Bernoulli sample masked to 0 on collision
};

struct RoundOutcome {
  long t = 0;
  std::vector<AgentOutcome> agents;
};

/// What a single agent is allowed to see about a round: its own action,
/// its own collision bit and its own reward. Nothing else leaks.
struct Observation {
  ArmIndex arm = kIdle;
  bool collided = false;
  double reward = 0.0;
};

struct TraceRow {
  std::uint32_t t;
  std::uint8_t agent;
  std::int16_t arm;  // -1 when idle
  std::uint8_t collided;
  std::uint8_t reward;
  Phase phase;
  std::uint8_t active;
};

/// Shared bandit environment. Sole owner of the ground-truth means and the
/// reward RNG; resolves collisions and records the full action trace.
///
/// Reward draws come from independent per-(agent, arm) streams derived from
/// the master seed, so changing one agent's policy never perturbs the
/// samples any other agent would see.
class BanditEnv {
 public:
  explicit BanditEnv(BanditConfig cfg);

  /// Advances the clock by one round. `actions[m]` is agent m's arm or
  /// kIdle. Throws on an out-of-range arm or when the horizon is spent.
  const RoundOutcome& step(std::span<const ArmIndex> actions, Phase phase);

  Observation observation_for(int agent, const RoundOutcome& outcome) const;

  /// Stamps the trace's `active` column; receives (agent, clock) per row.
  /// Without a provider every row is marked active.
  void set_active_provider(std::function<std::uint8_t(int, long)> provider) {
    active_provider_ = std::move(provider);
  }

  long clock() const { return clock_; }
  const BanditConfig& config() const { return cfg_; }

  const std::vector<TraceRow>& trace() const { return trace_; }
  void set_trace_enabled(bool enabled) { trace_enabled_ = enabled; }
  void write_trace_csv(std::ostream& os) const;

 private:
  double sample(int agent, int arm);

  BanditConfig cfg_;
  long clock_ = 0;
  bool trace_enabled_ = true;
  std::function<std::uint8_t(int, long)> active_provider_;
  std::vector<TraceRow> trace_;
  std::vector<std::uint64_t> stream_;   // M*K splitmix64 states
  std::vector<int> pull_count_;         // scratch: per-arm pulls this round
  RoundOutcome outcome_;                // reused between steps
};

}  // namespace mmab
