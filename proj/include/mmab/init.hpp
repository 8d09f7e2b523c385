#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mmab/env.hpp"

namespace mmab {

/// Decentralized initialization. Runs in two sub-phases:
///
/// 1. Orthogonalization over candidate arms {0..K-2}, with arm K-1
///    reserved for detection. Blocks of K+1 rounds: one settle round in
///    which unsatisfied agents pick a random candidate arm and keep it if
///    collision-free, then K detection rounds in which unsatisfied agents
///    camp on the detection arm while a satisfied agent with arm s visits
///    it once, at round s. A detection window with no collision tells
///    every agent simultaneously that all agents are settled.
///
/// 2. Rank assignment over 2K-2 rounds. An agent holding candidate arm s
///    (1-based k = s+1) sits on s through rounds 1..2k and K+k..2K-2 and
///    walks arms k+1..K-1 in between, so every pair of agents collides
///    exactly once. Collisions observed in the first 2k rounds count the
///    agents with smaller arms, which is the rank; total collisions give
///    the number of agents minus one.

class OrthogonalizeState {
 public:
  OrthogonalizeState(int num_arms, std::uint64_t rng_seed);

  ArmIndex next_action();
  void observe(const Observation& obs);

  bool done() const { return done_; }
  /// Candidate arm held after settling (0-based), -1 while unsatisfied.
  int settled_arm() const { return satisfied_ ? arm_ : -1; }

 private:
  int num_arms_;
  std::uint64_t rng_;
  int round_in_block_ = 0;  // 0 = settle, 1..K = detection
  bool satisfied_ = false;
  int arm_ = -1;
  bool window_collision_ = false;
  bool done_ = false;
};

class RankAssignState {
 public:
  RankAssignState(int num_arms, int settled_arm);

  ArmIndex next_action();
  void observe(const Observation& obs);

  bool done() const { return round_ > 2 * num_arms_ - 2; }
  int rank() const { return early_collisions_; }
  int learned_agents() const { return total_collisions_ + 1; }

 private:
  int num_arms_;
  int state_;  // 1-based candidate arm id
  int round_ = 1;
  int early_collisions_ = 0;
  int total_collisions_ = 0;
};

struct InitOutcome {
  bool complete = false;
  long steps = 0;
  std::vector<int> ranks;           // per agent
  std::vector<int> settled_arms;    // per agent, 0-based
  int learned_agents = 0;
};

/// Expected orthogonalization length in rounds; the driver's watchdog
/// fires at watchdog_factor times this (initialization is probabilistic,
/// so expiry indicates a bug rather than bad luck).
double expected_orthogonalization_rounds(int num_arms, int num_agents);

/// Drives the full initialization through the environment. Every agent
/// acts only on its own observations; the driver merely steps the clock.
InitOutcome run_initialization(BanditEnv& env, double watchdog_factor = 50.0);

}  // namespace mmab
