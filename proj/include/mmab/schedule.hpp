#pragma once

#include <vector>

#include "mmab/env.hpp"

namespace mmab {

/// Deterministic exploration/exploitation schedule shared by all agents.
/// A phase is num_active_arms cycles of num_agents steps. Within a cycle,
/// an agent spends M - M_t positions exploiting accepted arms round-robin
/// and M_t positions sweeping the active set, staggered by rank so that no
/// two agents ever land on the same arm.

/// Cycle positions in which `rank` exploits: [rank, rank + M - M_t) mod M.
std::vector<int> exploit_slots(int rank, int num_agents, int num_exploring);

bool in_exploit_slot(int rank, int position, int num_agents,
                     int num_exploring);

/// Arm pulled by `rank` at (cycle, position) of an exploration phase.
/// `accepted` is ordered (round-robin order), `active` is the sorted
/// active set.
ArmIndex schedule_action(int rank, int position, int cycle, int num_agents,
                         int num_exploring, const std::vector<int>& accepted,
                         const std::vector<int>& active);

}  // namespace mmab
