#include "mmab/schedule.hpp"

#include <stdexcept>

namespace mmab {

namespace {
inline int pos_mod(int a, int m) {
  int r = a % m;
  return r < 0 ? r + m : r;
}
}  // namespace

std::vector<int> exploit_slots(int rank, int num_agents, int num_exploring) {
  std::vector<int> slots;
  const int width = num_agents - num_exploring;
  slots.reserve(width);
  for (int i = 0; i < width; ++i)
    slots.push_back(pos_mod(rank + i, num_agents));
  return slots;
}

bool in_exploit_slot(int rank, int position, int num_agents,
                     int num_exploring) {
  return pos_mod(position - rank, num_agents) < num_agents - num_exploring;
}

ArmIndex schedule_action(int rank, int position, int cycle, int num_agents,
                         int num_exploring, const std::vector<int>& accepted,
                         const std::vector<int>& active) {
  const int m = num_agents;
  const int offset = pos_mod(position - rank, m);
  if (offset < m - num_exploring) {
    // Exploit slot: accepted arms round-robin. offset < |accepted| always.
    if (accepted.empty())
      throw std::logic_error("schedule: exploit slot with empty accepted set");
    return accepted[offset % static_cast<int>(accepted.size())];
  }
  // Explore slot: the agent's slot index within the exploring group is
  // offset - (M - M_t); reducing modulo M first keeps the slot in
  // [0, M_t) so concurrently exploring agents stay on distinct arms.
  const int kt = static_cast<int>(active.size());
  if (kt == 0) throw std::logic_error("schedule: empty active set");
  const int slot = offset - (m - num_exploring);
  return active[pos_mod(slot + cycle, kt)];
}

}  // namespace mmab
