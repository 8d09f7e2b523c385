#include "mmab/activation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mmab {

void ActivationSchedule::validate() const {
  if (periods.empty())
    throw std::invalid_argument("schedule: at least one period required");
  for (long p : periods)
    if (p < 1) throw std::invalid_argument("schedule: periods must be >= 1");
  if (cycle_length() > 1'000'000L)
    throw std::invalid_argument("schedule: cycle length over 1e6");
}

long ActivationSchedule::cycle_length() const {
  long l = 1;
  for (long p : periods) l = std::lcm(l, p);
  return l;
}

std::vector<int> ActivationSchedule::active_set(long t) const {
  std::vector<int> ranks;
  for (int r = 0; r < num_agents(); ++r)
    if (is_active(r, t)) ranks.push_back(r);
  return ranks;
}

int ActivationSchedule::active_count(long t) const {
  int n = 0;
  for (int r = 0; r < num_agents(); ++r) n += is_active(r, t) ? 1 : 0;
  return n;
}

int ActivationSchedule::local_index(int rank, long t) const {
  if (!is_active(rank, t)) return -1;
  int j = 0;
  for (int r = 0; r < rank; ++r) j += is_active(r, t) ? 1 : 0;
  return j;
}

std::vector<int> ActivationSchedule::activity_levels() const {
  std::vector<int> levels;
  const long l = cycle_length();
  for (long t = 1; t <= l; ++t) {
    const int count = active_count(t);
    if (count > 0 &&
        std::find(levels.begin(), levels.end(), count) == levels.end())
      levels.push_back(count);
  }
  std::sort(levels.begin(), levels.end());
  return levels;
}

std::vector<double> ActivationSchedule::level_step_frequency() const {
  std::vector<double> freq(num_agents() + 1, 0.0);
  const long l = cycle_length();
  for (long t = 1; t <= l; ++t) freq[active_count(t)] += 1.0 / l;
  return freq;
}

std::vector<double> ActivationSchedule::level_pull_share() const {
  std::vector<double> share = level_step_frequency();
  double total = 0.0;
  for (size_t level = 0; level < share.size(); ++level) {
    share[level] *= static_cast<double>(level);
    total += share[level];
  }
  if (total > 0.0)
    for (double& s : share) s /= total;
  return share;
}

}  // namespace mmab
