#include "mmab/init.hpp"

#include <stdexcept>

namespace mmab {

namespace {
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

OrthogonalizeState::OrthogonalizeState(int num_arms, std::uint64_t rng_seed)
    : num_arms_(num_arms), rng_(rng_seed) {
  if (num_arms_ < 2) throw std::invalid_argument("init: K must be >= 2");
}

ArmIndex OrthogonalizeState::next_action() {
  if (done_) throw std::logic_error("init: action requested after done");
  const int detection_arm = num_arms_ - 1;
  if (round_in_block_ == 0) {
    if (satisfied_) return arm_;
    // Uniform candidate pick; rejection sampling keeps it unbiased.
    const std::uint64_t span = static_cast<std::uint64_t>(num_arms_ - 1);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
      draw = splitmix64(rng_);
    } while (draw >= limit);
    arm_ = static_cast<int>(draw % span);
    return arm_;
  }
  const int detection_round = round_in_block_ - 1;  // 0..K-1
  if (!satisfied_) return detection_arm;
  return detection_round == arm_ ? detection_arm : arm_;
}

void OrthogonalizeState::observe(const Observation& obs) {
  if (round_in_block_ == 0) {
    if (!satisfied_ && !obs.collided) satisfied_ = true;
    window_collision_ = false;
  } else {
    if (obs.collided) window_collision_ = true;
    if (round_in_block_ == num_arms_) {  // window closed
      if (!window_collision_) {
        if (!satisfied_)
          throw std::logic_error("init: clean window while unsatisfied");
        done_ = true;
      }
      round_in_block_ = 0;
      return;
    }
  }
  ++round_in_block_;
}

RankAssignState::RankAssignState(int num_arms, int settled_arm)
    : num_arms_(num_arms), state_(settled_arm + 1) {
  if (settled_arm < 0 || settled_arm > num_arms - 2)
    throw std::invalid_argument("rank: settled arm out of candidate range");
}

ArmIndex RankAssignState::next_action() {
  if (done()) throw std::logic_error("rank: action requested after done");
  const int s = round_;
  if (s <= 2 * state_ || s >= num_arms_ + state_) return state_ - 1;
  return (s - state_) - 1;  // walking arms state_+1 .. K-1 (1-based)
}

void RankAssignState::observe(const Observation& obs) {
  if (obs.collided) {
    ++total_collisions_;
    if (round_ <= 2 * state_) ++early_collisions_;
  }
  ++round_;
}

double expected_orthogonalization_rounds(int num_arms, int num_agents) {
  return static_cast<double>(num_agents) * (num_arms - 1) * (num_arms + 1) /
         static_cast<double>(num_arms - num_agents);
}

InitOutcome run_initialization(BanditEnv& env, double watchdog_factor) {
  const BanditConfig& cfg = env.config();
  const int m = cfg.num_agents;
  InitOutcome out;
  out.ranks.assign(m, -1);
  out.settled_arms.assign(m, -1);

  std::vector<OrthogonalizeState> ortho;
  ortho.reserve(m);
  for (int a = 0; a < m; ++a)
    ortho.emplace_back(cfg.num_arms,
                       cfg.seed ^ (0xa5a5a5a5ULL + 0x10001ULL * (a + 1)));

  const long watchdog = static_cast<long>(
      watchdog_factor *
      expected_orthogonalization_rounds(cfg.num_arms, cfg.num_agents)) +
      cfg.num_arms + 1;

  std::vector<ArmIndex> actions(m);
  long ortho_steps = 0;
  auto all_done = [&] {
    for (const auto& s : ortho)
      if (!s.done()) return false;
    return true;
  };
  while (!all_done()) {
    if (ortho_steps > watchdog)
      throw std::runtime_error("init: orthogonalization watchdog expired");
    if (env.clock() >= cfg.horizon) {
      out.steps = env.clock();
      return out;  // horizon consumed before coordination finished
    }
    for (int a = 0; a < m; ++a) actions[a] = ortho[a].next_action();
    const RoundOutcome& r = env.step(actions, Phase::Init);
    for (int a = 0; a < m; ++a) ortho[a].observe(env.observation_for(a, r));
    ++ortho_steps;
    ++out.steps;
  }
  for (int a = 0; a < m; ++a) out.settled_arms[a] = ortho[a].settled_arm();

  std::vector<RankAssignState> rank;
  rank.reserve(m);
  for (int a = 0; a < m; ++a)
    rank.emplace_back(cfg.num_arms, out.settled_arms[a]);
  while (!rank[0].done()) {
    if (env.clock() >= cfg.horizon) {
      out.steps = env.clock();
      return out;
    }
    for (int a = 0; a < m; ++a) actions[a] = rank[a].next_action();
    const RoundOutcome& r = env.step(actions, Phase::Init);
    for (int a = 0; a < m; ++a) rank[a].observe(env.observation_for(a, r));
    ++out.steps;
  }
  for (int a = 0; a < m; ++a) {
    out.ranks[a] = rank[a].rank();
    if (rank[a].learned_agents() != m)
      throw std::runtime_error("init: inconsistent learned agent count");
  }
  out.learned_agents = m;
  out.complete = true;
  return out;
}

}  // namespace mmab
