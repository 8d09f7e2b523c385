#include "mmab/async_agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mmab/init.hpp"

namespace mmab {

std::vector<int> reject_scan(const std::vector<int>& active,
                             const std::vector<ConfidenceInterval>& by_arm,
                             int min_dominators) {
  std::vector<int> rejected;
  for (int k : active) {
    int dominators = 0;
    for (int i : active) {
      if (i == k) continue;
      if (by_arm[i].lcb >= by_arm[k].ucb) ++dominators;
    }
    if (dominators >= min_dominators) rejected.push_back(k);
  }
  return rejected;
}

bool sort_check(const std::vector<int>& top_by_estimate,
                const std::vector<ConfidenceInterval>& by_arm) {
  const int n = static_cast<int>(top_by_estimate.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!(by_arm[top_by_estimate[i]].lcb > by_arm[top_by_estimate[j]].ucb))
        return false;
  return true;
}

AsyncAgent::AsyncAgent(AgentParams params, int rank,
                       ActivationSchedule schedule)
    : params_(params),
      rank_(rank),
      schedule_(std::move(schedule)),
      num_agents_(schedule_.num_agents()),
      log_inv_delta_(params.resolved_log_inv_delta()) {
  const int k = params_.num_arms;
  active_.resize(k);
  for (int i = 0; i < k; ++i) active_[i] = i;
  pulls_own_.assign(k, 0);
  reward_sum_.assign(k, 0.0);
  pulls_rank_.assign(num_agents_, 0);
  pulls_own_last_.assign(k, 0);
  reward_sum_last_.assign(k, 0.0);
  pulls_rank_last_.assign(num_agents_, 0);
  table_.assign(num_agents_, std::vector<QuantizedMean>(k));
  phase_pulls_.assign(k, 0);
  phase_rewards_.assign(k, 0.0);
}

void AsyncAgent::begin_explore_phase() {
  std::fill(phase_pulls_.begin(), phase_pulls_.end(), 0);
  std::fill(phase_rewards_.begin(), phase_rewards_.end(), 0.0);
  phase_tainted_ = false;
}

ArmIndex AsyncAgent::explore_action(long t, long step_in_phase) const {
  const int j = schedule_.local_index(rank_, t);
  if (j < 0) return kIdle;
  const long sweep = step_in_phase / schedule_.cycle_length();
  const int kt = static_cast<int>(active_.size());
  return active_[static_cast<int>((j + sweep) % kt)];
}

void AsyncAgent::observe_explore(const Observation& obs) {
  if (obs.arm == kIdle) return;
  if (obs.collided) {
    phase_tainted_ = true;
    return;
  }
  phase_pulls_[obs.arm] += 1;
  phase_rewards_[obs.arm] += obs.reward;
}

bool AsyncAgent::end_explore_phase() {
  if (phase_tainted_) return false;
  const long own_rate = schedule_.pulls_per_phase(rank_);
  for (int k : active_) {
    if (phase_pulls_[k] != own_rate)
      throw std::logic_error("async: phase pull count off schedule");
    pulls_own_[k] += phase_pulls_[k];
    reward_sum_[k] += phase_rewards_[k];
  }
  long phase_total = 0;
  for (int r = 0; r < num_agents_; ++r) {
    pulls_rank_[r] += schedule_.pulls_per_phase(r);
    phase_total += schedule_.pulls_per_phase(r);
  }
  pulls_global_ += phase_total;
  return true;
}

bool AsyncAgent::ecr_trigger() const {
  if (pulls_global_ <= 0) return false;
  const double ecr =
      std::sqrt(log_inv_delta_ / (2.0 * static_cast<double>(pulls_global_)));
  return ecr <= ecr_last_ / params_.beta;
}

std::vector<QuantizedMean> AsyncAgent::prepare_outgoing() {
  ecr_last_ =
      std::sqrt(log_inv_delta_ / (2.0 * static_cast<double>(pulls_global_)));
  std::vector<QuantizedMean> outgoing(params_.num_arms);
  for (int k : active_) {
    pulls_own_last_[k] = pulls_own_[k];
    reward_sum_last_[k] = reward_sum_[k];
    const double raw = reward_sum_[k] / static_cast<double>(pulls_own_[k]);
    outgoing[k] = quantize(raw, pulls_global_);
    table_[rank_][k] = outgoing[k];
  }
  pulls_rank_last_ = pulls_rank_;
  pulls_global_last_ = pulls_global_;
  ++comm_rounds_;
  return outgoing;
}

double AsyncAgent::estimate(int arm) const {
  const long denom =
      pulls_global_last_ + pulls_own_[arm] - pulls_own_last_[arm];
  if (denom <= 0) throw std::logic_error("estimate: arm not yet sampled");
  double numer = reward_sum_[arm] - reward_sum_last_[arm];
  for (int peer = 0; peer < num_agents_; ++peer)
    numer += static_cast<double>(pulls_rank_last_[peer]) *
             table_[peer][arm].value();
  return numer / static_cast<double>(denom);
}

ConfidenceInterval AsyncAgent::interval(int arm) const {
  ConfidenceInterval ci;
  ci.radius =
      params_.beta *
      std::sqrt(log_inv_delta_ / (2.0 * static_cast<double>(pulls_global_)));
  const double mean = estimate(arm);
  ci.lcb = mean - ci.radius;
  ci.ucb = mean + ci.radius;
  return ci;
}

std::vector<int> AsyncAgent::post_comm_reject() {
  std::vector<ConfidenceInterval> by_arm(params_.num_arms);
  for (int k : active_) by_arm[k] = interval(k);
  const std::vector<int> rejected =
      reject_scan(active_, by_arm, num_agents_);
  for (int k : rejected) {
    rejected_.push_back(k);
    active_.erase(std::remove(active_.begin(), active_.end(), k),
                  active_.end());
  }
  if (static_cast<int>(active_.size()) < num_agents_)
    throw std::logic_error("async: active set shrank below agent count");
  return rejected;
}

bool AsyncAgent::try_complete_sort() {
  std::vector<ConfidenceInterval> by_arm(params_.num_arms);
  std::vector<std::pair<double, int>> ranked;
  for (int k : active_) {
    by_arm[k] = interval(k);
    ranked.emplace_back(-estimate(k), k);  // ties break on arm id
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> top;
  for (int i = 0; i < num_agents_; ++i) top.push_back(ranked[i].second);
  if (!sort_check(top, by_arm)) return false;
  top_ = top;
  sorted_ = true;
  return true;
}

ArmIndex AsyncAgent::exploit_action(long t) const {
  const int j = schedule_.local_index(rank_, t);
  if (j < 0) return kIdle;
  return top_[j];
}

std::vector<int> AsyncAgent::comm_anchors() const {
  if (static_cast<int>(active_.size()) < num_agents_)
    throw std::logic_error("async: not enough anchor arms");
  return std::vector<int>(active_.begin(), active_.begin() + num_agents_);
}

namespace {
long next_multiple(long value, long divisor) {
  return ((value + divisor - 1) / divisor) * divisor;
}
}  // namespace

AsyncRunSummary run_async(BanditEnv& env, double beta,
                          const ActivationSchedule& schedule,
                          double log_inv_delta,
                          double init_watchdog_factor) {
  const BanditConfig& cfg = env.config();
  const int m = cfg.num_agents;
  if (schedule.num_agents() != m)
    throw std::invalid_argument("async: one period per agent required");
  schedule.validate();
  const long cycle = schedule.cycle_length();

  AsyncRunSummary sum;
  std::vector<ArmIndex> actions(m);
  const std::vector<ArmIndex> all_idle(m, kIdle);

  // Idle until the first moment every agent is awake (t = cycle), then run
  // the coordination burst.
  while (env.clock() + 1 < cycle && env.clock() < cfg.horizon)
    env.step(all_idle, Phase::Init);
  if (env.clock() >= cfg.horizon) return sum;

  InitOutcome init = run_initialization(env, init_watchdog_factor);
  sum.init_steps = init.steps;
  sum.init_complete = init.complete;
  if (!init.complete) return sum;

  std::vector<int> agent_of_rank(m);
  for (int a = 0; a < m; ++a) agent_of_rank[init.ranks[a]] = a;

  // From here on the trace's active column reflects the schedule.
  {
    std::vector<int> rank_of(m);
    for (int a = 0; a < m; ++a) rank_of[a] = init.ranks[a];
    env.set_active_provider(
        [schedule, rank_of](int agent, long clock) -> std::uint8_t {
          return schedule.is_active(rank_of[agent], clock + 1) ? 1 : 0;
        });
  }

  AgentParams params;
  params.num_arms = cfg.num_arms;
  params.horizon = cfg.horizon;
  params.beta = beta;
  params.log_inv_delta = log_inv_delta;

  std::vector<AsyncAgent> agents;
  agents.reserve(m);
  for (int a = 0; a < m; ++a)
    agents.emplace_back(params, init.ranks[a], schedule);

  auto note = [&sum](bool ok) { sum.consistency_ok &= ok; };

  // Realign exploration phases to cycle boundaries.
  auto pad_to_boundary = [&](Phase tag) {
    while (env.clock() % cycle != 0 && env.clock() < cfg.horizon)
      env.step(all_idle, tag);
  };
  pad_to_boundary(Phase::Init);

  long boundaries = 0;
  while (!agents[0].sorted() && env.clock() < cfg.horizon) {
    if (++boundaries > 2 * cfg.horizon)
      throw std::runtime_error("run: phase loop exceeded the 2T step cap");
    {
      std::vector<std::vector<int>> views;
      for (const auto& a : agents) views.push_back(a.active_arms());
      bool same = true;
      for (const auto& v : views) same &= v == views.front();
      note(same);
    }
    const long phase_len = agents[0].phase_length();
    for (auto& a : agents) a.begin_explore_phase();
    long step = 0;
    for (; step < phase_len && env.clock() < cfg.horizon; ++step) {
      const long t = env.clock() + 1;  // physical 1-based time
      for (int a = 0; a < m; ++a)
        actions[a] = agents[a].explore_action(t, step);
      const RoundOutcome& out = env.step(actions, Phase::Explore);
      for (int a = 0; a < m; ++a)
        agents[a].observe_explore(env.observation_for(a, out));
    }
    if (step < phase_len) break;

    bool tainted = false;
    for (int a = 0; a < m; ++a) tainted |= !agents[a].end_explore_phase();
    if (tainted) {
      // Collision-free by construction; a taint means a scheduling bug.
      ++sum.explore_collisions;
      sum.consistency_ok = false;
      break;
    }

    std::vector<std::uint8_t> trig(m);
    for (int a = 0; a < m; ++a) trig[a] = agents[a].ecr_trigger();
    bool same_trig = true;
    for (auto v : trig) same_trig &= v == trig[0];
    note(same_trig);
    if (!trig[0]) continue;

    // Boundary communication burst: periodic activation is suspended
    // while the round runs, exactly as during initialization.
    const bool full_round = agents[0].comm_rounds_seen() == 0;
    const std::vector<int> anchors = agents[0].comm_anchors();
    const std::vector<int> arms = agents[0].active_arms();
    std::vector<std::vector<QuantizedMean>> outgoing(m);
    for (int r = 0; r < m; ++r)
      outgoing[r] = agents[agent_of_rank[r]].prepare_outgoing();
    std::vector<PeerTable> tables;
    tables.reserve(m);
    for (int r = 0; r < m; ++r)
      tables.push_back(agents[agent_of_rank[r]].table());
    const CommRoundResult r = run_comm_round(env, anchors, arms, full_round,
                                             tables, outgoing, agent_of_rank);
    ++sum.comm_rounds;
    sum.comm_steps += r.steps;
    sum.messages.insert(sum.messages.end(), r.messages.begin(),
                        r.messages.end());
    if (!r.complete) break;
    for (int rk = 0; rk < m; ++rk)
      agents[agent_of_rank[rk]].table() = std::move(tables[rk]);
    for (int a = 1; a < m; ++a)
      for (int k : arms)
        for (int peer = 0; peer < m; ++peer)
          if (!(agents[a].table()[peer][k] == agents[0].table()[peer][k]))
            sum.agreement_ok = false;

    // Rejection pass; identical at every agent on post-round statistics.
    std::vector<std::vector<int>> rejected(m);
    for (int a = 0; a < m; ++a) rejected[a] = agents[a].post_comm_reject();
    for (int a = 1; a < m; ++a) note(rejected[a] == rejected[0]);

    // Rejection-index broadcast for arms that just left the active set.
    // Runs over the round's frozen arm list so positions line up.
    if (!rejected[0].empty() && env.clock() < cfg.horizon) {
      std::vector<ArmSyncSets> sets(m);
      for (int r2 = 0; r2 < m; ++r2)
        sets[r2].newly_rejected = rejected[agent_of_rank[r2]];
      const ArmSyncResult ar =
          run_comm_a(env, anchors, arms, sets, agent_of_rank);
      ++sum.comm_a_rounds;
      sum.comm_a_steps += ar.steps;
      if (!ar.complete) break;
    }

    std::vector<std::uint8_t> done(m);
    for (int a = 0; a < m; ++a) done[a] = agents[a].try_complete_sort();
    bool same_done = true;
    for (auto v : done) same_done &= v == done[0];
    note(same_done);

    pad_to_boundary(Phase::Comm);
  }

  if (agents[0].sorted() && env.clock() < cfg.horizon) {
    sum.sorted = true;
    sum.sort_time = env.clock();
    while (env.clock() < cfg.horizon) {
      const long t = env.clock() + 1;
      for (int a = 0; a < m; ++a) actions[a] = agents[a].exploit_action(t);
      env.step(actions, Phase::Exploit);
    }
  }
  if (!agents.empty()) sum.top_arms = agents[0].top_arms();
  return sum;
}

}  // namespace mmab
