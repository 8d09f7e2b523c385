#include "mmab/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "mmab/init.hpp"
#include "mmab/schedule.hpp"

namespace mmab {

double AgentParams::resolved_log_inv_delta() const {
  if (log_inv_delta >= 0.0) return log_inv_delta;
  return 2.0 * std::log(static_cast<double>(horizon));  // delta = 1/T^2
}

ScanResult accept_reject_scan(const std::vector<int>& active,
                              const std::vector<ConfidenceInterval>& by_arm,
                              int exploring_count) {
  ScanResult result;
  const int kt = static_cast<int>(active.size());
  for (int k : active) {
    int dominates = 0;
    int dominated_by = 0;
    for (int i : active) {
      if (i == k) continue;
      if (by_arm[k].lcb >= by_arm[i].ucb) ++dominates;
      if (by_arm[k].ucb <= by_arm[i].lcb) ++dominated_by;
    }
    const bool accept = dominates >= kt - exploring_count;
    const bool reject = dominated_by >= exploring_count;
    if (accept && reject)
      throw std::logic_error("scan: arm satisfies both rules");
    if (accept) result.accepted.push_back(k);
    if (reject) result.rejected.push_back(k);
  }
  return result;  // iteration over sorted `active` keeps outputs sorted
}

SyncAgent::SyncAgent(AgentParams params, int rank, int num_agents)
    : params_(params),
      rank_(rank),
      num_agents_(num_agents),
      log_inv_delta_(params.resolved_log_inv_delta()),
      exploring_count_(num_agents) {
  const int k = params_.num_arms;
  active_.resize(k);
  for (int i = 0; i < k; ++i) active_[i] = i;
  pulls_own_.assign(k, 0);
  reward_sum_.assign(k, 0.0);
  pulls_global_.assign(k, 0);
  pulls_own_last_.assign(k, 0);
  reward_sum_last_.assign(k, 0.0);
  pulls_global_last_.assign(k, 0);
  table_.assign(num_agents_, std::vector<QuantizedMean>(k));
  phase_pulls_.assign(k, 0);
  phase_rewards_.assign(k, 0.0);
}

void SyncAgent::begin_explore_phase() {
  std::fill(phase_pulls_.begin(), phase_pulls_.end(), 0);
  std::fill(phase_rewards_.begin(), phase_rewards_.end(), 0.0);
  // A signalling agent taints its own phase by construction.
  phase_tainted_ = signal_pending_;
}

ArmIndex SyncAgent::explore_action(long step_in_phase) const {
  const int pos = static_cast<int>(step_in_phase % num_agents_);
  const int cycle = static_cast<int>(step_in_phase / num_agents_);
  if (signal_pending_ && cycle == 0) {
    // Signal cycle: visit each other agent's scheduled arm once, forcing
    // one collision per victim so every agent learns an arm-state sync is
    // due at the phase boundary.
    const int victim = (rank_ + 1 + pos) % num_agents_;
    if (victim != rank_)
      return schedule_action(victim, pos, cycle, num_agents_,
                             exploring_count_, accepted_, active_);
  }
  return schedule_action(rank_, pos, cycle, num_agents_, exploring_count_,
                         accepted_, active_);
}

void SyncAgent::observe_explore(const Observation& obs, long step_in_phase) {
  if (obs.collided) {
    phase_tainted_ = true;
    return;
  }
  const int pos = static_cast<int>(step_in_phase % num_agents_);
  if (in_exploit_slot(rank_, pos, num_agents_, exploring_count_)) return;
  if (signal_pending_ && step_in_phase < num_agents_) return;  // off-schedule
  phase_pulls_[obs.arm] += 1;
  phase_rewards_[obs.arm] += obs.reward;
}

bool SyncAgent::end_explore_phase() {
  const bool needs_sync = phase_tainted_;
  if (!phase_tainted_) {
    for (int k : active_) {
      pulls_own_[k] += phase_pulls_[k];
      reward_sum_[k] += phase_rewards_[k];
      pulls_global_[k] = static_cast<long>(num_agents_) * pulls_own_[k];
    }
  }
  phase_tainted_ = false;
  signal_pending_ = false;
  return needs_sync;
}

double SyncAgent::ecr_now() const {
  const long pulls = pulls_global_[active_.front()];
  if (pulls <= 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(log_inv_delta_ / (2.0 * static_cast<double>(pulls)));
}

bool SyncAgent::ecr_trigger() const {
  // All active arms share the same pull count under the uniform schedule.
  for (int k : active_)
    if (pulls_global_[k] != pulls_global_[active_.front()])
      throw std::logic_error("ecr: active pull counts diverged");
  return ecr_now() <= ecr_last_ / params_.beta;
}

std::vector<QuantizedMean> SyncAgent::prepare_outgoing() {
  ecr_last_ = ecr_now();
  std::vector<QuantizedMean> outgoing(params_.num_arms);
  for (int k : active_) {
    pulls_own_last_[k] = pulls_own_[k];
    reward_sum_last_[k] = reward_sum_[k];
    pulls_global_last_[k] = pulls_global_[k];
    const double raw = reward_sum_[k] / static_cast<double>(pulls_own_[k]);
    outgoing[k] = quantize(raw, pulls_global_[k]);
    table_[rank_][k] = outgoing[k];  // own row needs no wire round trip
  }
  ++comm_rounds_;
  return outgoing;
}

double SyncAgent::estimate(int arm) const {
  const long denom =
      pulls_global_last_[arm] + pulls_own_[arm] - pulls_own_last_[arm];
  if (denom <= 0) throw std::logic_error("estimate: arm not yet sampled");
  double numer = reward_sum_[arm] - reward_sum_last_[arm];
  for (int peer = 0; peer < num_agents_; ++peer)
    numer += static_cast<double>(pulls_own_last_[arm]) *
             table_[peer][arm].value();
  return numer / static_cast<double>(denom);
}

ConfidenceInterval SyncAgent::interval(int arm) const {
  ConfidenceInterval ci;
  const long pulls = pulls_global_[arm];
  ci.radius = params_.beta *
              std::sqrt(log_inv_delta_ / (2.0 * static_cast<double>(pulls)));
  const double mean = estimate(arm);
  ci.lcb = mean - ci.radius;
  ci.ucb = mean + ci.radius;
  return ci;
}

ScanResult SyncAgent::scan_now() const {
  for (int k : active_)
    if (pulls_own_[k] == 0) return {};
  std::vector<ConfidenceInterval> by_arm(params_.num_arms);
  for (int k : active_) by_arm[k] = interval(k);
  return accept_reject_scan(active_, by_arm, exploring_count_);
}

void SyncAgent::apply_scan(const ScanResult& scan) {
  for (int k : scan.accepted) {
    accepted_.push_back(k);
    active_.erase(std::remove(active_.begin(), active_.end(), k),
                  active_.end());
  }
  for (int k : scan.rejected) {
    rejected_.push_back(k);
    active_.erase(std::remove(active_.begin(), active_.end(), k),
                  active_.end());
  }
  exploring_count_ = num_agents_ - static_cast<int>(accepted_.size());
  if (static_cast<int>(active_.size()) < exploring_count_ &&
      !exploration_done())
    throw std::logic_error("scan: fewer active arms than explorers");
}

ScanResult SyncAgent::post_comm_scan() {
  // Immediately after a round the estimator reduces to shared quantities,
  // so this scan lands identically at every agent and applies directly.
  ScanResult total;
  while (!exploration_done()) {
    ScanResult s = scan_now();
    if (!s.changed()) break;
    apply_scan(s);
    total.accepted.insert(total.accepted.end(), s.accepted.begin(),
                          s.accepted.end());
    total.rejected.insert(total.rejected.end(), s.rejected.begin(),
                          s.rejected.end());
  }
  buffered_accepted_.clear();
  buffered_rejected_.clear();
  signal_pending_ = false;
  return total;
}

void SyncAgent::private_scan_and_buffer() {
  if (exploration_done()) return;
  if (num_agents_ == 1) {
    // Nothing to synchronize with: local decisions are final.
    while (!exploration_done()) {
      ScanResult s = scan_now();
      if (!s.changed()) break;
      apply_scan(s);
    }
    return;
  }
  const ScanResult s = scan_now();
  auto merge = [](std::vector<int>& into, const std::vector<int>& from) {
    for (int k : from)
      if (std::find(into.begin(), into.end(), k) == into.end())
        into.push_back(k);
    std::sort(into.begin(), into.end());
  };
  merge(buffered_accepted_, s.accepted);
  merge(buffered_rejected_, s.rejected);
  signal_pending_ =
      !buffered_accepted_.empty() || !buffered_rejected_.empty();
}

void SyncAgent::no_comm_boundary() { private_scan_and_buffer(); }

ArmSyncSets SyncAgent::take_pending_sets() {
  ArmSyncSets sets;
  sets.newly_accepted = buffered_accepted_;
  sets.newly_rejected = buffered_rejected_;
  return sets;
}

void SyncAgent::apply_arm_sync(const ArmSyncSets& merged) {
  ScanResult s;
  s.accepted = merged.newly_accepted;  // sorted by arm id
  s.rejected = merged.newly_rejected;
  apply_scan(s);
  buffered_accepted_.clear();
  buffered_rejected_.clear();
  signal_pending_ = false;
  private_scan_and_buffer();  // thresholds changed; stage another pass
}

ArmIndex SyncAgent::exploit_action(long step_in_exploit) const {
  const int pos = static_cast<int>(step_in_exploit % num_agents_);
  const int idx = ((pos - rank_) % num_agents_ + num_agents_) % num_agents_;
  return accepted_[idx];
}

std::vector<int> SyncAgent::comm_anchors() const {
  std::vector<int> anchors;
  for (int k : active_) {
    if (static_cast<int>(anchors.size()) == num_agents_) break;
    anchors.push_back(k);
  }
  if (static_cast<int>(anchors.size()) < num_agents_) {
    std::vector<int> acc_sorted = accepted_;
    std::sort(acc_sorted.begin(), acc_sorted.end());
    for (int k : acc_sorted) {
      if (static_cast<int>(anchors.size()) == num_agents_) break;
      anchors.push_back(k);
    }
  }
  if (static_cast<int>(anchors.size()) < num_agents_)
    throw std::logic_error("comm: not enough anchor arms");
  return anchors;
}

std::string SyncAgent::debug_snapshot_json() const {
  nlohmann::ordered_json j;
  j["rank"] = rank_;
  j["agents"] = num_agents_;
  j["exploring"] = exploring_count_;
  auto one_based = [](const std::vector<int>& arms) {
    std::vector<int> out;
    for (int k : arms) out.push_back(k + 1);
    return out;
  };
  j["active"] = one_based(active_);
  j["accepted"] = one_based(accepted_);
  j["rejected"] = one_based(rejected_);
  j["ecr_last"] = ecr_last_;
  j["comm_rounds"] = comm_rounds_;
  j["signal_pending"] = signal_pending_;
  j["buffered_accepted"] = one_based(buffered_accepted_);
  j["buffered_rejected"] = one_based(buffered_rejected_);
  nlohmann::ordered_json arms = nlohmann::ordered_json::array();
  for (int k = 0; k < params_.num_arms; ++k) {
    nlohmann::ordered_json arm;
    arm["arm"] = k + 1;
    arm["own_pulls"] = pulls_own_[k];
    arm["own_reward"] = reward_sum_[k];
    arm["global_pulls"] = pulls_global_[k];
    arm["own_pulls_last"] = pulls_own_last_[k];
    arm["global_pulls_last"] = pulls_global_last_[k];
    arms.push_back(arm);
  }
  j["stats"] = arms;
  return j.dump();
}

namespace {

template <typename T>
bool all_equal(const std::vector<T>& values) {
  for (const T& v : values)
    if (!(v == values.front())) return false;
  return true;
}

}  // namespace

SyncRunSummary run_syncd(BanditEnv& env, double beta, double log_inv_delta,
                         double init_watchdog_factor) {
  const BanditConfig& cfg = env.config();
  const int m = cfg.num_agents;
  SyncRunSummary sum;

  InitOutcome init = run_initialization(env, init_watchdog_factor);
  sum.init_steps = init.steps;
  sum.init_complete = init.complete;
  if (!init.complete) return sum;

  AgentParams params;
  params.num_arms = cfg.num_arms;
  params.horizon = cfg.horizon;
  params.beta = beta;
  params.log_inv_delta = log_inv_delta;

  std::vector<SyncAgent> agents;
  agents.reserve(m);
  for (int a = 0; a < m; ++a) agents.emplace_back(params, init.ranks[a], m);

  std::vector<int> agent_of_rank(m);  // channel identity is the rank
  for (int a = 0; a < m; ++a) agent_of_rank[init.ranks[a]] = a;

  std::vector<ArmIndex> actions(m);
  auto note = [&sum](bool ok) { sum.consistency_ok &= ok; };

  long boundaries = 0;
  while (!agents[0].exploration_done() && env.clock() < cfg.horizon) {
    // Hard cap: a boundary always consumes at least one env step, so more
    // boundaries than 2T means the phase logic stopped advancing.
    if (++boundaries > 2 * cfg.horizon)
      throw std::runtime_error("run: phase loop exceeded the 2T step cap");
    {
      std::vector<std::vector<int>> views;
      for (const auto& a : agents) views.push_back(a.active());
      note(all_equal(views));
      views.clear();
      for (const auto& a : agents) views.push_back(a.accepted());
      note(all_equal(views));
    }

    const long phase_len = agents[0].phase_length();
    bool any_signal = false;
    for (const auto& a : agents) any_signal |= a.signalling();
    for (auto& a : agents) a.begin_explore_phase();

    long step = 0;
    for (; step < phase_len && env.clock() < cfg.horizon; ++step) {
      for (int a = 0; a < m; ++a) actions[a] = agents[a].explore_action(step);
      const Phase tag = any_signal && step < m ? Phase::CommArms
                                               : Phase::Explore;
      const RoundOutcome& out = env.step(actions, tag);
      for (int a = 0; a < m; ++a)
        agents[a].observe_explore(env.observation_for(a, out), step);
    }
    if (step < phase_len) break;  // horizon hit mid-phase
    if (any_signal) ++sum.signal_phases;

    std::vector<std::uint8_t> needs(m);
    for (int a = 0; a < m; ++a) needs[a] = agents[a].end_explore_phase();
    note(all_equal(needs));
    const bool needs_sync =
        std::any_of(needs.begin(), needs.end(), [](auto v) { return v; });

    if (needs_sync) {
      const std::vector<int> anchors = agents[0].comm_anchors();
      const std::vector<int> arms = agents[0].active();
      std::vector<ArmSyncSets> sets(m);
      for (int r = 0; r < m; ++r)
        sets[r] = agents[agent_of_rank[r]].take_pending_sets();
      const ArmSyncResult r = run_comm_a(env, anchors, arms, sets,
                                         agent_of_rank);
      ++sum.comm_a_rounds;
      sum.comm_a_steps += r.steps;
      if (!r.complete) break;
      for (int i = 1; i < m; ++i) {
        note(sets[i].newly_accepted == sets[0].newly_accepted);
        note(sets[i].newly_rejected == sets[0].newly_rejected);
      }
      for (int r = 0; r < m; ++r)
        agents[agent_of_rank[r]].apply_arm_sync(sets[r]);
      continue;
    }

    std::vector<std::uint8_t> trig(m);
    for (int a = 0; a < m; ++a) trig[a] = agents[a].ecr_trigger();
    note(all_equal(trig));
    if (!trig[0]) {
      for (auto& a : agents) a.no_comm_boundary();
      continue;
    }

    const bool full_round = agents[0].comm_rounds_seen() == 0;
    const std::vector<int> anchors = agents[0].comm_anchors();
    const std::vector<int> arms = agents[0].active();
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

    std::vector<ScanResult> scans(m);
    for (int a = 0; a < m; ++a) scans[a] = agents[a].post_comm_scan();
    for (int a = 1; a < m; ++a) {
      note(scans[a].accepted == scans[0].accepted);
      note(scans[a].rejected == scans[0].rejected);
    }
  }

  if (agents[0].exploration_done() && env.clock() < cfg.horizon) {
    sum.identified = true;
    sum.identify_time = env.clock();
    long step = 0;
    while (env.clock() < cfg.horizon) {
      for (int a = 0; a < m; ++a) actions[a] = agents[a].exploit_action(step);
      env.step(actions, Phase::Exploit);
      ++step;
    }
  }
  sum.final_accepted = agents[0].accepted();
  return sum;
}

}  // namespace mmab
