#include "mmab/env.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mmab {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b << 32);
  // Warm the state so nearby seeds decorrelate.
  splitmix64(s);
  splitmix64(s);
  return s;
}

}  // namespace

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Init: return "init";
    case Phase::Explore: return "explore";
    case Phase::Comm: return "comm";
    case Phase::CommArms: return "comm_a";
    case Phase::Exploit: return "exploit";
  }
  return "?";
}

void BanditConfig::validate() const {
  if (num_arms < 2) throw std::invalid_argument("config: K must be >= 2");
  if (num_agents < 1 || num_agents >= num_arms)
    throw std::invalid_argument("config: requires 1 <= M < K");
  if (horizon < 1) throw std::invalid_argument("config: T must be >= 1");
  if (static_cast<int>(means.size()) != num_arms)
    throw std::invalid_argument("config: means must have K entries");
  for (double mu : means)
    if (!(mu >= 0.0 && mu <= 1.0))
      throw std::invalid_argument("config: means must lie in [0,1]");
}

bool BanditConfig::has_tied_means() const {
  for (size_t i = 0; i < means.size(); ++i)
    for (size_t j = i + 1; j < means.size(); ++j)
      if (means[i] == means[j]) return true;
  return false;
}

BanditEnv::BanditEnv(BanditConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  stream_.resize(static_cast<size_t>(cfg_.num_agents) * cfg_.num_arms);
  for (int m = 0; m < cfg_.num_agents; ++m)
    for (int k = 0; k < cfg_.num_arms; ++k)
      stream_[static_cast<size_t>(m) * cfg_.num_arms + k] =
          mix_seed(cfg_.seed, static_cast<std::uint64_t>(m) + 1,
                   static_cast<std::uint64_t>(k) + 1);
  pull_count_.assign(cfg_.num_arms, 0);
  outcome_.agents.resize(cfg_.num_agents);
}

double BanditEnv::sample(int agent, int arm) {
  std::uint64_t& s = stream_[static_cast<size_t>(agent) * cfg_.num_arms + arm];
  const double u =
      static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;  // [0,1)
  return u < cfg_.means[arm] ? 1.0 : 0.0;
}

const RoundOutcome& BanditEnv::step(std::span<const ArmIndex> actions,
                                    Phase phase) {
  if (clock_ >= cfg_.horizon)
    throw std::runtime_error("env: step past horizon");
  if (static_cast<int>(actions.size()) != cfg_.num_agents)
    throw std::invalid_argument("env: one action per agent required");

  for (int k = 0; k < cfg_.num_arms; ++k) pull_count_[k] = 0;
  for (ArmIndex a : actions) {
    if (a == kIdle) continue;
    if (a < 0 || a >= cfg_.num_arms)
      throw std::invalid_argument("env: arm index out of range");
    ++pull_count_[a];
  }

  outcome_.t = clock_;
  for (int m = 0; m < cfg_.num_agents; ++m) {
    AgentOutcome& ao = outcome_.agents[m];
    ao.arm = actions[m];
    if (ao.arm == kIdle) {
      ao.collided = false;
      ao.reward = 0;
      continue;
    }
    ao.collided = pull_count_[ao.arm] >= 2;
    // One Bernoulli draw per pulling agent; masked to zero on collision so
    // the per-(agent,arm) stream advances identically either way.
    const double x = sample(m, ao.arm);
    ao.reward = ao.collided ? 0 : static_cast<std::uint8_t>(x);
  }

  if (trace_enabled_) {
    for (int m = 0; m < cfg_.num_agents; ++m) {
      const AgentOutcome& ao = outcome_.agents[m];
      TraceRow row;
      row.t = static_cast<std::uint32_t>(clock_);
      row.agent = static_cast<std::uint8_t>(m);
      row.arm = static_cast<std::int16_t>(ao.arm);
      row.collided = ao.collided ? 1 : 0;
      row.reward = ao.reward;
      row.phase = phase;
      row.active = active_provider_ ? active_provider_(m, clock_) : 1;
      trace_.push_back(row);
    }
  }
  ++clock_;
  return outcome_;
}

Observation BanditEnv::observation_for(int agent,
                                       const RoundOutcome& outcome) const {
  const AgentOutcome& ao = outcome.agents.at(agent);
  Observation obs;
  obs.arm = ao.arm;
  obs.collided = ao.arm == kIdle ? false : ao.collided;
  obs.reward = ao.reward;
  return obs;
}

void BanditEnv::write_trace_csv(std::ostream& os) const {
  os << "t,agent,arm,collision,reward,phase,active\n";
  for (const TraceRow& r : trace_) {
    os << r.t << ',' << int(r.agent) << ','
       << (r.arm < 0 ? 0 : r.arm + 1) << ',' << int(r.collided) << ','
       << int(r.reward) << ',' << phase_name(r.phase) << ',' << int(r.active)
       << '\n';
  }
}

}  // namespace mmab
