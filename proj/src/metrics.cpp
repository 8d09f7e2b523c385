#include "mmab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "mmab/codec.hpp"

namespace mmab {

namespace {

/// Arm ids sorted by mean descending, ties by id.
std::vector<int> order_by_mean(const std::vector<double>& means) {
  std::vector<int> order(means.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return means[a] > means[b]; });
  return order;
}

double top_m_sum(const std::vector<double>& means, int m) {
  const auto order = order_by_mean(means);
  double sum = 0.0;
  for (int i = 0; i < m; ++i) sum += means[order[i]];
  return sum;
}

}  // namespace

GapProfile make_gap_profile(const std::vector<double>& means, int num_agents,
                            const std::vector<int>& activity_levels) {
  const int k = static_cast<int>(means.size());
  const int m = num_agents;
  const auto order = order_by_mean(means);
  GapProfile profile;
  profile.delta.assign(k, 0.0);
  profile.delta_hat.assign(k, 0.0);

  const double mu_m = means[order[m - 1]];
  const double mu_m1 = m < k ? means[order[m]] : 0.0;
  for (int pos = 0; pos < k; ++pos) {
    const int arm = order[pos];
    profile.delta[arm] =
        pos < m ? means[arm] - mu_m1 : mu_m - means[arm];
  }

  std::vector<int> levels = activity_levels;
  if (levels.empty()) levels = {m};
  std::sort(levels.begin(), levels.end());
  for (int pos = 0; pos < k; ++pos) {
    const int arm = order[pos];
    // Largest critical level strictly above this arm's rank.
    int critical = -1;
    for (int level : levels)
      if (level <= pos) critical = level;  // level k* covers ranks < k*
    if (pos >= m && critical < m) critical = m;
    profile.delta_hat[arm] =
        critical < 0 ? std::numeric_limits<double>::infinity()
                     : means[order[critical - 1]] - means[arm];
  }

  profile.delta_min = std::numeric_limits<double>::infinity();
  profile.delta_max = 0.0;
  for (double d : profile.delta) {
    if (d > 0.0) profile.delta_min = std::min(profile.delta_min, d);
    profile.delta_max = std::max(profile.delta_max, d);
  }
  return profile;
}

RegretBreakdown compute_regret(const std::vector<TraceRow>& trace,
                               const BanditConfig& cfg) {
  const int m = cfg.num_agents;
  const double optimal = top_m_sum(cfg.means, m);
  const double mu_star = optimal / m;
  const long steps = static_cast<long>(trace.size()) / m;

  RegretBreakdown out;
  std::vector<double> agent_mean_credit(m, 0.0);
  std::vector<double> agent_reward(m, 0.0);

  for (long s = 0; s < steps; ++s) {
    double step_credit = 0.0;
    Phase tag = Phase::Explore;
    for (int a = 0; a < m; ++a) {
      const TraceRow& row = trace[s * m + a];
      tag = row.phase;
      if (row.arm >= 0 && !row.collided) {
        const double mu = cfg.means[row.arm];
        step_credit += mu;
        agent_mean_credit[row.agent] += mu;
      }
      agent_reward[row.agent] += row.reward;
    }
    const double deficit = optimal - step_credit;
    out.group_pseudo += deficit;
    switch (tag) {
      case Phase::Init: out.r_init += deficit; break;
      case Phase::Comm:
      case Phase::CommArms: out.r_comm += deficit; break;
      default: out.r_explo += deficit; break;
    }
  }

  double total_reward = 0.0;
  for (int a = 0; a < m; ++a) total_reward += agent_reward[a];
  out.group_realized = optimal * static_cast<double>(steps) - total_reward;

  out.individual_pseudo = 0.0;
  out.individual_realized = 0.0;
  for (int a = 0; a < m; ++a) {
    out.individual_pseudo =
        std::max(out.individual_pseudo,
                 mu_star * static_cast<double>(steps) - agent_mean_credit[a]);
    out.individual_realized =
        std::max(out.individual_realized,
                 mu_star * static_cast<double>(steps) - agent_reward[a]);
  }

  out.decomposition_residual =
      std::abs(out.group_pseudo - (out.r_init + out.r_comm + out.r_explo));
  return out;
}

double phase_regret(const std::vector<TraceRow>& trace,
                    const BanditConfig& cfg, Phase tag) {
  const int m = cfg.num_agents;
  const double optimal = top_m_sum(cfg.means, m);
  const long steps = static_cast<long>(trace.size()) / m;
  double total = 0.0;
  for (long s = 0; s < steps; ++s) {
    if (trace[s * m].phase != tag) continue;
    double credit = 0.0;
    for (int a = 0; a < m; ++a) {
      const TraceRow& row = trace[s * m + a];
      if (row.arm >= 0 && !row.collided) credit += cfg.means[row.arm];
    }
    total += optimal - credit;
  }
  return total;
}

double async_regret(const std::vector<TraceRow>& trace,
                    const BanditConfig& cfg,
                    const ActivationSchedule& schedule) {
  const int m = cfg.num_agents;
  const auto order = order_by_mean(cfg.means);
  std::vector<double> top_prefix(m + 1, 0.0);
  for (int i = 0; i < m; ++i)
    top_prefix[i + 1] = top_prefix[i] + cfg.means[order[i]];

  const long steps = static_cast<long>(trace.size()) / m;
  double total = 0.0;
  for (long s = 0; s < steps; ++s) {
    const long t = trace[s * m].t + 1;  // physical 1-based time
    const int level = schedule.active_count(t);
    double credit = 0.0;
    for (int a = 0; a < m; ++a) {
      const TraceRow& row = trace[s * m + a];
      if (row.arm >= 0 && !row.collided) credit += cfg.means[row.arm];
    }
    total += top_prefix[level] - credit;
  }
  return total;
}

double comm_rounds_bound(const std::vector<double>& means, int num_agents,
                         double beta) {
  const auto order = order_by_mean(means);
  const int k = static_cast<int>(means.size());
  const int m = num_agents;
  const double mu_m = means[order[m - 1]];
  const double mu_m1 = m < k ? means[order[m]] : 0.0;
  double bound = 0.0;
  for (int pos = 0; pos < k; ++pos) {
    const double gap = pos < m ? means[order[pos]] - mu_m1
                               : mu_m - means[order[pos]];
    if (gap <= 0.0) continue;
    bound += std::log(8.0 * beta / gap) / std::log(beta);
  }
  return bound;
}

double message_bits_bound(int num_agents, double beta) {
  return 7.0 +
         std::log2(1.0 + beta +
                   std::sqrt(num_agents * std::numbers::ln2_v<double> / 2.0));
}

double regret_bound_reference(const BanditConfig& cfg, double beta,
                          double measured_init_regret) {
  const int m = cfg.num_agents;
  const int k = cfg.num_arms;
  const double log_t = std::log(static_cast<double>(cfg.horizon));
  const GapProfile gaps = make_gap_profile(cfg.means, m, {m});

  double exploration = 0.0;
  const auto order = order_by_mean(cfg.means);
  for (int pos = m; pos < k; ++pos) {
    const double gap = gaps.delta[order[pos]];
    if (gap <= 0.0) continue;
    exploration += 32.0 * beta * beta * (beta + 2.0) * log_t / gap +
                   static_cast<double>(m) * k * gap;
  }

  const double m3 = 2.0 * std::pow(static_cast<double>(m), 3.0);
  const double first_msg =
      m3 * (1.0 + 0.5 * std::log(log_t / (beta * beta) +
                                 static_cast<double>(m) * k));
  double round_sum = 0.0;
  for (int arm = 0; arm < k; ++arm) {
    const double gap = gaps.delta[arm];
    if (gap <= 0.0) continue;
    round_sum += std::log(8.0 * beta / gap) / std::log(beta);
  }
  const double payload = m3 * (round_sum - 1.0) *
                         message_bits_bound(m, beta);

  return exploration + measured_init_regret + m3 * k + first_msg + payload;
}

double lower_bound_constant(const std::vector<double>& means,
                            const std::vector<int>& activity_levels) {
  GapProfile profile = make_gap_profile(
      means, activity_levels.empty()
                 ? static_cast<int>(means.size()) - 1
                 : *std::max_element(activity_levels.begin(),
                                     activity_levels.end()),
      activity_levels);
  double constant = 0.0;
  for (double d : profile.delta_hat)
    if (d > 0.0 && std::isfinite(d)) constant += 1.0 / d;
  return constant;
}

CommAccounting comm_accounting(const std::vector<MessageRecord>& messages,
                               int rounds) {
  CommAccounting acc;
  acc.rounds = rounds;
  long diff_bits = 0;
  long diff_count = 0;
  for (const MessageRecord& msg : messages) {
    ++acc.messages;
    acc.total_bits += msg.payload_bits + 1;
    acc.total_steps += msg.steps;
    if (msg.full_width) {
      const int width = msg.payload_bits + 1;
      if (acc.first_message_width < 0) acc.first_message_width = width;
      if (width != acc.first_message_width ||
          width != quantization_bits(msg.basis_pulls) + 1)
        acc.first_width_consistent = false;
    } else {
      diff_bits += msg.payload_bits + 1;
      ++diff_count;
    }
  }
  acc.mean_message_bits =
      diff_count > 0 ? static_cast<double>(diff_bits) / diff_count : 0.0;
  return acc;
}

std::vector<CurvePoint> regret_curve(const std::vector<TraceRow>& trace,
                                     const BanditConfig& cfg, int points) {
  const int m = cfg.num_agents;
  const double optimal = top_m_sum(cfg.means, m);
  const double mu_star = optimal / m;
  const long steps = static_cast<long>(trace.size()) / m;
  if (steps == 0 || points < 1) return {};
  const long stride = std::max(1L, steps / points);

  std::vector<CurvePoint> curve;
  double group = 0.0;
  std::vector<double> agent_credit(m, 0.0);
  for (long s = 0; s < steps; ++s) {
    double step_credit = 0.0;
    for (int a = 0; a < m; ++a) {
      const TraceRow& row = trace[s * m + a];
      if (row.arm >= 0 && !row.collided) {
        step_credit += cfg.means[row.arm];
        agent_credit[row.agent] += cfg.means[row.arm];
      }
    }
    group += optimal - step_credit;
    if ((s + 1) % stride == 0 || s + 1 == steps) {
      CurvePoint p;
      p.t = s + 1;
      p.group_pseudo = group;
      for (int a = 0; a < m; ++a)
        p.individual_pseudo =
            std::max(p.individual_pseudo,
                     mu_star * static_cast<double>(s + 1) - agent_credit[a]);
      curve.push_back(p);
    }
  }
  return curve;
}

}  // namespace mmab
