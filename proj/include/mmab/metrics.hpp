#pragma once

#include <vector>

#include "mmab/activation.hpp"
#include "mmab/channel.hpp"
#include "mmab/env.hpp"

namespace mmab {

/// Suboptimality gaps, per arm in config order.
/// `delta` follows the upper-bound convention: mu(k) - mu(M+1) for a
/// top-M arm, mu(M) - mu(k) otherwise (ranks by mean, descending).
/// `delta_hat` follows the lower-bound convention driven by activity
/// levels: infinity for arms inside every dynamic optimal set, otherwise
/// the gap to the nearest critical arm.
struct GapProfile {
  std::vector<double> delta;
  std::vector<double> delta_hat;
  double delta_min = 0.0;  // smallest positive delta
  double delta_max = 0.0;
};

GapProfile make_gap_profile(const std::vector<double>& means, int num_agents,
                            const std::vector<int>& activity_levels);

/// Regret quantities computed from a completed trace. Pseudo variants
/// credit each non-collided pull with its true mean; realized variants
/// use the sampled rewards. The per-phase split follows the trace tags,
/// with both communication tags pooled into r_comm and exploitation
/// counted with exploration.
struct RegretBreakdown {
  double group_pseudo = 0.0;
  double group_realized = 0.0;
  double individual_pseudo = 0.0;
  double individual_realized = 0.0;
  double r_init = 0.0;
  double r_comm = 0.0;
  double r_explo = 0.0;
  /// |group_pseudo - (r_init + r_comm + r_explo)|, zero up to float
  /// reassociation.
  double decomposition_residual = 0.0;
};

RegretBreakdown compute_regret(const std::vector<TraceRow>& trace,
                               const BanditConfig& cfg);

/// Group pseudo-regret restricted to rows with the given tags.
double phase_regret(const std::vector<TraceRow>& trace,
                    const BanditConfig& cfg, Phase tag);

/// Asynchronous pseudo-regret: the benchmark at each step is the sum of
/// the top-|A(t)| means with A(t) taken from the schedule; every
/// non-collided pull is credited with its mean.
double async_regret(const std::vector<TraceRow>& trace,
                    const BanditConfig& cfg,
                    const ActivationSchedule& schedule);

/// Analytical reference quantities (reported alongside measurements,
/// never asserted: the constants are loose).
double comm_rounds_bound(const std::vector<double>& means, int num_agents,
                         double beta);
double message_bits_bound(int num_agents, double beta);
double regret_bound_reference(const BanditConfig& cfg, double beta,
                          double measured_init_regret);
/// Sum of inverse lower-bound gaps over arms with a finite positive gap.
double lower_bound_constant(const std::vector<double>& means,
                            const std::vector<int>& activity_levels);

struct CommAccounting {
  int rounds = 0;
  long messages = 0;
  long total_bits = 0;          // sign included, every message
  long total_steps = 0;
  double mean_message_bits = 0.0;       // differential messages, sign incl.
  int first_message_width = -1;         // uniform across the full round
  bool first_width_consistent = true;   // matches the quantization rule
};

CommAccounting comm_accounting(const std::vector<MessageRecord>& messages,
                               int rounds);

struct CurvePoint {
  long t = 0;
  double group_pseudo = 0.0;
  double individual_pseudo = 0.0;
};

/// Cumulative regret sampled at (roughly) `points` evenly spaced times.
std::vector<CurvePoint> regret_curve(const std::vector<TraceRow>& trace,
                                     const BanditConfig& cfg, int points);

}  // namespace mmab
