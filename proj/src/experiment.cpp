#include "mmab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mmab/agent.hpp"
#include "mmab/async_agent.hpp"

namespace mmab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_arms(const std::vector<int>& arms) {
  std::string out;
  for (size_t i = 0; i < arms.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(arms[i] + 1);  // 1-based in outputs
  }
  return out;
}

}  // namespace

void ExperimentSpec::validate() const {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  check(bandit.num_arms >= 2, "K must be >= 2");
  check(bandit.num_agents >= 1 && bandit.num_agents < bandit.num_arms,
        "requires 1 <= M < K");
  check(bandit.horizon >= 1, "T must be >= 1");
  check(static_cast<int>(bandit.means.size()) == bandit.num_arms,
        "means must have K entries");
  for (double mu : bandit.means)
    check(mu >= 0.0 && mu <= 1.0, "means must lie in [0,1]");
  check(beta > 1.0, "beta must be > 1");
  check(algorithm == "syncd" || algorithm == "async",
        "algorithm must be syncd or async");
  if (algorithm == "async") {
    check(static_cast<int>(periods.size()) == bandit.num_agents,
          "async needs one activation period per agent");
    for (long p : periods) check(p >= 1, "periods must be >= 1");
  }
  check(num_seeds >= 1 || !explicit_seeds.empty(), "seeds must be >= 1");
  check(curve_points >= 1, "curve_points must be >= 1");
  if (!errors.empty()) {
    std::string all;
    for (const auto& e : errors) {
      if (!all.empty()) all += "; ";
      all += e;
    }
    throw std::invalid_argument(all);
  }
}

std::vector<std::string> ExperimentSpec::warnings() const {
  std::vector<std::string> warn;
  if (bandit.has_tied_means())
    warn.push_back(
        "tied arm means: elimination between tied arms never resolves");
  return warn;
}

std::vector<std::uint64_t> ExperimentSpec::run_seeds() const {
  if (!explicit_seeds.empty()) return explicit_seeds;
  std::vector<std::uint64_t> seeds(num_seeds);
  for (int i = 0; i < num_seeds; ++i) seeds[i] = bandit.seed + i;
  return seeds;
}

std::string ExperimentSpec::to_json() const {
  nlohmann::ordered_json j;
  j["K"] = bandit.num_arms;
  j["M"] = bandit.num_agents;
  j["T"] = bandit.horizon;
  j["means"] = bandit.means;
  j["seed"] = bandit.seed;
  j["algorithm"] = algorithm;
  j["beta"] = beta;
  j["delta_rule"] = "1/T^2";
  if (algorithm == "async") j["periods"] = periods;
  if (!explicit_seeds.empty())
    j["seeds"] = explicit_seeds;
  else
    j["seeds"] = num_seeds;
  j["out_dir"] = out_dir;
  j["dump_traces"] = dump_traces;
  j["curve_points"] = curve_points;
  return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  ExperimentSpec spec;
  spec.bandit.num_arms = j.value("K", 0);
  spec.bandit.num_agents = j.value("M", 0);
  spec.bandit.horizon = j.value("T", 0L);
  if (j.contains("means")) {
    spec.bandit.means = j["means"].get<std::vector<double>>();
  } else if (j.contains("means_linspace")) {
    const auto ends = j["means_linspace"].get<std::vector<double>>();
    if (ends.size() != 2)
      throw std::invalid_argument("means_linspace needs [high, low]");
    spec.bandit.means.resize(spec.bandit.num_arms);
    const int k = spec.bandit.num_arms;
    for (int i = 0; i < k; ++i)
      spec.bandit.means[i] =
          ends[0] + (ends[1] - ends[0]) * i / std::max(1, k - 1);
  }
  spec.bandit.seed = j.value("seed", std::uint64_t{1});
  spec.algorithm = j.value("algorithm", std::string("syncd"));
  spec.beta = j.value("beta", 4.0);
  if (j.contains("periods"))
    spec.periods = j["periods"].get<std::vector<long>>();
  if (j.contains("seeds")) {
    if (j["seeds"].is_array())
      spec.explicit_seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    else
      spec.num_seeds = j["seeds"].get<int>();
  }
  spec.out_dir = j.value("out_dir", std::string("out"));
  spec.dump_traces = j.value("dump_traces", false);
  spec.curve_points = j.value("curve_points", 512);
  return spec;
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::uint64_t ExperimentSpec::config_hash() const {
  const std::string text = to_json();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunResult run_single(const ExperimentSpec& spec, std::uint64_t seed,
                     std::string* trace_csv) {
  RunResult result;
  result.seed = seed;
  BanditConfig cfg = spec.bandit;
  cfg.seed = seed;

  try {
    BanditEnv env(cfg);
    if (spec.algorithm == "syncd") {
      const SyncRunSummary s =
          run_syncd(env, spec.beta, -1.0, spec.init_watchdog_factor);
      result.init_complete = s.init_complete;
      result.init_steps = s.init_steps;
      result.identified = s.identified;
      result.identify_time = s.identify_time;
      result.final_arms = s.final_accepted;
      result.signal_phases = s.signal_phases;
      result.agreement_ok = s.agreement_ok;
      result.consistency_ok = s.consistency_ok;
      result.comm = comm_accounting(s.messages, s.comm_rounds);
      result.messages = s.messages;
    } else {
      ActivationSchedule schedule{spec.periods};
      const AsyncRunSummary s = run_async(env, spec.beta, schedule, -1.0,
                                          spec.init_watchdog_factor);
      result.init_complete = s.init_complete;
      result.init_steps = s.init_steps;
      result.identified = s.sorted;
      result.identify_time = s.sort_time;
      result.final_arms = s.top_arms;
      result.agreement_ok = s.agreement_ok;
      result.consistency_ok = s.consistency_ok;
      result.comm = comm_accounting(s.messages, s.comm_rounds);
      result.messages = s.messages;
      result.async_pseudo_regret =
          async_regret(env.trace(), cfg, schedule);
      result.lower_bound_const =
          lower_bound_constant(cfg.means, schedule.activity_levels());
    }

    result.regret = compute_regret(env.trace(), cfg);
    result.curve = regret_curve(env.trace(), cfg, spec.curve_points);
    for (const TraceRow& row : env.trace())
      if (row.collided &&
          (row.phase == Phase::Explore || row.phase == Phase::Exploit))
        result.collision_free = false;
    result.decomposition_ok =
        result.regret.decomposition_residual <=
        1e-9 * std::max(1.0, result.regret.group_pseudo);

    result.rounds_bound =
        comm_rounds_bound(cfg.means, cfg.num_agents, spec.beta);
    result.bits_bound = message_bits_bound(cfg.num_agents, spec.beta);
    result.regret_bound_ref =
        regret_bound_reference(cfg, spec.beta, result.regret.r_init);
    if (spec.algorithm == "syncd")
      result.lower_bound_const =
          lower_bound_constant(cfg.means, {cfg.num_agents});

    if (trace_csv) {
      std::ostringstream os;
      env.write_trace_csv(os);
      *trace_csv = os.str();
    }
    result.completed = true;
  } catch (const std::exception& e) {
    result.completed = false;
    result.error = e.what();
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, bool parallel) {
  spec.validate();
  const std::vector<std::uint64_t> seeds = spec.run_seeds();
  ExperimentResult result;
  result.runs.resize(seeds.size());

  const int n = static_cast<int>(seeds.size());
#if defined(MMAB_HAVE_OPENMP)
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i)
      result.runs[i] = run_single(spec, seeds[i]);
  } else {
    for (int i = 0; i < n; ++i)
      result.runs[i] = run_single(spec, seeds[i]);
  }
#else
  (void)parallel;
  for (int i = 0; i < n; ++i) result.runs[i] = run_single(spec, seeds[i]);
#endif

  for (const RunResult& r : result.runs) result.all_ok &= r.invariants_ok();
  return result;
}

std::vector<SweepEntry> sweep(const ExperimentSpec& base,
                              const std::string& parameter,
                              const std::vector<double>& values,
                              bool parallel) {
  std::vector<SweepEntry> entries;
  for (double value : values) {
    SweepEntry entry;
    entry.value = value;
    entry.spec = base;
    if (parameter == "delta_gap") {
      const int k = base.bandit.num_arms;
      entry.spec.bandit.means.resize(k);
      for (int i = 0; i < k; ++i)
        entry.spec.bandit.means[i] = 0.9 - value * i;
    } else if (parameter == "beta") {
      entry.spec.beta = value;
    } else if (parameter == "T") {
      entry.spec.bandit.horizon = static_cast<long>(value);
    } else {
      throw std::invalid_argument("sweep parameter must be delta_gap, beta "
                                  "or T");
    }
    entry.result = run_experiment(entry.spec, parallel);
    entries.push_back(std::move(entry));
  }
  return entries;
}

namespace {

const char* kRunColumns =
    "seed,config_hash,algorithm,K,M,T,beta,group_pseudo,group_realized,"
    "individual_pseudo,individual_realized,r_init,r_comm,r_explo,"
    "decomposition_residual,async_pseudo,comm_rounds,comm_messages,"
    "comm_bits,comm_steps,mean_message_bits,first_message_width,"
    "rounds_bound,bits_bound,regret_bound_reference,lower_bound_constant,"
    "regret_per_log_t,identified,identify_time,init_steps,signal_phases,"
    "final_arms,invariants_ok,error";

void write_run_row(std::ostream& os, const ExperimentSpec& spec,
                   const RunResult& r) {
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(spec.config_hash()));
  os << r.seed << ',' << hash << ',' << spec.algorithm << ','
     << spec.bandit.num_arms << ',' << spec.bandit.num_agents << ','
     << spec.bandit.horizon << ',' << fmt(spec.beta) << ','
     << fmt(r.regret.group_pseudo) << ',' << fmt(r.regret.group_realized)
     << ',' << fmt(r.regret.individual_pseudo) << ','
     << fmt(r.regret.individual_realized) << ',' << fmt(r.regret.r_init)
     << ',' << fmt(r.regret.r_comm) << ',' << fmt(r.regret.r_explo) << ','
     << fmt(r.regret.decomposition_residual) << ','
     << (spec.algorithm == "async" ? fmt(r.async_pseudo_regret) : "") << ','
     << r.comm.rounds << ',' << r.comm.messages << ',' << r.comm.total_bits
     << ',' << r.comm.total_steps << ',' << fmt(r.comm.mean_message_bits)
     << ',' << r.comm.first_message_width << ',' << fmt(r.rounds_bound)
     << ',' << fmt(r.bits_bound) << ',' << fmt(r.regret_bound_ref) << ','
     << fmt(r.lower_bound_const) << ','
     << fmt((spec.algorithm == "async" ? r.async_pseudo_regret
                                       : r.regret.group_pseudo) /
            std::log(static_cast<double>(spec.bandit.horizon)))
     << ',' << (r.identified ? 1 : 0) << ',' << r.identify_time << ','
     << r.init_steps << ',' << r.signal_phases << ','
     << join_arms(r.final_arms) << ',' << (r.invariants_ok() ? 1 : 0) << ','
     << r.error << '\n';
}

}  // namespace

void write_runs_csv(std::ostream& os, const ExperimentSpec& spec,
                    const std::vector<RunResult>& runs) {
  os << kRunColumns << '\n';
  for (const RunResult& r : runs) write_run_row(os, spec, r);
}

void write_messages_csv(std::ostream& os,
                        const std::vector<MessageRecord>& messages) {
  os << "sender,receiver,arm,payload_bits,steps,full_width,basis_pulls\n";
  for (const MessageRecord& m : messages)
    os << m.sender << ',' << m.receiver << ',' << m.arm + 1 << ','
       << m.payload_bits << ',' << m.steps << ',' << (m.full_width ? 1 : 0)
       << ',' << m.basis_pulls << '\n';
}

void write_aggregate_csv(std::ostream& os,
                         const std::vector<RunResult>& runs) {
  os << "metric,mean,std\n";
  auto emit = [&](const char* name, auto getter) {
    double sum = 0.0, sq = 0.0;
    long n = 0;
    for (const RunResult& r : runs) {
      if (!r.completed) continue;
      const double v = getter(r);
      sum += v;
      sq += v * v;
      ++n;
    }
    if (n == 0) return;
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    os << name << ',' << fmt(mean) << ',' << fmt(std::sqrt(var)) << '\n';
  };
  emit("group_pseudo", [](const RunResult& r) { return r.regret.group_pseudo; });
  emit("group_realized",
       [](const RunResult& r) { return r.regret.group_realized; });
  emit("individual_pseudo",
       [](const RunResult& r) { return r.regret.individual_pseudo; });
  emit("r_init", [](const RunResult& r) { return r.regret.r_init; });
  emit("r_comm", [](const RunResult& r) { return r.regret.r_comm; });
  emit("r_explo", [](const RunResult& r) { return r.regret.r_explo; });
  emit("comm_rounds",
       [](const RunResult& r) { return double(r.comm.rounds); });
  emit("comm_bits",
       [](const RunResult& r) { return double(r.comm.total_bits); });
  emit("mean_message_bits",
       [](const RunResult& r) { return r.comm.mean_message_bits; });
  emit("identified", [](const RunResult& r) { return r.identified ? 1.0 : 0.0; });
  emit("async_pseudo",
       [](const RunResult& r) { return r.async_pseudo_regret; });
}

void write_curves_csv(std::ostream& os, const std::vector<RunResult>& runs) {
  os << "t,group_mean,group_std,individual_mean,individual_std\n";
  if (runs.empty()) return;
  const size_t points = runs.front().curve.size();
  for (const RunResult& r : runs)
    if (r.completed && r.curve.size() != points) return;  // length mismatch
  for (size_t i = 0; i < points; ++i) {
    double gs = 0.0, gq = 0.0, is = 0.0, iq = 0.0;
    long n = 0;
    long t = 0;
    for (const RunResult& r : runs) {
      if (!r.completed) continue;
      const CurvePoint& p = r.curve[i];
      t = p.t;
      gs += p.group_pseudo;
      gq += p.group_pseudo * p.group_pseudo;
      is += p.individual_pseudo;
      iq += p.individual_pseudo * p.individual_pseudo;
      ++n;
    }
    if (n == 0) continue;
    const double gm = gs / n, im = is / n;
    const double gsd = std::sqrt(std::max(0.0, gq / n - gm * gm));
    const double isd = std::sqrt(std::max(0.0, iq / n - im * im));
    os << t << ',' << fmt(gm) << ',' << fmt(gsd) << ',' << fmt(im) << ','
       << fmt(isd) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const std::string& parameter,
                     const std::vector<SweepEntry>& entries) {
  os << "parameter,value," << kRunColumns << '\n';
  for (const SweepEntry& entry : entries)
    for (const RunResult& r : entry.result.runs) {
      os << parameter << ',' << fmt(entry.value) << ',';
      write_run_row(os, entry.spec, r);
    }
}

}  // namespace mmab
