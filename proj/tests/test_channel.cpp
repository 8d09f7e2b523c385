#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>

#include "mmab/channel.hpp"
#include "mmab/env.hpp"

using namespace mmab;

namespace {

BanditConfig channel_config(int agents, int arms, std::uint64_t seed = 3) {
  BanditConfig cfg;
  cfg.num_arms = arms;
  cfg.num_agents = agents;
  cfg.horizon = 1000000;
  cfg.means.assign(arms, 0.5);
  for (int k = 0; k < arms; ++k) cfg.means[k] = 0.9 - 0.8 * k / (arms - 1);
  cfg.seed = seed;
  return cfg;
}

std::vector<PeerTable> fresh_tables(int agents, int arms) {
  return std::vector<PeerTable>(
      agents, PeerTable(agents, std::vector<QuantizedMean>(arms)));
}

/// Sends one message through a fresh environment and returns what the
/// receiver decoded plus the steps consumed.
DeltaMessage round_trip_message(const DeltaMessage& msg, int agents,
                                int* steps_out = nullptr) {
  BanditConfig cfg = channel_config(agents, agents + 1);
  BanditEnv env(cfg);
  env.set_trace_enabled(false);
  std::vector<int> anchors(agents);
  for (int a = 0; a < agents; ++a) anchors[a] = a % cfg.num_arms;

  const auto frame = frame_bits(msg);
  ReceiveDecoder decoder(msg.bits + 1);
  std::vector<ArmIndex> actions(agents);
  const int total = 2 * static_cast<int>(frame.size()) + 2;
  for (int offset = 0; offset < total; ++offset) {
    for (int a = 0; a < agents; ++a) {
      if (a == 0)
        actions[a] = send_protocol_action(frame, offset, anchors[0],
                                          anchors[1]);
      else if (a == 1)
        actions[a] = receive_protocol_action(anchors[1]);
      else
        actions[a] = wait_protocol_action(anchors[a]);
    }
    const RoundOutcome& out = env.step(actions, Phase::Comm);
    decoder.feed(env.observation_for(1, out).collided);
  }
  REQUIRE(decoder.done());
  if (steps_out) *steps_out = total;
  return decoder.message(msg.bits, msg.full_width);
}

}  // namespace

TEST_CASE("single delta crosses the channel bit-exactly") {
  // 0.875 against a stored 0.75 at three bits.
  QuantizedMean last = quantize(0.75, 16);
  QuantizedMean cur = quantize(0.875, 16);
  DeltaMessage msg = make_delta(cur, last);
  DeltaMessage decoded = round_trip_message(msg, 3);
  QuantizedMean back = reconstruct(last, decoded, cur.basis_pulls);
  CHECK(back == cur);
}

TEST_CASE("zero delta is a four step exchange") {
  QuantizedMean q = quantize(0.5, 16);
  DeltaMessage msg = make_delta(q, q);
  int steps = 0;
  DeltaMessage decoded = round_trip_message(msg, 2, &steps);
  CHECK(steps == 4);  // sign pair + terminator pair
  CHECK(decoded.payload.empty());
  CHECK(decoded.sign == +1);
}

TEST_CASE("randomized grid pairs survive the channel for M in {2,3,5}") {
  std::uint64_t s = 2024;
  auto next = [&s] {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  };
  for (int agents : {2, 3, 5}) {
    for (int i = 0; i < 1000; ++i) {
      const int b = 1 + static_cast<int>(next() % 10);
      const std::uint64_t n = 1ULL << b;
      QuantizedMean last{b, next() % (n + 1), 1L << (2 * (b - 1))};
      QuantizedMean cur{b, next() % (n + 1), 1L << (2 * (b - 1))};
      const DeltaMessage msg = make_delta(cur, last);
      const DeltaMessage decoded = round_trip_message(msg, agents);
      const QuantizedMean back = reconstruct(last, decoded, cur.basis_pulls);
      if (!(back == cur)) REQUIRE(back == cur);
    }
  }
}

TEST_CASE("comm round: two agents, one arm, zero deltas") {
  BanditConfig cfg = channel_config(2, 3);
  BanditEnv env(cfg);
  auto tables = fresh_tables(2, 3);
  std::vector<std::vector<QuantizedMean>> outgoing(
      2, std::vector<QuantizedMean>(3));
  outgoing[0][1] = quantize(0.5, 4);
  outgoing[1][1] = quantize(0.5, 4);
  // Both sides already hold the value: differential round, zero deltas.
  for (auto& table : tables)
    for (auto& row : table) row[1] = quantize(0.5, 4);

  CommRoundResult r = run_comm_round(env, {0, 1}, {1}, false, tables,
                                     outgoing);
  REQUIRE(r.complete);
  CHECK(r.messages.size() == 2);  // (0->1), (1->0)
  for (const auto& m : r.messages) {
    CHECK(m.payload_bits == 0);
    CHECK(m.steps == 4);
  }
  CHECK(tables[0] == tables[1]);
}

TEST_CASE("comm round reconciles random tables bit-identically") {
  const int agents = 3, arms = 5;
  BanditConfig cfg = channel_config(agents, arms + 1);
  BanditEnv env(cfg);
  auto tables = fresh_tables(agents, arms);

  std::uint64_t s = 77;
  auto next = [&s] {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  };
  const std::vector<int> active = {0, 2, 3, 4};
  const long pulls = 300;  // shared basis; b = ceil(1 + log2(300)/2) = 6
  std::vector<std::vector<QuantizedMean>> outgoing(
      agents, std::vector<QuantizedMean>(arms));
  for (int a = 0; a < agents; ++a)
    for (int arm : active)
      outgoing[a][arm] =
          quantize(static_cast<double>(next() % 1000) / 1000.0, pulls);

  CommRoundResult r = run_comm_round(env, {0, 2, 3}, active, true, tables,
                                     outgoing);
  REQUIRE(r.complete);
  CHECK(r.messages.size() == size_t(agents * (agents - 1) * active.size()));

  // Every agent ends with identical knowledge of everyone's statistics.
  for (int a = 1; a < agents; ++a) CHECK(tables[a] == tables[0]);
  for (int a = 0; a < agents; ++a)
    for (int arm : active) CHECK(tables[0][a][arm] == outgoing[a][arm]);

  // Trace accounting: steps consumed equal the sum of message lengths.
  long expected_steps = 0;
  for (const auto& m : r.messages) expected_steps += m.steps;
  CHECK(r.steps == expected_steps);
  CHECK(env.clock() == expected_steps);
  for (const auto& m : r.messages)
    CHECK(m.steps == 2 * (1 + m.payload_bits) + 2);
}

TEST_CASE("differential follow-up round transmits only the changes") {
  const int agents = 2, arms = 2;
  BanditConfig cfg = channel_config(agents, arms + 1);
  BanditEnv env(cfg);
  auto tables = fresh_tables(agents, arms);
  std::vector<std::vector<QuantizedMean>> outgoing(
      agents, std::vector<QuantizedMean>(arms));
  outgoing[0][0] = quantize(0.5, 16);
  outgoing[0][1] = quantize(0.25, 16);
  outgoing[1][0] = quantize(0.75, 16);
  outgoing[1][1] = quantize(0.125, 16);
  REQUIRE(run_comm_round(env, {0, 1}, {0, 1}, true, tables, outgoing)
              .complete);

  // Second round: arm 0 stats moved one grid step, arm 1 unchanged.
  auto next_outgoing = outgoing;
  next_outgoing[0][0] = quantize(0.5625, 64);
  next_outgoing[0][1] = quantize(0.25, 64);
  next_outgoing[1][0] = quantize(0.6875, 64);
  next_outgoing[1][1] = quantize(0.125, 64);
  CommRoundResult r =
      run_comm_round(env, {0, 1}, {0, 1}, false, tables, next_outgoing);
  REQUIRE(r.complete);
  CHECK(tables[0] == tables[1]);
  for (int a = 0; a < agents; ++a)
    for (int arm = 0; arm < arms; ++arm)
      CHECK(tables[0][a][arm] == next_outgoing[a][arm]);
}

TEST_CASE("comm_a with no changes stays silent and unchanged") {
  BanditConfig cfg = channel_config(3, 6);
  BanditEnv env(cfg);
  std::vector<ArmSyncSets> sets(3);
  ArmSyncResult r = run_comm_a(env, {0, 1, 2}, {0, 1, 2, 3, 4}, sets);
  REQUIRE(r.complete);
  CHECK(r.steps == 2L * 3 * 2 * 5);
  for (const auto& s : sets) {
    CHECK(s.newly_accepted.empty());
    CHECK(s.newly_rejected.empty());
  }
  for (const TraceRow& row : env.trace()) CHECK(row.collided == 0);
}

TEST_CASE("comm_a propagates a rejection to every agent") {
  BanditConfig cfg = channel_config(3, 6);
  BanditEnv env(cfg);
  std::vector<ArmSyncSets> sets(3);
  sets[0].newly_rejected = {4};
  ArmSyncResult r = run_comm_a(env, {0, 1, 2}, {0, 1, 2, 3, 4}, sets);
  REQUIRE(r.complete);
  for (const auto& s : sets) {
    CHECK(s.newly_rejected == std::vector<int>{4});
    CHECK(s.newly_accepted.empty());
  }
}

TEST_CASE("simultaneous identical acceptances merge without duplicates") {
  BanditConfig cfg = channel_config(3, 6);
  BanditEnv env(cfg);
  std::vector<ArmSyncSets> sets(3);
  sets[0].newly_accepted = {2};
  sets[1].newly_accepted = {2, 0};
  sets[2].newly_rejected = {3};
  ArmSyncResult r = run_comm_a(env, {0, 1, 2}, {0, 1, 2, 3, 4}, sets);
  REQUIRE(r.complete);
  for (const auto& s : sets) {
    CHECK(s.newly_accepted == std::vector<int>{0, 2});
    CHECK(s.newly_rejected == std::vector<int>{3});
  }
  CHECK(r.steps == 2L * 3 * 2 * 5);
}
