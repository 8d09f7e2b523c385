#include "mmab/channel.hpp"

#include <algorithm>
#include <stdexcept>

namespace mmab {

std::vector<std::uint8_t> frame_bits(const DeltaMessage& msg) {
  std::vector<std::uint8_t> frame;
  frame.reserve(msg.payload.size() + 1);
  frame.push_back(msg.sign < 0 ? 1 : 0);
  frame.insert(frame.end(), msg.payload.begin(), msg.payload.end());
  return frame;
}

ArmIndex send_protocol_action(const std::vector<std::uint8_t>& frame,
                              int offset, ArmIndex own_anchor,
                              ArmIndex receiver_anchor) {
  const int len = static_cast<int>(frame.size());
  const int pair = offset / 2;
  const bool data_slot = (offset % 2) == 0;
  if (pair < len)
    return data_slot && frame[pair] ? receiver_anchor : own_anchor;
  // Terminator pair: continuation-slot collision marks end of message.
  return data_slot ? own_anchor : receiver_anchor;
}

ArmIndex receive_protocol_action(ArmIndex own_anchor) { return own_anchor; }

ArmIndex wait_protocol_action(ArmIndex own_anchor) { return own_anchor; }

ReceiveDecoder::ReceiveDecoder(int max_payload)
    : max_payload_(max_payload) {}

bool ReceiveDecoder::feed(bool collided) {
  if (done_) throw std::logic_error("decoder: fed past terminator");
  const bool data_slot = (offset_ % 2) == 0;
  if (data_slot) {
    pending_bit_ = collided;
  } else if (collided) {
    done_ = true;  // terminator; pending bit was framing
  } else {
    frame_.push_back(pending_bit_ ? 1 : 0);
    if (static_cast<int>(frame_.size()) > 1 + max_payload_)
      throw std::runtime_error("decoder: protocol desync, no terminator");
  }
  ++offset_;
  return done_;
}

DeltaMessage ReceiveDecoder::message(int bits, bool expect_full) const {
  if (!done_) throw std::logic_error("decoder: message not finished");
  if (frame_.empty()) throw std::runtime_error("decoder: missing sign bit");
  DeltaMessage msg;
  msg.bits = bits;
  msg.sign = frame_[0] ? -1 : +1;
  msg.payload.assign(frame_.begin() + 1, frame_.end());
  msg.full_width = expect_full;
  if (expect_full && static_cast<int>(msg.payload.size()) != bits)
    throw std::runtime_error("decoder: bad full-width payload length");
  return msg;
}

namespace {

std::vector<int> identity_ids(int n, const std::vector<int>& given) {
  if (!given.empty()) return given;
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

/// Drives one message between sender and receiver ranks while everyone
/// else waits. Returns the decoded message via `decoded`.
bool transmit_message(BanditEnv& env, const std::vector<int>& anchors,
                      const std::vector<int>& ids, int sender, int receiver,
                      const DeltaMessage& msg, int max_payload,
                      DeltaMessage& decoded, int& steps) {
  const auto frame = frame_bits(msg);
  const int total_steps = 2 * static_cast<int>(frame.size()) + 2;
  const int num_agents = static_cast<int>(anchors.size());
  ReceiveDecoder decoder(max_payload);
  std::vector<ArmIndex> actions(env.config().num_agents, kIdle);
  steps = 0;
  for (int offset = 0; offset < total_steps; ++offset) {
    if (env.clock() >= env.config().horizon) return false;
    for (int r = 0; r < num_agents; ++r) {
      if (r == sender)
        actions[ids[r]] = send_protocol_action(frame, offset, anchors[r],
                                               anchors[receiver]);
      else if (r == receiver)
        actions[ids[r]] = receive_protocol_action(anchors[r]);
      else
        actions[ids[r]] = wait_protocol_action(anchors[r]);
    }
    const RoundOutcome& out = env.step(actions, Phase::Comm);
    ++steps;
    decoder.feed(env.observation_for(ids[receiver], out).collided);
  }
  if (!decoder.done())
    throw std::runtime_error("channel: message ended without terminator");
  decoded = decoder.message(msg.bits, msg.full_width);
  return true;
}

}  // namespace

CommRoundResult run_comm_round(
    BanditEnv& env, const std::vector<int>& anchors,
    const std::vector<int>& arms, bool full_round,
    std::vector<PeerTable>& tables,
    const std::vector<std::vector<QuantizedMean>>& outgoing,
    const std::vector<int>& agent_ids) {
  CommRoundResult result;
  const auto ids =
      identity_ids(static_cast<int>(anchors.size()), agent_ids);
  const auto schedule = make_comm_schedule(static_cast<int>(anchors.size()),
                                           arms);
  for (const CommTriple& triple : schedule) {
    const QuantizedMean& q = outgoing[triple.sender][triple.arm];
    const QuantizedMean& last =
        tables[triple.receiver][triple.sender][triple.arm];
    const DeltaMessage msg =
        full_round ? make_full(q) : make_delta(q, last);
    DeltaMessage decoded;
    int steps = 0;
    const bool ok =
        transmit_message(env, anchors, ids, triple.sender, triple.receiver,
                         msg, q.bits + 1, decoded, steps);
    result.steps += steps;
    if (!ok) return result;  // horizon exhausted mid-round

    QuantizedMean rebuilt = reconstruct(last, decoded, q.basis_pulls);
    if (rebuilt != q)
      throw std::runtime_error("channel: reconstruction mismatch");
    tables[triple.receiver][triple.sender][triple.arm] = rebuilt;
    tables[triple.sender][triple.sender][triple.arm] = q;

    MessageRecord rec;
    rec.sender = triple.sender;
    rec.receiver = triple.receiver;
    rec.arm = triple.arm;
    rec.payload_bits = static_cast<int>(msg.payload.size());
    rec.steps = steps;
    rec.full_width = msg.full_width;
    rec.basis_pulls = q.basis_pulls;
    result.messages.push_back(rec);
  }
  result.complete = true;
  return result;
}

ArmSyncResult run_comm_a(BanditEnv& env, const std::vector<int>& anchors,
                         const std::vector<int>& arms,
                         std::vector<ArmSyncSets>& sets,
                         const std::vector<int>& agent_ids) {
  ArmSyncResult result;
  const int num_agents = static_cast<int>(anchors.size());
  const auto ids = identity_ids(num_agents, agent_ids);
  // Senders broadcast the sets they entered the round with.
  const std::vector<ArmSyncSets> frozen = sets;
  std::vector<ArmIndex> actions(env.config().num_agents, kIdle);

  auto marked = [](const std::vector<int>& v, int arm) {
    return std::find(v.begin(), v.end(), arm) != v.end();
  };
  auto merge = [](std::vector<int>& into, int arm) {
    if (std::find(into.begin(), into.end(), arm) == into.end())
      into.push_back(arm);
  };

  for (int sender = 0; sender < num_agents; ++sender) {
    for (int receiver = 0; receiver < num_agents; ++receiver) {
      if (sender == receiver) continue;
      for (int mode = 0; mode < 2; ++mode) {
        const std::vector<int>& outgoing =
            mode == 0 ? frozen[sender].newly_accepted
                      : frozen[sender].newly_rejected;
        for (int idx = 0; idx < static_cast<int>(arms.size()); ++idx) {
          if (env.clock() >= env.config().horizon) return result;
          for (int r = 0; r < num_agents; ++r) {
            if (r == sender)
              actions[ids[r]] = marked(outgoing, arms[idx])
                                    ? anchors[receiver]
                                    : anchors[r];
            else
              actions[ids[r]] = anchors[r];
          }
          const RoundOutcome& out = env.step(actions, Phase::CommArms);
          ++result.steps;
          if (env.observation_for(ids[receiver], out).collided) {
            auto& target = mode == 0 ? sets[receiver].newly_accepted
                                     : sets[receiver].newly_rejected;
            merge(target, arms[idx]);
          }
        }
      }
    }
  }
  for (ArmSyncSets& s : sets) {
    std::sort(s.newly_accepted.begin(), s.newly_accepted.end());
    std::sort(s.newly_rejected.begin(), s.newly_rejected.end());
  }
  result.complete = true;
  return result;
}

}  // namespace mmab
