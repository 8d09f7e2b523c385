#pragma once

#include <cstdint>
#include <vector>

#include "mmab/codec.hpp"
#include "mmab/env.hpp"

namespace mmab {

/// Forced-collision wire format.
///
/// A message of L bits (1 sign bit first, then the payload) occupies L+1
/// slot pairs = 2L+2 environment steps. In pair p < L the even offset is a
/// data slot: the sender pulls the receiver's anchor arm for bit 1 and its
/// own anchor for bit 0; the odd offset is a continuation slot where the
/// sender stays on its own anchor. The final pair is the terminator: own
/// anchor in the data slot, then one unconditional pull of the receiver's
/// anchor as the end-of-message collision.
///
/// The receiver pulls its own anchor at every step and reads its own
/// collision bit: a data-slot collision is a 1, a continuation-slot
/// collision ends the message (that pair's tentative data bit is framing,
/// not content). Bystanders sit on their own anchors and never interfere.

/// Sign bit + payload, as transmitted.
std::vector<std::uint8_t> frame_bits(const DeltaMessage& msg);

/// Send protocol: arm the sender pulls at `offset` in [0, 2L+2).
ArmIndex send_protocol_action(const std::vector<std::uint8_t>& frame,
                              int offset, ArmIndex own_anchor,
                              ArmIndex receiver_anchor);

/// Receive protocol: the receiver always holds its anchor...
ArmIndex receive_protocol_action(ArmIndex own_anchor);
/// ...and decodes from its own collision feedback.
class ReceiveDecoder {
 public:
  /// `max_payload` caps the message: exceeding it without a terminator is
  /// a protocol desync (an implementation bug, not a runtime condition).
  explicit ReceiveDecoder(int max_payload);

  /// Feed the receiver's own collision bit for the next step.
  /// Returns true once the terminator collision has been seen.
  bool feed(bool collided);
  bool done() const { return done_; }

  /// Decoded frame -> message. `expect_full` selects the fixed-width
  /// first-contact decoding and enforces its exact width.
  DeltaMessage message(int bits, bool expect_full) const;

 private:
  int max_payload_;
  int offset_ = 0;
  bool pending_bit_ = false;
  bool done_ = false;
  std::vector<std::uint8_t> frame_;
};

/// Wait protocol: bystanders hold their own anchor for the pair's duration.
ArmIndex wait_protocol_action(ArmIndex own_anchor);

struct MessageRecord {
  int sender = 0;
  int receiver = 0;
  int arm = 0;
  int payload_bits = 0;   // magnitude digits, sign excluded
  int steps = 0;          // environment steps consumed (2L+2)
  bool full_width = false;
  long basis_pulls = 0;   // T_t(k) that fixed the quantization width
};

struct CommRoundResult {
  bool complete = false;  // false when the horizon ran out mid-round
  long steps = 0;
  std::vector<MessageRecord> messages;
};

/// Reconstructed statistics every agent keeps about every agent (itself
/// included): last known quantized mean per arm, indexed [peer][arm].
using PeerTable = std::vector<std::vector<QuantizedMean>>;

/// Runs one main communication round through the environment: every
/// ordered (sender, receiver) pair exchanges one message per frozen active
/// arm, per make_comm_schedule order. All per-participant vectors are
/// indexed by rank; `agent_ids` maps rank to environment agent id (empty
/// means identity). `outgoing[rank][arm]` is what each agent announces;
/// each receiver reconstructs from its own table and updates it. After a
/// complete round all tables agree on the active arms.
CommRoundResult run_comm_round(BanditEnv& env,
                               const std::vector<int>& anchors,
                               const std::vector<int>& arms, bool full_round,
                               std::vector<PeerTable>& tables,
                               const std::vector<std::vector<QuantizedMean>>&
                                   outgoing,
                               const std::vector<int>& agent_ids = {});

struct ArmSyncSets {
  std::vector<int> newly_accepted;
  std::vector<int> newly_rejected;
};

struct ArmSyncResult {
  bool complete = false;
  long steps = 0;
};

/// Arm-state synchronization round (collision-coded set union). For each
/// ordered pair and each mode (accepted then rejected), the sender walks
/// the frozen arm list and pulls the receiver's anchor exactly at arms
/// newly marked in that mode; the receiver reads collisions positionally.
/// Senders broadcast their own (frozen) discoveries; afterwards every
/// agent's sets hold the union, sorted by arm id. Costs
/// 2 * M * (M-1) * |arms| steps. Vectors are rank-indexed like
/// run_comm_round.
ArmSyncResult run_comm_a(BanditEnv& env, const std::vector<int>& anchors,
                         const std::vector<int>& arms,
                         std::vector<ArmSyncSets>& sets,
                         const std::vector<int>& agent_ids = {});

}  // namespace mmab
