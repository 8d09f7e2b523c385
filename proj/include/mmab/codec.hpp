#pragma once

#include <cstdint>
#include <vector>

namespace mmab {

/// A mean estimate snapped to the dyadic grid used on the wire.
///
/// The grid resolution is 2^-bits with bits = ceil(1 + log2(pulls)/2), so
/// precision rises with the pull count and the quantization error never
/// exceeds sqrt(1/pulls). Values are kept as integer grid ticks; `ticks`
/// ranges over [0, 2^bits] because the ceiling quantizer can land on 1.0.
struct QuantizedMean {
  int bits = 0;
  std::uint64_t ticks = 0;
  long basis_pulls = 0;

  double value() const {
    return static_cast<double>(ticks) / static_cast<double>(1ULL << bits);
  }
  bool operator==(const QuantizedMean&) const = default;
};

/// Bit width used to quantize a mean backed by `total_pulls` samples.
int quantization_bits(long total_pulls);

/// Ceiling quantizer: smallest grid point >= raw_mean, clamped to 1.
/// Throws std::invalid_argument when total_pulls < 1.
QuantizedMean quantize(double raw_mean, long total_pulls);

/// A signed, truncated difference between two grid values. The payload is
/// the magnitude's binary digits with leading zeros stripped (MSB first);
/// it is empty when the delta is zero. `full_width` marks a first-contact
/// message that carries the absolute value at fixed width instead.
struct DeltaMessage {
  int sign = +1;  // +1 or -1
  std::vector<std::uint8_t> payload;
  int bits = 0;  // grid precision the payload is expressed at
  bool full_width = false;

  int length_with_sign() const { return 1 + static_cast<int>(payload.size()); }
};

/// Differential encoding of `current` against `last`. Requires
/// current.bits >= last.bits (precision never decreases).
DeltaMessage make_delta(const QuantizedMean& current,
                        const QuantizedMean& last);

/// Fixed-width encoding of an absolute grid value, used for the first
/// transmission when the receiver holds no previous estimate. The payload
/// spans exactly `current.bits` digits; the one out-of-range code point
/// (ticks == 2^bits, i.e. a value of exactly 1) is escaped through the
/// otherwise meaningless sign bit.
DeltaMessage make_full(const QuantizedMean& current);

/// Inverse of make_delta / make_full. `basis_pulls` restamps the result.
QuantizedMean reconstruct(const QuantizedMean& last, const DeltaMessage& msg,
                          long basis_pulls);

/// One sender/receiver/arm communication slot of a main round. Ranks are
/// the internal agent ranks assigned during initialization.
struct CommTriple {
  int sender = 0;
  int receiver = 0;
  int arm = 0;  // 0-based arm id
};

/// The full pair schedule of a communication round: every ordered sender,
/// receiver pair crossed with every active arm, exactly once, in
/// lexicographic (sender, receiver, arm) order. All agents derive the same
/// list independently.
std::vector<CommTriple> make_comm_schedule(int num_agents,
                                           const std::vector<int>& arms);

}  // namespace mmab
