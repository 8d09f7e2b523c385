#include "mmab/codec.hpp"

#include <cmath>
#include <stdexcept>

namespace mmab {

int quantization_bits(long total_pulls) {
  if (total_pulls < 1)
    throw std::invalid_argument("quantize: total_pulls must be >= 1");
  const double b = 1.0 + std::log2(static_cast<double>(total_pulls)) / 2.0;
  return static_cast<int>(std::ceil(b));
}

QuantizedMean quantize(double raw_mean, long total_pulls) {
  const int bits = quantization_bits(total_pulls);
  const double scale = static_cast<double>(1ULL << bits);
  auto ticks =
      static_cast<std::int64_t>(std::ceil(raw_mean * scale));
  if (ticks < 0) ticks = 0;
  const auto cap = static_cast<std::int64_t>(1ULL << bits);
  if (ticks > cap) ticks = cap;
  return QuantizedMean{bits, static_cast<std::uint64_t>(ticks), total_pulls};
}

namespace {

std::vector<std::uint8_t> to_bits_truncated(std::uint64_t magnitude) {
  std::vector<std::uint8_t> out;
  if (magnitude == 0) return out;
  int top = 63;
  while (((magnitude >> top) & 1ULL) == 0) --top;
  for (int i = top; i >= 0; --i)
    out.push_back(static_cast<std::uint8_t>((magnitude >> i) & 1ULL));
  return out;
}

std::uint64_t from_bits(const std::vector<std::uint8_t>& bits) {
  std::uint64_t v = 0;
  for (std::uint8_t b : bits) v = (v << 1) | b;
  return v;
}

}  // namespace

DeltaMessage make_delta(const QuantizedMean& current,
                        const QuantizedMean& last) {
  if (current.bits < last.bits)
    throw std::logic_error("make_delta: precision decreased");
  const std::uint64_t last_scaled = last.ticks
                                    << (current.bits - last.bits);
  DeltaMessage msg;
  msg.bits = current.bits;
  if (current.ticks >= last_scaled) {
    msg.sign = +1;
    msg.payload = to_bits_truncated(current.ticks - last_scaled);
  } else {
    msg.sign = -1;
    msg.payload = to_bits_truncated(last_scaled - current.ticks);
  }
  return msg;
}

DeltaMessage make_full(const QuantizedMean& current) {
  DeltaMessage msg;
  msg.bits = current.bits;
  msg.full_width = true;
  msg.payload.assign(static_cast<size_t>(current.bits), 0);
  std::uint64_t ticks = current.ticks;
  if (ticks == (1ULL << current.bits)) {
    // Escape code: the saturated grid point does not fit in `bits` digits,
    // so it rides on the sign bit with an all-zero payload.
    msg.sign = -1;
    return msg;
  }
  msg.sign = +1;
  for (int i = 0; i < current.bits; ++i)
    msg.payload[current.bits - 1 - i] =
        static_cast<std::uint8_t>((ticks >> i) & 1ULL);
  return msg;
}

QuantizedMean reconstruct(const QuantizedMean& last, const DeltaMessage& msg,
                          long basis_pulls) {
  QuantizedMean out;
  out.bits = msg.bits;
  out.basis_pulls = basis_pulls;
  if (msg.full_width) {
    out.ticks = msg.sign < 0 ? (1ULL << msg.bits) : from_bits(msg.payload);
    return out;
  }
  if (msg.bits < last.bits)
    throw std::logic_error("reconstruct: precision decreased");
  const std::uint64_t base = last.ticks << (msg.bits - last.bits);
  const std::uint64_t mag = from_bits(msg.payload);
  out.ticks = msg.sign >= 0 ? base + mag : base - mag;
  return out;
}

std::vector<CommTriple> make_comm_schedule(int num_agents,
                                           const std::vector<int>& arms) {
  std::vector<CommTriple> schedule;
  schedule.reserve(static_cast<size_t>(num_agents) * (num_agents - 1) *
                   arms.size());
  for (int i = 0; i < num_agents; ++i)
    for (int l = 0; l < num_agents; ++l) {
      if (i == l) continue;
      for (int arm : arms) schedule.push_back(CommTriple{i, l, arm});
    }
  return schedule;
}

}  // namespace mmab
