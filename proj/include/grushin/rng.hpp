#pragma once

#include <cstdint>
#include <random>

namespace grushin {

/// A reproducible random stream: run seed plus a stream (chunk) index.
///
/// Two streams with the same (seed, stream_index) produce the same sequence
/// regardless of which thread consumes them.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  RngStream substream(std::uint64_t offset) const { return {seed, stream_index + offset}; }

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

using Engine = std::mt19937_64;

Engine make_engine(const RngStream& stream);

}  // namespace grushin
