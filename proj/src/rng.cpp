#include "grushin/rng.hpp"

#include <array>

namespace grushin {

Engine make_engine(const RngStream& stream) {
  // Full 128 bits of (seed, stream_index) go through seed_seq so neighbouring
  // stream indices give decorrelated engine states.
  const std::array<std::uint32_t, 5> words{
      static_cast<std::uint32_t>(stream.seed), static_cast<std::uint32_t>(stream.seed >> 32),
      static_cast<std::uint32_t>(stream.stream_index),
      static_cast<std::uint32_t>(stream.stream_index >> 32), 0x6772u};
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

}  // namespace grushin
