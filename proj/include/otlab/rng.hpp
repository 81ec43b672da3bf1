#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace otlab {

/// SplitMix64 finalizer, used to derive keys and stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Combines two indices into one stream id. Not commutative.
constexpr std::uint64_t stream_id(std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ull));
}

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based generator: output block i of stream s under seed k is
/// philox(counter = (i, s), key = k). Streams never share state, so any
/// (seed, particle, replicate) triple can be drawn independently and in any
/// order.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double normal();
  double exponential();
  /// Poisson(1) by sequential inversion.
  int poisson1();
  /// +1 or -1 with probability 1/2.
  int sign();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // number of unread 64-bit words in buffer_ (0..2)
};

}  // namespace otlab
