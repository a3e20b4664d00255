#pragma once

#include <array>
#include <cstdint>

namespace depthforge {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A stream is
/// fully determined by (seed, stream id), so independent substreams can be
/// drawn in any order or in parallel without changing the values.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream);

  /// Raw 128-bit block for a counter value; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int available_ = 0;  // 32-bit words left in buffer_
  double spare_normal_ = 0.0;
  bool has_spare_ = false;

  std::uint32_t next_u32();
};

}  // namespace depthforge
