#pragma once

#include <array>
#include <cstdint>

namespace mfc {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream keyed by (seed, stream_id).
///
/// Draw k of a stream is a pure function of (seed, stream_id, k), so any
/// partition of streams over workers produces identical numbers.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Exact Poisson draw (no truncation).
  std::int64_t poisson(double rate);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// Mixes a tag into a seed; used to give each experiment its own key space.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace mfc
