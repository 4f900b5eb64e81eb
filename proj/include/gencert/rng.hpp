#pragma once

#include "gencert/core.hpp"

#include <array>
#include <cstdint>

namespace gencert {

/// Philox4x32-10 block function (Salmon et al., counter-based RNG).
/// Maps a 128-bit counter and a 64-bit key to 128 random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic random stream keyed by (master seed, stream id).
///
/// The stream id occupies the upper half of the Philox counter and the draw
/// index the lower half, so every (seed, id) pair is an independent substream
/// and the value of draw i never depends on how many other streams exist.
/// Trials use `RandomStream(seed, trial)`, which makes serial and parallel
/// execution bit-identical.
class RandomStream {
 public:
  static constexpr const char* kAlgorithm = "philox4x32-10";

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  /// Child stream for a named purpose inside this stream.
  RandomStream split(std::uint64_t tag) const;

  std::uint64_t next_u64();
  /// Uniform on the open interval (0,1), 53-bit resolution.
  double uniform();
  /// Standard normal (Box-Muller).
  double normal();
  Vector normal_vector(Index d);
  /// Gamma(shape k, scale 1) for integer k ≥ 1 (sum of exponentials).
  double gamma_integer(int k);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace gencert
