#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string_view>

#include "ehr/bytes.hpp"

namespace ehr {

/// Seedable deterministic generator: a ChaCha20 keystream keyed by
/// SHA-256 of the seed. Every randomized operation takes one of these so a
/// scenario replays byte-for-byte from its seed.
///
/// Not thread-safe; give each actor its own instance via fork().
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);
  explicit Rng(ByteView seed_material);
  ~Rng();
  Rng(Rng&&) noexcept;
  Rng& operator=(Rng&&) noexcept;
  Rng(const Rng&) = delete;
  Rng& operator=(const Rng&) = delete;

  void fill(std::span<std::uint8_t> out);
  Bytes bytes(std::size_t n);
  std::uint64_t next_u64();
  /// Uniform in [0, bound), bound > 0.
  std::uint64_t uniform(std::uint64_t bound);

  /// Independent child stream; draws 32 bytes from this stream and mixes in
  /// the label.
  Rng fork(std::string_view label);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return next_u64(); }

 private:
  void refill();

  struct Stream;
  std::unique_ptr<Stream> stream_;
};

}  // namespace ehr
