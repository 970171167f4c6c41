#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace afda {

/// Mixes two seed words into one (splitmix64 finalizer). Used to derive
/// isolated per-run/per-purpose streams from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Deterministic RNG with a portable value stream. All distributions are
/// implemented on top of raw mt19937_64 draws so results do not depend on
/// the standard library's distribution internals, and the full state can be
/// round-tripped through text for checkpointing.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller. Stateless between calls (the second
  /// variate is discarded) so serialization stays trivial.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace afda
