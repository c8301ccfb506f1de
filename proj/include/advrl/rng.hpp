#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advrl {

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(const void* bytes, std::size_t len);
std::uint64_t fnv1a64(std::string_view s);

// SplitMix64 finalizer; bijective on 64-bit ints.
std::uint64_t splitmix64(std::uint64_t x);

// Sub-seed derivation rule: every consumer of randomness gets its own stream
// keyed by (master_seed, tag). Documented in docs/config-schema.md.
//   derive_seed(m, tag) = splitmix64(m ^ fnv1a64(tag))
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

// mt19937_64 engine with hand-rolled distributions. The engine itself is
// specified bit-exactly by the standard; std:: distributions are not, so we
// implement the few we need to keep streams identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), n >= 1. Modulo bias is < 2^-50 for the tiny ranges used here.
  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

  // Standard normal via Box-Muller; consumes two uniforms per pair.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace advrl
