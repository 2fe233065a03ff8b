#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace nbsl {

// Named substream RNG. Every random draw in the toolkit comes from a stream
// addressed by (root seed, purpose label), so adding or removing a recorded
// series never shifts the draws of another purpose. Uniform doubles are
// produced from the raw 64-bit output directly, keeping sequences identical
// across standard library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::string_view purpose, std::uint64_t index = 0) {
    const std::uint64_t h = hash_label(purpose);
    std::seed_seq seq{
        static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
        static_cast<std::uint32_t>(h),         static_cast<std::uint32_t>(h >> 32),
        static_cast<std::uint32_t>(index),     static_cast<std::uint32_t>(index >> 32)};
    gen_.seed(seq);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n) without modulo bias worth caring about here.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(static_cast<unsigned __int128>(gen_()) * n >> 64);
  }

  // Draw from a finite distribution given by weights summing to ~1.
  std::size_t categorical(std::span<const double> weights) {
    const double u = uniform01();
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      cum += weights[k];
      if (u < cum) return k;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  static constexpr std::uint64_t hash_label(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace nbsl
