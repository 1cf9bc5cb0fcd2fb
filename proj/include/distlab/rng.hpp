#pragma once

/**
 * Deterministic random source.
 *
 * Core generator is SplitMix64 (Steele/Lea/Vigna): one 64-bit state word,
 * one multiply-xor finalizer per draw. The whole draw pipeline (uniform
 * doubles, categorical walks, normals) is spelled out here bit-for-bit, so
 * runs reproduce across compilers and platforms -- std::mt19937_64 pins the
 * engine but not the distributions, which is not enough for byte-identical
 * checkpoints.
 *
 * split() derives an independent child stream from the current state and a
 * tag without advancing the parent. Every consumer takes an Rng by
 * reference; there is no hidden global state.
 */

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace distlab {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Next raw 64-bit word (SplitMix64 step).
  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 mantissa bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller. Consumes exactly two uniforms per call
  /// (no cached spare) so the draw count stays easy to reason about.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();  // log(0) guard; astronomically rare
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Sample an index from an (approximately normalized) probability vector
  /// by a cumulative walk in index order. Deterministic given the state.
  std::size_t categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty vector");
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;  // rounding slack lands on the last index
  }

  /// Child stream keyed by an integer tag. Parent state is not advanced.
  Rng split(std::uint64_t tag) const {
    return Rng(mix(state_, 0x632BE59BD9B4E019ULL ^ tag));
  }

  /// Child stream keyed by a string tag (FNV-1a of the bytes).
  Rng split(std::string_view tag) const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001B3ULL;
    }
    return split(h);
  }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace distlab
