// Copyright 2026 The cpsim Authors and contributors. Licensed under the
// Apache License, Version 2.0. See the COPYING file at the root of this
// distribution or at http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <cstdint>
#include <random>

#include "cpsim/bytes.hpp"

namespace cpsim {

// Single deterministic randomness source per run. Every random choice in a
// simulation (keys, nonces, adversary interleavings) is drawn from one of
// these, in event order, so that a (config, seed) pair replays bit-exactly.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t u64() { return engine_(); }

  // uniform in [0, bound), bound > 0; rejection-sampled so the distribution
  // does not depend on the standard library's uniform_int_distribution
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  // true with probability num/den
  bool chance(std::uint64_t num, std::uint64_t den) { return below(den) < num; }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(below(256));
    return out;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out;
    for (auto& b : out) b = static_cast<std::uint8_t>(below(256));
    return out;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cpsim
