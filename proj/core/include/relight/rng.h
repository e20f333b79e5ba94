// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>

namespace relight {

// splitmix64; used to derive independent stream keys from (seed, ids...).
inline uint64_t hash_u64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  return hash_u64(a + 0x9e3779b97f4a7c15ull * (b + 1));
}

// PCG32 (O'Neill). One independent stream per (seed, entity) so results do
// not depend on scheduling or worker count.
class Pcg32 {
 public:
  Pcg32() { seed(0x853c49e6748fea9bull, 0xda3e39cb94b95bdbull); }
  explicit Pcg32(uint64_t init_state, uint64_t init_seq = 1) { seed(init_state, init_seq); }

  void seed(uint64_t init_state, uint64_t init_seq) {
    state_ = 0u;
    inc_ = (init_seq << 1u) | 1u;
    next_u32();
    state_ += init_state;
    next_u32();
  }

  uint32_t next_u32() {
    const uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    const uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    const uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31u));
  }

  uint32_t next_u32(uint32_t bound) {
    // Lemire's unbiased bounded generation.
    uint64_t m = static_cast<uint64_t>(next_u32()) * bound;
    uint32_t l = static_cast<uint32_t>(m);
    if (l < bound) {
      const uint32_t t = (~bound + 1u) % bound;
      while (l < t) {
        m = static_cast<uint64_t>(next_u32()) * bound;
        l = static_cast<uint32_t>(m);
      }
    }
    return static_cast<uint32_t>(m >> 32);
  }

  // Uniform in [0, 1).
  float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1p-24f; }
  double next_double() {
    const uint64_t v = (static_cast<uint64_t>(next_u32()) << 21) ^ next_u32();
    return static_cast<double>(v & ((1ull << 53) - 1)) * 0x1p-53;
  }

  // Standard normal via Box-Muller.
  float next_normal() {
    float u1 = next_float();
    const float u2 = next_float();
    if (u1 <= 0.f) u1 = 0x1p-24f;
    return std::sqrt(-2.f * std::log(u1)) * std::cos(6.28318530717958647692f * u2);
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 0;
};

// Stream keyed by an arbitrary list of ids; hash-mixed so neighbouring keys
// are uncorrelated.
template <typename... Ids>
Pcg32 make_stream(uint64_t seed, Ids... ids) {
  uint64_t key = hash_u64(seed);
  ((key = hash_combine(key, static_cast<uint64_t>(ids))), ...);
  return Pcg32(key, hash_u64(key));
}

// Kensler's in-place cycle-walking permutation of [0, n). Used to pad
// stratified sample dimensions with independent shuffles so strata in
// different dimensions stay uncorrelated.
inline uint32_t permutation_element(uint32_t i, uint32_t n, uint32_t seed) {
  uint32_t w = n - 1;
  w |= w >> 1;
  w |= w >> 2;
  w |= w >> 4;
  w |= w >> 8;
  w |= w >> 16;
  do {
    i ^= seed;
    i *= 0xe170893d;
    i ^= seed >> 16;
    i ^= (i & w) >> 4;
    i ^= seed >> 8;
    i *= 0x0929eb3f;
    i ^= seed >> 23;
    i ^= (i & w) >> 1;
    i *= 1 | seed >> 27;
    i *= 0x6935fa69;
    i ^= (i & w) >> 11;
    i *= 0x74dcca23;
    i ^= (i & w) >> 2;
    i *= 0x9e501cc3;
    i ^= (i & w) >> 2;
    i *= 0xc860a3df;
    i &= w;
    i ^= i >> 5;
  } while (i >= n);
  return (i + seed) % n;
}

}  // namespace relight
