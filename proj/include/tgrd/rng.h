#pragma once

#include <cstdint>

namespace tgrd {

// PCG32 (O'Neill). Chosen over <random> engines because estimator streams
// must be derivable from (seed, pixel, sample) without correlation, and the
// same stream must replay bit-identically across worker partitions.
struct Pcg32 {
  uint64_t state = 0x853c49e6748fea9bULL;
  uint64_t inc = 0xda3e39cb94b95bdbULL;

  Pcg32() = default;
  Pcg32(uint64_t seed, uint64_t stream) { init(seed, stream); }

  void init(uint64_t seed, uint64_t stream) {
    state = 0;
    inc = (stream << 1u) | 1u;
    next();
    state += seed;
    next();
  }

  uint32_t next() {
    uint64_t old = state;
    state = old * 6364136223846793005ULL + inc;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31u));
  }

  // Uniform in [0,1) with 32-bit resolution.
  double uniform() { return next() * 0x1p-32; }

  // Uniform integer in [0, n).
  uint32_t below(uint32_t n) { return static_cast<uint32_t>((uint64_t(next()) * n) >> 32); }
};

// splitmix64: stream-id derivation from a tuple of indices.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
inline uint64_t hash_stream(uint64_t a, uint64_t b) { return mix64(a + mix64(b)); }
inline uint64_t hash_stream(uint64_t a, uint64_t b, uint64_t c) {
  return mix64(a + mix64(b + mix64(c)));
}
inline uint64_t hash_stream(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return mix64(a + mix64(b + mix64(c + mix64(d))));
}

}  // namespace tgrd
