#pragma once
#include <cstdint>
#include <string_view>

#include "fpp/lattice.hpp"

namespace fpp {

// Counter-based randomness: every edge weight is a pure function of
// (seed, canonical edge). No state, no memoization, identical values no
// matter in what order or from which thread edges are queried.

inline uint64_t mix64(uint64_t z) {
    // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t zigzag32(int32_t v) {
    return ((uint64_t)(uint32_t)(v << 1)) ^ (uint64_t)(uint32_t)(v >> 31);
}

// absorb one word into a running hash state
inline uint64_t absorb(uint64_t h, uint64_t w) { return mix64(h ^ (w + 0x165667b19e3779f9ull)); }

// 64 uniform bits for a canonical edge under a given seed
inline uint64_t edge_bits(uint64_t seed, const Edge& e) {
    uint64_t h = absorb(0x8f5c2d1e0b7a9643ull, seed);
    for (int i = 0; i < kMaxDim; ++i) h = absorb(h, zigzag32(e.a.c[i]));
    h = absorb(h, (uint64_t)(uint8_t)e.axis);
    return mix64(h);
}

// uniform double in [0, 1) from 64 bits (53-bit mantissa)
inline double bits_to_unit(uint64_t bits) { return (double)(bits >> 11) * 0x1.0p-53; }

inline double edge_uniform(uint64_t seed, const Edge& e) { return bits_to_unit(edge_bits(seed, e)); }

// Deterministic seed derivation for independent sub-streams (replicates,
// the resampling star field, scene-local draws). Tag strings keep the
// purposes from colliding.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t index = 0) {
    uint64_t h = absorb(0x2545f4914f6cdd1dull, seed);
    for (char ch : tag) h = absorb(h, (uint64_t)(uint8_t)ch);
    h = absorb(h, index);
    return mix64(h);
}

// Small sequential generator for non-edge draws (index sampling, jitter).
class SeqRng {
  public:
    explicit SeqRng(uint64_t seed) : state_(seed) {}
    uint64_t next_bits() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }
    double next_unit() { return bits_to_unit(next_bits()); }
    // uniform in [0, n)
    uint64_t next_below(uint64_t n) {
        // widening-multiply rejection-free mapping; bias < 2^-64, irrelevant here
        return (uint64_t)(((__uint128_t)next_bits() * n) >> 64);
    }

  private:
    uint64_t state_;
};

} // namespace fpp
