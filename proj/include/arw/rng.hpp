// Counter-based pseudorandom streams. Every random quantity in the library is
// a pure function of (key, counter), so any run can be replayed from its seed
// alone, and trials can be farmed out to threads without sharing generator
// state.
#pragma once

#include <cstdint>

namespace arw::rng {

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer (full avalanche).
inline constexpr uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline constexpr uint64_t combine(uint64_t h, uint64_t v) {
    return mix64(h + kGolden + v * 0xd1342543de82ef95ULL);
}

inline constexpr uint64_t hash2(uint64_t a, uint64_t b) {
    return combine(combine(mix64(a + kGolden), a), b);
}

inline constexpr uint64_t hash3(uint64_t a, uint64_t b, uint64_t c) {
    return combine(hash2(a, b), c);
}

// Stream tags keep unrelated consumers of the same master seed independent.
enum Stream : uint64_t {
    kTapeStream = 0x7461706533ULL,
    kInitStream = 0x696e697431ULL,
    kTrialStream = 0x747269616cULL,
    kGhostStream = 0x67686f7374ULL,
    kWalkStream = 0x77616c6b31ULL,
    kOrderStream = 0x6f72646572ULL,
    kBranchStream = 0x6272616e63ULL,
    kScanStream = 0x7363616e31ULL,
};

inline constexpr uint64_t trial_seed(uint64_t master, uint64_t trial_index) {
    return hash3(master, kTrialStream, trial_index);
}

inline constexpr double to_unit(uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Stateful convenience wrapper over the counter construction.
class CounterRng {
  public:
    explicit CounterRng(uint64_t key) : key_(key) {}

    uint64_t next_u64() { return hash2(key_, counter_++); }

    // Uniform in [0, 1).
    double next_unit() { return to_unit(next_u64()); }

    // Uniform in {0, ..., n-1} via 128-bit multiply (no modulo bias worth
    // caring about at simulation scales, and bit-for-bit portable).
    uint32_t next_below(uint32_t n) {
        return static_cast<uint32_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    uint64_t counter() const { return counter_; }

  private:
    uint64_t key_;
    uint64_t counter_ = 0;
};

}  // namespace arw::rng
