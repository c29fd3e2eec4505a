#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hbnet/common.hpp"

namespace hbnet {

// Counter-based generator ("SplitMix64-CTR"). A stream is identified by a
// 64-bit key; draw i of a stream is mix64(key + (i+1)*GOLDEN). Keys derive
// from (seed, stream id) so any draw is addressable without sequencing,
// which keeps datasets and noise fields reproducible under any schedule.
namespace rng {

inline constexpr u64 kGolden = 0x9E3779B97F4A7C15ULL;

inline u64 mix64(u64 z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derive the key of a child stream from a parent key.
inline u64 split(u64 key, u64 stream) { return mix64(key ^ mix64(stream + kGolden)); }

inline u64 key_from_seed(u64 seed) { return mix64(seed + kGolden); }

/// Draw `counter` of the stream identified by `key`.
inline u64 at(u64 key, u64 counter) { return mix64(key + (counter + 1) * kGolden); }

/// Uniform in [0, 1), 53-bit resolution.
inline double uniform_at(u64 key, u64 counter) {
    return static_cast<double>(at(key, counter) >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; consumes counters 2i and 2i+1.
inline double normal_at(u64 key, u64 counter) {
    double u1 = static_cast<double>((at(key, 2 * counter) >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = static_cast<double>(at(key, 2 * counter + 1) >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

/// Sequential view over a stream, for shuffles and other ordered draws.
class Sequence {
  public:
    explicit Sequence(u64 key) : key_(key) {}

    u64 next_u64() { return at(key_, counter_++); }

    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) by rejection.
    u64 next_below(u64 bound) {
        check_internal(bound > 0, "next_below: bound must be positive");
        const u64 limit = ~u64{0} - (~u64{0} % bound);
        u64 v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

  private:
    u64 key_;
    u64 counter_ = 0;
};

/// In-place Fisher-Yates driven by one stream.
template <typename T>
void shuffle(std::vector<T>& items, u64 key) {
    Sequence seq(key);
    for (u64 i = items.size(); i > 1; --i) {
        u64 j = seq.next_below(i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace rng
}  // namespace hbnet
