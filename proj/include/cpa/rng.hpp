#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace cpa {

/// Counter-based 64-bit generator.
///
/// Output i of a stream with key K is splitmix64_mix(K + (i + 1) * kGamma), where
/// kGamma = 0x9E3779B97F4A7C15 (the 64-bit golden ratio) and the mixer is the
/// SplitMix64 finalizer with multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
/// Streams are split by hashing (seed, labels...) into a new key, so adding a new
/// sampling site never shifts the values drawn at an existing one.
class CounterRng {
public:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    /// Stream keyed by seed and an ordered list of labels.
    static CounterRng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> labels);
    /// FNV-1a of a purpose tag, for use as a stream label.
    static std::uint64_t tag(std::string_view purpose);

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

    /// Uniform integer in [lo, hi], unbiased (rejection sampling).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform01() < p); }

    CounterRng split(std::uint64_t label) const { return CounterRng(mix(key_ ^ mix(label + kGamma))); }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by CounterRng (std::shuffle is not portable).
template <class It>
void shuffle(It first, It last, CounterRng& rng) {
    auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
        auto j = rng.uniform_int(0, i);
        std::iter_swap(first + i, first + j);
    }
}

}  // namespace cpa
