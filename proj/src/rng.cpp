#include "cpa/rng.hpp"

#include <limits>

#include "cpa/errors.hpp"

namespace cpa {

CounterRng CounterRng::stream(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t key = mix(seed + kGamma);
    for (std::uint64_t label : labels) key = mix(key ^ mix(label + kGamma));
    return CounterRng(key);
}

std::uint64_t CounterRng::tag(std::string_view purpose) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::int64_t CounterRng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw DomainError("uniform_int: empty interval");
    auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
    if (span == std::numeric_limits<std::uint64_t>::max()) return static_cast<std::int64_t>(next());
    std::uint64_t range = span + 1;
    // Reject the top partial bucket so every residue is equally likely.
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % range);
    std::uint64_t x;
    do {
        x = next();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % range);
}

}  // namespace cpa
