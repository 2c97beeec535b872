#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace cpa {

/// vCPU count. Always an integer.
using Quantity = std::int64_t;

/// Fixed-point money in micro-units (1 unit = 1'000'000 micros).
///
/// Prices are quoted per vCPU per slot. All arithmetic is exact integer
/// arithmetic so revenue sums and tie-breaks are identical on every platform.
struct Money {
    std::int64_t micros = 0;

    static constexpr std::int64_t kScale = 1'000'000;

    static constexpr Money from_micros(std::int64_t m) { return Money{m}; }
    static constexpr Money from_units(std::int64_t u) { return Money{u * kScale}; }
    /// Rounds to the nearest micro-unit, halves away from zero.
    static Money from_decimal(double units);

    double to_units() const { return static_cast<double>(micros) / kScale; }
    /// Shortest decimal rendering in units, e.g. "1.4", "751", "-0.000001".
    std::string to_string() const;

    constexpr auto operator<=>(const Money&) const = default;

    constexpr Money& operator+=(Money o) { micros += o.micros; return *this; }
    constexpr Money& operator-=(Money o) { micros -= o.micros; return *this; }
    friend constexpr Money operator+(Money a, Money b) { return Money{a.micros + b.micros}; }
    friend constexpr Money operator-(Money a, Money b) { return Money{a.micros - b.micros}; }
    friend constexpr Money operator-(Money a) { return Money{-a.micros}; }
    friend constexpr Money operator*(Money a, std::int64_t k) { return Money{a.micros * k}; }
    friend constexpr Money operator*(std::int64_t k, Money a) { return Money{a.micros * k}; }
};

/// a / d with round-half-up on the micro grid. d must be positive.
Money divide_round_half_up(Money a, std::int64_t d);

}  // namespace cpa
