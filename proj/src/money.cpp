#include "cpa/money.hpp"

#include <cmath>
#include <cstdlib>

#include "cpa/errors.hpp"

namespace cpa {

Money Money::from_decimal(double units) {
    if (!std::isfinite(units)) throw FormatError("non-finite money value");
    return Money{std::llround(units * static_cast<double>(kScale))};
}

std::string Money::to_string() const {
    std::int64_t whole = micros / kScale;
    std::int64_t frac = std::llabs(micros % kScale);
    std::string out;
    if (micros < 0 && whole == 0) out += '-';
    out += std::to_string(whole);
    if (frac != 0) {
        std::string digits = std::to_string(frac);
        digits.insert(0, 6 - digits.size(), '0');
        while (digits.back() == '0') digits.pop_back();
        out += '.';
        out += digits;
    }
    return out;
}

Money divide_round_half_up(Money a, std::int64_t d) {
    if (d <= 0) throw DomainError("divisor must be positive");
    // floor((2a + d) / 2d) rounds ties toward +infinity for either sign of a.
    std::int64_t num = 2 * a.micros + d;
    std::int64_t den = 2 * d;
    std::int64_t q = num / den;
    if ((num % den != 0) && (num < 0)) --q;
    return Money{q};
}

}  // namespace cpa
