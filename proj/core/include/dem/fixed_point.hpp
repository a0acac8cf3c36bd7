#pragma once

// Exact integer quantities used by the contracts. Nothing that touches money or
// committed energy goes through floating point.

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dem {

__extension__ typedef __int128 i128;

/// Divides with round-half-even. `den` must be positive.
constexpr std::int64_t div_round_half_even(i128 num, i128 den) {
    if (den <= 0) throw std::invalid_argument("div_round_half_even: non-positive denominator");
    i128 q = num / den;
    i128 r = num % den;
    if (r < 0) {  // normalise to floor division
        q -= 1;
        r += den;
    }
    const i128 twice = 2 * r;
    if (twice > den || (twice == den && (q % 2 != 0))) q += 1;
    return static_cast<std::int64_t>(q);
}

/// Floor division for non-negative operands.
constexpr std::int64_t div_floor(i128 num, i128 den) {
    if (den <= 0) throw std::invalid_argument("div_floor: non-positive denominator");
    i128 q = num / den;
    if ((num % den) < 0) q -= 1;
    return static_cast<std::int64_t>(q);
}

template <typename Tag, int Decimals>
struct Fixed {
    static constexpr int decimals = Decimals;
    static constexpr std::int64_t scale = [] {
        std::int64_t s = 1;
        for (int i = 0; i < Decimals; ++i) s *= 10;
        return s;
    }();

    std::int64_t raw = 0;

    static constexpr Fixed from_raw(std::int64_t r) { return Fixed{r}; }
    static Fixed from_double(double v) {
        return Fixed{static_cast<std::int64_t>(std::llround(v * static_cast<double>(scale)))};
    }
    static Fixed parse(std::string_view text);

    double to_double() const { return static_cast<double>(raw) / static_cast<double>(scale); }
    std::string str() const;

    constexpr auto operator<=>(const Fixed&) const = default;
    constexpr Fixed operator+(Fixed o) const { return Fixed{raw + o.raw}; }
    constexpr Fixed operator-(Fixed o) const { return Fixed{raw - o.raw}; }
    constexpr Fixed& operator+=(Fixed o) { raw += o.raw; return *this; }
    constexpr Fixed& operator-=(Fixed o) { raw -= o.raw; return *this; }
};

struct EnergyTag {};
struct MoneyTag {};
struct AnswerTag {};

/// kWh with 3 decimals (raw unit: Wh).
using Energy = Fixed<EnergyTag, 3>;
/// Currency with 6 decimals (raw unit: micro).
using Money = Fixed<MoneyTag, 6>;
/// Oracle answer with 8 decimals, aggregator convention.
using OracleAnswer = Fixed<AnswerTag, 8>;

/// energy x price(per kWh) -> money, round-half-even to micro-units.
inline Money energy_cost(Energy e, Money price_per_kwh) {
    return Money::from_raw(div_round_half_even(static_cast<i128>(e.raw) * price_per_kwh.raw, Energy::scale));
}

/// 8-decimal answer -> 6-decimal currency, round-half-even.
inline Money answer_to_money(OracleAnswer a) {
    return Money::from_raw(div_round_half_even(a.raw, OracleAnswer::scale / Money::scale));
}

/// 8-decimal answer -> 3-decimal energy, round-half-even.
inline Energy answer_to_energy(OracleAnswer a) {
    return Energy::from_raw(div_round_half_even(a.raw, OracleAnswer::scale / Energy::scale));
}

inline OracleAnswer energy_to_answer(Energy e) {
    return OracleAnswer::from_raw(e.raw * (OracleAnswer::scale / Energy::scale));
}

inline OracleAnswer money_to_answer(Money m) {
    return OracleAnswer::from_raw(m.raw * (OracleAnswer::scale / Money::scale));
}

/// Parts-per-million multiplier, used for config factors (collateral, penalty).
struct Ppm {
    std::int64_t raw = 1'000'000;
    static Ppm from_double(double v) { return Ppm{static_cast<std::int64_t>(std::llround(v * 1e6))}; }
    double to_double() const { return static_cast<double>(raw) / 1e6; }
};

inline Money scale_money(Money m, Ppm f) {
    return Money::from_raw(div_round_half_even(static_cast<i128>(m.raw) * f.raw, 1'000'000));
}

// ---------------------------------------------------------------------------

std::int64_t parse_decimal(std::string_view text, int decimals);
std::string format_decimal(std::int64_t raw, int decimals);

template <typename Tag, int D>
Fixed<Tag, D> Fixed<Tag, D>::parse(std::string_view text) {
    return Fixed{parse_decimal(text, D)};
}

template <typename Tag, int D>
std::string Fixed<Tag, D>::str() const {
    return format_decimal(raw, D);
}

}  // namespace dem
