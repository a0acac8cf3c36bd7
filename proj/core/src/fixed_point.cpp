#include "dem/fixed_point.hpp"

#include <cctype>

namespace dem {

std::int64_t parse_decimal(std::string_view text, int decimals) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw std::invalid_argument("empty decimal");

    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    i128 whole = 0;
    i128 frac = 0;
    int frac_digits = 0;
    bool seen_dot = false;
    bool any_digit = false;
    // digits past the target precision collapse into (first dropped digit, sticky rest)
    int dropped_first = -1;
    bool dropped_sticky = false;
    for (char ch : text) {
        if (ch == '.') {
            if (seen_dot) throw std::invalid_argument("malformed decimal: " + std::string(text));
            seen_dot = true;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(ch)))
            throw std::invalid_argument("malformed decimal: " + std::string(text));
        any_digit = true;
        const int d = ch - '0';
        if (!seen_dot) {
            whole = whole * 10 + d;
            if (whole > static_cast<i128>(INT64_MAX)) throw std::out_of_range("decimal overflow");
        } else if (frac_digits < decimals) {
            frac = frac * 10 + d;
            ++frac_digits;
        } else if (dropped_first < 0) {
            dropped_first = d;
        } else if (d != 0) {
            dropped_sticky = true;
        }
    }
    if (!any_digit) throw std::invalid_argument("malformed decimal: " + std::string(text));
    for (int i = frac_digits; i < decimals; ++i) frac *= 10;
    i128 scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    i128 value = whole * scale + frac;
    if (dropped_first > 5 || (dropped_first == 5 && (dropped_sticky || value % 2 != 0))) value += 1;
    if (value > static_cast<i128>(INT64_MAX)) throw std::out_of_range("decimal overflow");
    return static_cast<std::int64_t>(negative ? -value : value);
}

std::string format_decimal(std::int64_t raw, int decimals) {
    const bool negative = raw < 0;
    // widen before negation so INT64_MIN survives
    i128 mag = negative ? -static_cast<i128>(raw) : static_cast<i128>(raw);
    i128 scale = 1;
    for (int i = 0; i < decimals; ++i) scale *= 10;
    const auto whole = static_cast<unsigned long long>(mag / scale);
    auto frac = static_cast<unsigned long long>(mag % scale);
    std::string out = negative ? "-" : "";
    out += std::to_string(whole);
    if (decimals > 0) {
        std::string digits(static_cast<std::size_t>(decimals), '0');
        for (int i = decimals - 1; i >= 0; --i) {
            digits[static_cast<std::size_t>(i)] = static_cast<char>('0' + frac % 10);
            frac /= 10;
        }
        out += '.';
        out += digits;
    }
    return out;
}

}  // namespace dem
