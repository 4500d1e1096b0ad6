#include "augur/amount.hpp"

#include <cmath>
#include <limits>

namespace augur {

Amount Amount::parse(std::string_view text)
{
    if (text.empty())
        throw std::invalid_argument("empty amount");

    bool negative = false;
    size_t pos = 0;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        pos = 1;
    }

    int64_t whole = 0;
    int64_t frac = 0;
    int frac_digits = 0;
    bool seen_digit = false;
    bool in_frac = false;
    for (; pos < text.size(); ++pos) {
        const char c = text[pos];
        if (c == '.') {
            if (in_frac)
                throw std::invalid_argument("malformed amount: " + std::string(text));
            in_frac = true;
            continue;
        }
        if (c < '0' || c > '9')
            throw std::invalid_argument("malformed amount: " + std::string(text));
        seen_digit = true;
        const int digit = c - '0';
        if (in_frac) {
            if (++frac_digits > 8)
                throw std::invalid_argument("amount finer than 1e-8: " + std::string(text));
            frac = frac * 10 + digit;
        } else {
            if (__builtin_mul_overflow(whole, 10, &whole) || __builtin_add_overflow(whole, digit, &whole))
                throw std::overflow_error("amount out of range: " + std::string(text));
        }
    }
    if (!seen_digit)
        throw std::invalid_argument("malformed amount: " + std::string(text));
    for (; frac_digits < 8; ++frac_digits)
        frac *= 10;

    int64_t units = 0;
    if (__builtin_mul_overflow(whole, kUnitsPerCoin, &units) || __builtin_add_overflow(units, frac, &units))
        throw std::overflow_error("amount out of range: " + std::string(text));
    return Amount(negative ? -units : units);
}

Amount Amount::from_double(double value)
{
    if (!std::isfinite(value))
        throw std::invalid_argument("non-finite amount");
    const double scaled = value * static_cast<double>(kUnitsPerCoin);
    if (std::fabs(scaled) >= 9.2e18)
        throw std::overflow_error("amount out of range");
    // nearbyint honours the default FE_TONEAREST mode: ties go to even.
    return Amount(static_cast<int64_t>(std::nearbyint(scaled)));
}

std::string Amount::to_string() const
{
    const bool negative = units_ < 0;
    // Work in unsigned space so INT64_MIN formats correctly.
    const uint64_t magnitude = negative ? 0 - static_cast<uint64_t>(units_) : static_cast<uint64_t>(units_);
    const uint64_t whole = magnitude / kUnitsPerCoin;
    const uint64_t frac = magnitude % kUnitsPerCoin;
    std::string fraction = std::to_string(frac);
    fraction.insert(0, 8 - fraction.size(), '0');
    return (negative ? "-" : "") + std::to_string(whole) + "." + fraction;
}

Amount Amount::operator+(Amount other) const
{
    int64_t out = 0;
    if (__builtin_add_overflow(units_, other.units_, &out))
        throw std::overflow_error("amount overflow");
    return Amount(out);
}

Amount Amount::operator-(Amount other) const
{
    int64_t out = 0;
    if (__builtin_sub_overflow(units_, other.units_, &out))
        throw std::overflow_error("amount overflow");
    return Amount(out);
}

Amount Amount::operator-() const
{
    if (units_ == std::numeric_limits<int64_t>::min())
        throw std::overflow_error("amount overflow");
    return Amount(-units_);
}

std::string_view to_string(UnitKind kind)
{
    switch (kind) {
    case UnitKind::Bitcoin: return "bitcoin";
    case UnitKind::Shares: return "shares";
    case UnitKind::Reputation: return "reputation";
    }
    return "unknown";
}

UnitKind parse_unit_kind(std::string_view text)
{
    if (text == "bitcoin")
        return UnitKind::Bitcoin;
    if (text == "shares")
        return UnitKind::Shares;
    if (text == "reputation")
        return UnitKind::Reputation;
    throw std::invalid_argument("unknown units: " + std::string(text));
}

}  // namespace augur
