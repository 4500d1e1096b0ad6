#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace augur {

/// Fixed-point token quantity with 10^-8 resolution.
///
/// Every ledger value (bitcoin, shares, reputation) is stored as a signed
/// count of base units so that per-unit conservation checks are exact.
/// Arithmetic throws std::overflow_error instead of wrapping.
class Amount {
public:
    static constexpr int64_t kUnitsPerCoin = 100'000'000;

    constexpr Amount() = default;

    static constexpr Amount from_units(int64_t units) { return Amount(units); }
    static constexpr Amount coins(int64_t whole) { return Amount(whole * kUnitsPerCoin); }

    /// Parses a decimal string ("0.01000000", "42", "-1.5"). At most eight
    /// fractional digits are accepted; anything finer is rejected, not rounded.
    static Amount parse(std::string_view text);

    /// Rounds half-to-even onto the 10^-8 grid.
    static Amount from_double(double value);

    constexpr int64_t units() const { return units_; }
    double to_double() const { return static_cast<double>(units_) / kUnitsPerCoin; }

    /// Always eight fractional digits, e.g. "27.72588722".
    std::string to_string() const;

    constexpr bool is_zero() const { return units_ == 0; }
    constexpr bool is_negative() const { return units_ < 0; }

    Amount operator+(Amount other) const;
    Amount operator-(Amount other) const;
    Amount& operator+=(Amount other) { return *this = *this + other; }
    Amount& operator-=(Amount other) { return *this = *this - other; }
    Amount operator-() const;

    constexpr auto operator<=>(const Amount&) const = default;

private:
    constexpr explicit Amount(int64_t units) : units_(units) {}

    int64_t units_ = 0;
};

enum class UnitKind { Bitcoin, Shares, Reputation };

std::string_view to_string(UnitKind kind);
UnitKind parse_unit_kind(std::string_view text);

}  // namespace augur
