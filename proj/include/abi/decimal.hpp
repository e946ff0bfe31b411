#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace abi_engine {

using int128 = __int128;

/// Exact rational number with a 128-bit numerator and denominator.
///
/// Expected values and interpolated decision weights are produced in this
/// representation so that every comparison in the rule engine is exact.
/// The value is kept normalized: gcd(num, den) == 1 and den > 0.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t value) : num_(value), den_(1) {} // NOLINT(implicit)
    Rational(int128 numerator, int128 denominator);

    /// Parses "-12", "77.5", "0.0039". Throws std::invalid_argument.
    static Rational parse(std::string_view text);

    int128 numerator() const noexcept { return num_; }
    int128 denominator() const noexcept { return den_; }

    int sign() const noexcept { return num_ < 0 ? -1 : (num_ > 0 ? 1 : 0); }
    Rational abs() const { return sign() < 0 ? -*this : *this; }

    /// True when the value has a finite decimal expansion (den = 2^a 5^b).
    bool is_terminating() const noexcept;

    /// Exact decimal text when terminating; otherwise rounded half away from
    /// zero to `max_fraction_digits`. Trailing zeros are trimmed.
    std::string to_string(int max_fraction_digits = 12) const;
    double to_double() const noexcept;

    Rational operator-() const { return Rational(-num_, den_); }
    friend Rational operator+(const Rational &a, const Rational &b);
    friend Rational operator-(const Rational &a, const Rational &b);
    friend Rational operator*(const Rational &a, const Rational &b);
    friend Rational operator/(const Rational &a, const Rational &b);
    Rational &operator+=(const Rational &o) { return *this = *this + o; }

    friend bool operator==(const Rational &a, const Rational &b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational &a, const Rational &b) noexcept;

private:
    int128 num_ = 0;
    int128 den_ = 1;
};

/// Percent probability with at most two fractional digits, stored as an
/// integer count of hundredths of a percent (0 ..= 10000).
class Probability {
public:
    static constexpr std::int32_t kScale = 100;
    static constexpr std::int32_t kMaxHundredths = 100 * kScale;

    constexpr Probability() = default;

    /// Throws std::out_of_range outside [0, 100].
    static Probability from_hundredths(std::int64_t hundredths);
    static Probability from_percent(std::int64_t percent) {
        return from_hundredths(percent * kScale);
    }
    static Probability certain() { return from_hundredths(kMaxHundredths); }

    /// Accepts "90", "77.5", "12.25", "100.00". Throws std::invalid_argument
    /// on malformed text or more than two fractional digits, and
    /// std::out_of_range when the value lies outside [0, 100].
    static Probability parse(std::string_view text);

    std::int32_t hundredths() const noexcept { return hundredths_; }
    Rational as_percent() const { return Rational(hundredths_, kScale); }
    Rational as_fraction() const { return Rational(hundredths_, kMaxHundredths); }

    bool is_certain() const noexcept { return hundredths_ == kMaxHundredths; }
    bool is_zero() const noexcept { return hundredths_ == 0; }

    /// Shortest exact text: "90", "77.5", "12.25".
    std::string to_string() const;

    friend constexpr auto operator<=>(Probability, Probability) = default;

private:
    explicit constexpr Probability(std::int32_t h) : hundredths_(h) {}
    std::int32_t hundredths_ = 0;
};

std::string int128_to_string(int128 value);

} // namespace abi_engine
