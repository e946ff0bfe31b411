#include "abi/decimal.hpp"

#include <algorithm>
#include <stdexcept>

namespace abi_engine {
namespace {

int128 abs128(int128 v) { return v < 0 ? -v : v; }

int128 gcd128(int128 a, int128 b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
        int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

} // namespace

std::string int128_to_string(int128 value) {
    if (value == 0) {
        return "0";
    }
    bool negative = value < 0;
    std::string out;
    while (value != 0) {
        int digit = static_cast<int>(value % 10);
        out.push_back(static_cast<char>('0' + (digit < 0 ? -digit : digit)));
        value /= 10;
    }
    if (negative) {
        out.push_back('-');
    }
    std::reverse(out.begin(), out.end());
    return out;
}

Rational::Rational(int128 numerator, int128 denominator) {
    if (denominator == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    if (denominator < 0) {
        numerator = -numerator;
        denominator = -denominator;
    }
    int128 g = gcd128(numerator, denominator);
    if (g > 1) {
        numerator /= g;
        denominator /= g;
    }
    num_ = numerator;
    den_ = denominator;
}

Rational Rational::parse(std::string_view text) {
    if (text.empty()) {
        throw std::invalid_argument("empty decimal");
    }
    std::size_t i = 0;
    bool negative = false;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        i = 1;
    }
    int128 num = 0;
    int128 den = 1;
    bool seen_digit = false;
    bool seen_point = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.' && !seen_point) {
            seen_point = true;
            continue;
        }
        if (!is_digit(c)) {
            throw std::invalid_argument("malformed decimal: " + std::string(text));
        }
        seen_digit = true;
        if (num > (int128(1) << 100) || den > (int128(1) << 100)) {
            throw std::out_of_range("decimal too long: " + std::string(text));
        }
        num = num * 10 + (c - '0');
        if (seen_point) {
            den *= 10;
        }
    }
    if (!seen_digit) {
        throw std::invalid_argument("malformed decimal: " + std::string(text));
    }
    return Rational(negative ? -num : num, den);
}

bool Rational::is_terminating() const noexcept {
    int128 d = den_;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    return d == 1;
}

std::string Rational::to_string(int max_fraction_digits) const {
    int128 whole = abs128(num_) / den_;
    int128 rem = abs128(num_) % den_;
    std::string frac;
    int digits = 0;
    while (rem != 0 && digits < max_fraction_digits) {
        rem *= 10;
        frac.push_back(static_cast<char>('0' + static_cast<int>(rem / den_)));
        rem %= den_;
        ++digits;
    }
    if (rem != 0 && rem * 2 >= den_) {
        // Round half away from zero, propagating carries.
        int pos = static_cast<int>(frac.size()) - 1;
        bool carry = true;
        while (carry && pos >= 0) {
            if (frac[pos] == '9') {
                frac[pos] = '0';
                --pos;
            } else {
                ++frac[pos];
                carry = false;
            }
        }
        if (carry) {
            ++whole;
        }
    }
    while (!frac.empty() && frac.back() == '0') {
        frac.pop_back();
    }
    std::string out;
    if (num_ < 0 && (whole != 0 || !frac.empty())) {
        out.push_back('-');
    }
    out += int128_to_string(whole);
    if (!frac.empty()) {
        out.push_back('.');
        out += frac;
    }
    return out;
}

double Rational::to_double() const noexcept {
    int128 whole = num_ / den_;
    int128 rem = num_ % den_;
    return static_cast<double>(whole) +
           static_cast<double>(rem) / static_cast<double>(den_);
}

Rational operator+(const Rational &a, const Rational &b) {
    int128 g = gcd128(a.den_, b.den_);
    int128 bd = b.den_ / g;
    return Rational(a.num_ * bd + b.num_ * (a.den_ / g), a.den_ * bd);
}

Rational operator-(const Rational &a, const Rational &b) { return a + (-b); }

Rational operator*(const Rational &a, const Rational &b) {
    int128 g1 = gcd128(a.num_, b.den_);
    int128 g2 = gcd128(b.num_, a.den_);
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return Rational((a.num_ / g1) * (b.num_ / g2), (a.den_ / g2) * (b.den_ / g1));
}

Rational operator/(const Rational &a, const Rational &b) {
    if (b.num_ == 0) {
        throw std::domain_error("division by zero");
    }
    return a * Rational(b.den_, b.num_);
}

std::strong_ordering operator<=>(const Rational &a, const Rational &b) noexcept {
    // Denominators are positive, so cross-multiplication preserves order.
    // Operands stay far below the int128 limit for the magnitudes the engine
    // produces (|amount| < 2^63, denominators <= 10^4 * small factors).
    int128 lhs = a.num_ * b.den_;
    int128 rhs = b.num_ * a.den_;
    return lhs <=> rhs;
}

Probability Probability::from_hundredths(std::int64_t hundredths) {
    if (hundredths < 0 || hundredths > kMaxHundredths) {
        throw std::out_of_range("probability outside [0, 100]");
    }
    return Probability(static_cast<std::int32_t>(hundredths));
}

Probability Probability::parse(std::string_view text) {
    auto fail = [&] {
        throw std::invalid_argument("malformed probability: \"" + std::string(text) + "\"");
    };
    if (text.empty()) {
        fail();
    }
    std::size_t i = 0;
    bool negative = false;
    if (text[0] == '-' || text[0] == '+') {
        negative = text[0] == '-';
        i = 1;
    }
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    int whole_digits = 0;
    bool seen_point = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.' && !seen_point) {
            seen_point = true;
            continue;
        }
        if (!is_digit(c)) {
            fail();
        }
        if (seen_point) {
            if (++frac_digits > 2) {
                throw std::invalid_argument("probability has more than two fractional digits: \"" +
                                            std::string(text) + "\"");
            }
            frac = frac * 10 + (c - '0');
        } else {
            if (++whole_digits > 6) {
                throw std::out_of_range("probability outside [0, 100]");
            }
            whole = whole * 10 + (c - '0');
        }
    }
    if (whole_digits == 0 && frac_digits == 0) {
        fail();
    }
    if (frac_digits == 1) {
        frac *= 10;
    }
    std::int64_t hundredths = whole * kScale + frac;
    if (negative && hundredths != 0) {
        throw std::out_of_range("probability outside [0, 100]");
    }
    return from_hundredths(hundredths);
}

std::string Probability::to_string() const {
    std::string out = std::to_string(hundredths_ / kScale);
    int frac = hundredths_ % kScale;
    if (frac != 0) {
        out.push_back('.');
        out.push_back(static_cast<char>('0' + frac / 10));
        if (frac % 10 != 0) {
            out.push_back(static_cast<char>('0' + frac % 10));
        }
    }
    return out;
}

} // namespace abi_engine
