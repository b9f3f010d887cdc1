#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"

namespace density_sieve {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational number, always in lowest terms with a positive denominator.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n) : value_(n) {}  // NOLINT(google-explicit-constructor)
    Rational(const BigInt& num, const BigInt& den) {
        if (den == 0) throw SpecError("rational with zero denominator");
        value_ = boost::multiprecision::cpp_rational(num, den);
    }
    Rational(std::int64_t num, std::int64_t den) : Rational(BigInt(num), BigInt(den)) {}

    /// Parses "p/q" or "p". Whitespace is not accepted.
    static Rational parse(std::string_view text) {
        auto parse_int = [&](std::string_view s) -> BigInt {
            if (s.empty()) throw SpecError("malformed rational '" + std::string(text) + "'");
            std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
            if (i == s.size()) throw SpecError("malformed rational '" + std::string(text) + "'");
            for (std::size_t j = i; j < s.size(); ++j) {
                if (s[j] < '0' || s[j] > '9') {
                    throw SpecError("malformed rational '" + std::string(text) + "'");
                }
            }
            return BigInt(std::string(s[0] == '+' ? s.substr(1) : s));
        };
        auto slash = text.find('/');
        if (slash == std::string_view::npos) return Rational(parse_int(text), BigInt(1));
        BigInt den = parse_int(text.substr(slash + 1));
        if (den == 0) throw SpecError("rational with zero denominator '" + std::string(text) + "'");
        return Rational(parse_int(text.substr(0, slash)), den);
    }

    BigInt numerator() const { return boost::multiprecision::numerator(value_); }
    BigInt denominator() const { return boost::multiprecision::denominator(value_); }

    bool is_zero() const { return value_ == 0; }
    int sign() const { return value_.sign(); }

    /// Largest integer <= this.
    BigInt floor() const {
        BigInt n = numerator(), d = denominator();
        BigInt q = n / d;
        if (n < 0 && q * d != n) q -= 1;
        return q;
    }
    BigInt ceil() const {
        BigInt f = floor();
        return (Rational(f, 1) == *this) ? f : f + 1;
    }

    std::string str() const {
        if (denominator() == 1) return numerator().str();
        return numerator().str() + "/" + denominator().str();
    }

    double to_double() const { return value_.convert_to<double>(); }

    Rational& operator+=(const Rational& o) { value_ += o.value_; return *this; }
    Rational& operator-=(const Rational& o) { value_ -= o.value_; return *this; }
    Rational& operator*=(const Rational& o) { value_ *= o.value_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw SpecError("division by zero rational");
        value_ /= o.value_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
    friend Rational operator-(const Rational& a) { Rational r; r.value_ = -a.value_; return r; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.value_ == b.value_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return a.value_ != b.value_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.value_ < b.value_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return a.value_ <= b.value_; }
    friend bool operator>(const Rational& a, const Rational& b) { return a.value_ > b.value_; }
    friend bool operator>=(const Rational& a, const Rational& b) { return a.value_ >= b.value_; }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    boost::multiprecision::cpp_rational value_{0};
};

inline Rational pow2_inverse(unsigned k) {
    return Rational(BigInt(1), BigInt(1) << k);
}

/// Converts a BigInt to int64, throwing SpecError if it does not fit.
inline std::int64_t to_int64(const BigInt& v, const char* what) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min()) {
        throw SpecError(std::string(what) + " does not fit in a 64-bit integer");
    }
    return v.convert_to<std::int64_t>();
}

}  // namespace density_sieve
