#pragma once

#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>

#include "dicov/error.hpp"

namespace dicov {

// Exact fraction arithmetic for coverage tallies. Numerators are bounded by
// line counts and denominators by instance counts, so int64 with eager
// normalisation has ample headroom; overflow is still checked because report
// files are untrusted input.
class Rational {
public:
    constexpr Rational() = default;

    Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
        if (den_ == 0)
            throw Error::internal("rational with zero denominator");
        normalize();
    }

    static Rational whole(std::int64_t n) { return Rational(n, 1); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool negative() const { return num_ < 0; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    Rational& operator+=(const Rational& o) {
        num_ = checked(mul128(num_, o.den_) + mul128(o.num_, den_));
        den_ = checked(mul128(den_, o.den_));
        normalize();
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }

    friend Rational operator-(const Rational& a, const Rational& b) {
        Rational neg(-b.num_, b.den_);
        Rational r = a;
        return r += neg;
    }

    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0)
            throw Error::internal("rational division by zero");
        Rational r;
        r.num_ = checked(mul128(a.num_, b.den_));
        r.den_ = checked(mul128(a.den_, b.num_));
        if (r.den_ < 0) { r.num_ = -r.num_; r.den_ = -r.den_; }
        r.normalize();
        return r;
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    friend bool operator<(const Rational& a, const Rational& b) {
        return mul128(a.num_, b.den_) < mul128(b.num_, a.den_);
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    // "n/d" with the sign on the numerator; whole values stay "n/1" so the
    // rendering is positional and unambiguous.
    std::string str() const {
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    static __int128 mul128(std::int64_t a, std::int64_t b) {
        return static_cast<__int128>(a) * b;
    }
    static std::int64_t checked(__int128 v) {
        if (v > INT64_MAX || v < INT64_MIN)
            throw Error::internal("rational overflow");
        return static_cast<std::int64_t>(v);
    }
    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

// Reports render ratios at fixed 6 decimal places; exact values travel in
// the rational fields next to them.
inline std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace dicov
