#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace momrate {

using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

/// Thrown when an operation is asked for inputs outside its mathematical
/// domain (bad orders, malformed parameters, size guards).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a computation needs moments of higher order than a profile
/// carries.
struct InsufficientMomentsError : DomainError {
    using DomainError::DomainError;
};

/// Thrown when a floating-point pipeline produces non-finite values or an
/// iterative solver fails to converge.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double to_double(const Rat& q) { return q.convert_to<double>(); }

inline std::string to_string(const Rat& q) {
    std::ostringstream os;
    os << q;
    return os.str();
}

/// True when x is a perfect square; on success *root holds the square root.
inline bool perfect_square(const BigInt& x, BigInt* root = nullptr) {
    if (x < 0) return false;
    BigInt s = boost::multiprecision::sqrt(x);
    if (s * s != x) return false;
    if (root) *root = s;
    return true;
}

inline Rat pow_rat(const Rat& base, int e) {
    if (e < 0) {
        if (base == 0) throw DomainError("pow_rat: zero base, negative exponent");
        return Rat(1) / pow_rat(base, -e);
    }
    Rat acc = 1, b = base;
    while (e > 0) {
        if (e & 1) acc *= b;
        b *= b;
        e >>= 1;
    }
    return acc;
}

/**
 * @brief Element of the quadratic extension Q(sqrt(d)): value a + b*sqrt(d).
 *
 * d is a fixed nonnegative rational radicand. Perfect-square radicands are
 * folded into the rational part on construction, so a pure rational always
 * has b = 0, d = 0. Sums and products require matching radicands (mixing two
 * distinct irrationals is not representable here and is reported as a domain
 * error rather than silently approximated).
 */
class SqrtRat {
public:
    SqrtRat() : a_(0), b_(0), d_(0) {}
    SqrtRat(const Rat& a) : a_(a), b_(0), d_(0) {}
    SqrtRat(int a) : a_(a), b_(0), d_(0) {}

    SqrtRat(const Rat& a, const Rat& b, const Rat& d) : a_(a), b_(b), d_(d) {
        if (d_ < 0) throw DomainError("SqrtRat: negative radicand");
        if (b_ == 0) {
            d_ = 0;
            return;
        }
        // fold sqrt(p^2/q^2) = p/q into the rational part
        BigInt np, dp;
        if (perfect_square(boost::multiprecision::numerator(d_), &np) &&
            perfect_square(boost::multiprecision::denominator(d_), &dp)) {
            a_ += b_ * Rat(np, dp);
            b_ = 0;
            d_ = 0;
        }
        if (d_ == 0 && b_ != 0) {  // radicand zero: b*sqrt(0) = 0
            b_ = 0;
        }
    }

    const Rat& rational_part() const { return a_; }
    const Rat& radical_coeff() const { return b_; }
    const Rat& radicand() const { return d_; }
    bool is_rational() const { return b_ == 0; }

    /// Rational value; domain error if an irrational part is present.
    const Rat& as_rational() const {
        if (!is_rational()) throw DomainError("SqrtRat: value is irrational");
        return a_;
    }

    double value() const {
        double v = to_double(a_);
        if (b_ != 0) v += to_double(b_) * std::sqrt(to_double(d_));
        return v;
    }

    SqrtRat operator-() const { return SqrtRat(-a_, -b_, d_); }

    friend SqrtRat operator+(const SqrtRat& x, const SqrtRat& y) {
        Rat d = merge_radicand(x, y);
        return SqrtRat(x.a_ + y.a_, x.b_ + y.b_, d);
    }
    friend SqrtRat operator-(const SqrtRat& x, const SqrtRat& y) { return x + (-y); }

    friend SqrtRat operator*(const SqrtRat& x, const SqrtRat& y) {
        Rat d = merge_radicand(x, y);
        return SqrtRat(x.a_ * y.a_ + x.b_ * y.b_ * d, x.a_ * y.b_ + x.b_ * y.a_, d);
    }

    SqrtRat& operator+=(const SqrtRat& y) { return *this = *this + y; }
    SqrtRat& operator-=(const SqrtRat& y) { return *this = *this - y; }
    SqrtRat& operator*=(const SqrtRat& y) { return *this = *this * y; }

    friend SqrtRat operator*(const Rat& c, const SqrtRat& x) {
        return SqrtRat(c * x.a_, c * x.b_, x.d_);
    }
    friend SqrtRat operator*(const SqrtRat& x, const Rat& c) { return c * x; }

    SqrtRat operator/(const Rat& c) const {
        if (c == 0) throw DomainError("SqrtRat: division by zero");
        return SqrtRat(a_ / c, b_ / c, d_);
    }

    friend bool operator==(const SqrtRat& x, const SqrtRat& y) {
        if (x.b_ == 0 && y.b_ == 0) return x.a_ == y.a_;
        return x.a_ == y.a_ && x.b_ == y.b_ && x.d_ == y.d_;
    }
    friend bool operator!=(const SqrtRat& x, const SqrtRat& y) { return !(x == y); }

    /// Display form: "3/2", "-1/7 + 4*sqrt(21/100)", "2*sqrt(2)".
    std::string str() const {
        if (is_rational()) return momrate::to_string(a_);
        std::ostringstream os;
        if (a_ != 0) {
            os << a_ << (b_ > 0 ? " + " : " - ");
            os << (b_ > 0 ? b_ : -b_);
        } else {
            os << b_;
        }
        os << "*sqrt(" << d_ << ")";
        return os.str();
    }

private:
    static Rat merge_radicand(const SqrtRat& x, const SqrtRat& y) {
        if (x.b_ == 0) return y.d_;
        if (y.b_ == 0) return x.d_;
        if (x.d_ != y.d_) throw DomainError("SqrtRat: mismatched radicands");
        return x.d_;
    }

    Rat a_, b_, d_;
};

/// sqrt of a nonnegative rational, exact in Q(sqrt(d)).
inline SqrtRat sqrt_rat(const Rat& d) {
    if (d < 0) throw DomainError("sqrt_rat: negative argument");
    return SqrtRat(Rat(0), Rat(1), d);
}

/// Parse "3", "-7/2", "0.25", "1e-3" style literals into an exact rational.
inline Rat parse_rat(const std::string& text) {
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' '; }), s.end());
    if (s.empty()) throw DomainError("parse_rat: empty literal");

    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Rat num = parse_rat(s.substr(0, slash));
        Rat den = parse_rat(s.substr(slash + 1));
        if (den == 0) throw DomainError("parse_rat: zero denominator");
        return num / den;
    }

    bool neg = false;
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') neg = (s[i++] == '-');

    BigInt mantissa = 0;
    long exp10 = 0;
    bool seen_digit = false, seen_dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c >= '0' && c <= '9') {
            mantissa = mantissa * 10 + (c - '0');
            if (seen_dot) --exp10;
            seen_digit = true;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else if ((c == 'e' || c == 'E') && seen_digit) {
            std::string tail = s.substr(i + 1);
            std::size_t pos = 0;
            try {
                exp10 += std::stol(tail, &pos);
            } catch (const std::exception&) {
                throw DomainError("parse_rat: bad literal '" + text + "'");
            }
            if (pos != tail.size()) throw DomainError("parse_rat: bad literal '" + text + "'");
            break;
        } else {
            throw DomainError("parse_rat: bad literal '" + text + "'");
        }
    }
    if (!seen_digit) throw DomainError("parse_rat: bad literal '" + text + "'");

    Rat v(mantissa);
    BigInt p10 = 1;
    for (long k = 0; k < std::labs(exp10); ++k) p10 *= 10;
    if (exp10 >= 0)
        v *= Rat(p10);
    else
        v /= Rat(p10);
    return neg ? -v : v;
}

}  // namespace momrate
