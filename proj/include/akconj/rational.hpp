#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace akconj {

using BigInt = boost::multiprecision::cpp_int;

/** Exact rational with arbitrary-precision numerator/denominator.
    boost keeps the value canonical: reduced, denominator > 0. */
using Rational = boost::multiprecision::cpp_rational;

inline BigInt rat_num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt rat_den(const Rational& r) { return boost::multiprecision::denominator(r); }

inline Rational make_rational(const BigInt& num, const BigInt& den) {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    return Rational(num, den);
}

inline double to_double(const Rational& r) { return r.template convert_to<double>(); }
inline double to_double(const BigInt& n) { return n.template convert_to<double>(); }

/// floor(r) as a big integer
inline BigInt rat_floor(const Rational& r) {
    BigInt q = rat_num(r) / rat_den(r);
    if (q * rat_den(r) != rat_num(r) && rat_num(r) < 0) --q;
    return q;
}

/// fractional part in [0,1)
inline Rational mod1(const Rational& r) { return r - Rational(rat_floor(r)); }

/// nearest integer (half rounds toward +inf) and distance to it
inline BigInt rat_round(const Rational& r) { return rat_floor(r + Rational(1, 2)); }

inline Rational rat_abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

/// smallest integer >= r
inline BigInt rat_ceil(const Rational& r) { return -rat_floor(-r); }

/** Exact conversion of a finite double to a rational (every finite double is
    a dyadic rational). Used so certificate arithmetic on real-valued inputs
    can run without rounding. */
inline Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rational_from_double: non-finite");
    if (x == 0.0) return Rational(0);
    int exp2 = 0;
    double m = std::frexp(x, &exp2);          // x = m * 2^exp2, |m| in [1/2,1)
    BigInt mant = BigInt(static_cast<long long>(std::ldexp(m, 53)));
    exp2 -= 53;
    Rational r(mant);
    if (exp2 >= 0) r *= Rational(BigInt(1) << exp2);
    else r /= Rational(BigInt(1) << (-exp2));
    return r;
}

/// natural log of a positive big integer, exact to double precision at any size
inline double log_big(const BigInt& n) {
    if (n <= 0) throw std::invalid_argument("log_big: nonpositive");
    std::size_t bits = boost::multiprecision::msb(n);
    if (bits < 900) return std::log(to_double(n));
    BigInt top = n >> (bits - 52);
    return std::log(to_double(top)) + static_cast<double>(bits - 52) * std::log(2.0);
}

/// natural log of a positive rational
inline double log_rat(const Rational& r) {
    if (r <= 0) throw std::invalid_argument("log_rat: nonpositive");
    return log_big(rat_num(r)) - log_big(rat_den(r));
}

/// decimal string "num/den" (or plain integer when den == 1)
inline std::string rat_str(const Rational& r) {
    std::string s = rat_num(r).str();
    if (rat_den(r) != 1) s += "/" + rat_den(r).str();
    return s;
}

inline Rational rat_parse(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(BigInt(s));
    return make_rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
}

} // namespace akconj
