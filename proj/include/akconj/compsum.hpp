#pragma once

#include <cmath>
#include <complex>

namespace akconj {

/** Double-double value (hi + lo, non-overlapping) used for the y coordinate
    along long orbits, where plain double accumulation would drift. */
struct DoubleDouble {
    double hi = 0.0, lo = 0.0;

    DoubleDouble() = default;
    DoubleDouble(double h) : hi(h), lo(0.0) {}
    DoubleDouble(double h, double l) : hi(h), lo(l) {}

    static DoubleDouble two_sum(double a, double b) {
        double s = a + b;
        double bb = s - a;
        double err = (a - (s - bb)) + (b - bb);
        return {s, err};
    }

    DoubleDouble operator+(double b) const {
        DoubleDouble s = two_sum(hi, b);
        s.lo += lo;
        return renorm(s);
    }
    DoubleDouble operator+(const DoubleDouble& b) const {
        DoubleDouble s = two_sum(hi, b.hi);
        s.lo += lo + b.lo;
        return renorm(s);
    }
    DoubleDouble operator-(double b) const { return *this + (-b); }

    /// reduce into [0,1): exact, floor is applied to the hi/lo pair jointly
    DoubleDouble mod1() const {
        double f = std::floor(hi + lo);
        DoubleDouble r = two_sum(hi, -f);
        r.lo += lo;
        r = renorm(r);
        if (r.hi + r.lo < 0.0) r = renorm(two_sum(r.hi, 1.0) + DoubleDouble(0.0, r.lo));
        if (r.hi + r.lo >= 1.0) r = renorm(two_sum(r.hi, -1.0) + DoubleDouble(0.0, r.lo));
        return r;
    }

    double to_double() const { return hi + lo; }

private:
    static DoubleDouble renorm(DoubleDouble s) {
        DoubleDouble t = two_sum(s.hi, s.lo);
        return t;
    }
};

/// Neumaier compensated sum of doubles
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

/// compensated complex accumulator for Birkhoff sums
class ComplexSum {
public:
    void add(std::complex<double> z) { re_.add(z.real()); im_.add(z.imag()); }
    std::complex<double> value() const { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_, im_;
};

} // namespace akconj
