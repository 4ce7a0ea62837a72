#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace akconj {

/** Nonnegative real stored by its natural log, for norm bounds whose values
    overflow double (e.g. cosh(2*pi*q*r) with r = 10^n). Zero is log = -inf. */
class LogReal {
public:
    LogReal() : lg_(-std::numeric_limits<double>::infinity()) {}
    static LogReal from_value(double v) {
        LogReal x;
        x.lg_ = (v <= 0.0) ? -std::numeric_limits<double>::infinity() : std::log(v);
        return x;
    }
    static LogReal from_log(double lg) { LogReal x; x.lg_ = lg; return x; }

    double log() const { return lg_; }
    bool is_zero() const { return std::isinf(lg_) && lg_ < 0; }

    /// value as double; +inf if the magnitude is not representable
    double value() const {
        if (is_zero()) return 0.0;
        return lg_ > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(lg_);
    }
    bool representable() const { return is_zero() || lg_ <= 700.0; }

    LogReal operator*(const LogReal& o) const {
        if (is_zero() || o.is_zero()) return LogReal();
        return from_log(lg_ + o.lg_);
    }
    LogReal operator/(const LogReal& o) const { return from_log(lg_ - o.lg_); }
    LogReal& operator*=(const LogReal& o) { *this = *this * o; return *this; }

    /// exact log-sum-exp addition
    LogReal operator+(const LogReal& o) const {
        if (is_zero()) return o;
        if (o.is_zero()) return *this;
        double hi = lg_ > o.lg_ ? lg_ : o.lg_;
        double lo = lg_ > o.lg_ ? o.lg_ : lg_;
        return from_log(hi + std::log1p(std::exp(lo - hi)));
    }
    LogReal& operator+=(const LogReal& o) { *this = *this + o; return *this; }

    bool operator<(const LogReal& o) const { return lg_ < o.lg_; }
    bool operator<=(const LogReal& o) const { return lg_ <= o.lg_; }

    std::string str() const {
        if (is_zero()) return "0";
        if (representable()) {
            char buf[40];
            snprintf(buf, sizeof buf, "%.9g", value());
            return buf;
        }
        char buf[48];
        snprintf(buf, sizeof buf, "exp(%.6g)", lg_);
        return buf;
    }

private:
    double lg_;
};

/// log(cosh(t)), safe for huge t
inline double log_cosh(double t) {
    t = std::fabs(t);
    if (t > 20.0) return t + std::log1p(std::exp(-2.0 * t)) - std::log(2.0);
    return std::log(std::cosh(t));
}

/// log(sinh(t)) for t > 0, safe for huge t; -inf at t = 0
inline double log_sinh(double t) {
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    if (t > 20.0) return t + std::log1p(-std::exp(-2.0 * t)) - std::log(2.0);
    return std::log(std::sinh(t));
}

inline LogReal cosh_log(double t) { return LogReal::from_log(log_cosh(t)); }
inline LogReal sinh_log(double t) { return LogReal::from_log(log_sinh(t)); }

/// cosh/sinh of a LogReal argument; saturates to an unrepresentable bound
/// (log = +inf) when the argument itself exceeds double range
inline LogReal cosh_log(const LogReal& t) {
    if (t.is_zero()) return LogReal::from_value(1.0);
    return LogReal::from_log(log_cosh(std::exp(t.log())));
}
inline LogReal sinh_log(const LogReal& t) {
    if (t.is_zero()) return LogReal();
    return LogReal::from_log(log_sinh(std::exp(t.log())));
}

} // namespace akconj
