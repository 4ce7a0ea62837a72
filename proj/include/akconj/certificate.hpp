#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "akconj/logreal.hpp"
#include "akconj/rational.hpp"

namespace akconj {

/** One checked inequality (or identity), with enough context to audit it.
    `margin` is signed: positive means the condition holds with room, negative
    means it fails; for equality conditions margin is 0 on success. When
    `log_scale` is set the margin is log(rhs) - log(lhs) because the raw
    values overflow double. */
struct Certificate {
    std::string condition;  // short citation id, e.g. "(3.1)"
    std::string detail;     // context: stage, quantities involved
    std::string lhs, rhs;   // rendered sides of "lhs < rhs" (or "lhs = rhs")
    double margin = 0.0;
    bool log_scale = false;
    bool exact = false;     // verdict from exact arithmetic
    bool rigorous = true;   // analytic bound (true) vs sampled evidence (false)
    bool pass = false;
};

/// exact strict inequality lhs < rhs on rationals
inline Certificate cert_exact_less(std::string cond, std::string detail,
                                   const Rational& lhs, const Rational& rhs) {
    Certificate c;
    c.condition = std::move(cond);
    c.detail = std::move(detail);
    c.lhs = rat_str(lhs);
    c.rhs = rat_str(rhs);
    c.pass = lhs < rhs;
    c.exact = true;
    double m = to_double(rhs - lhs);
    if (std::isnan(m) || std::isinf(m)) m = c.pass ? 1e308 : -1e308;
    c.margin = m;
    return c;
}

/// exact equality on rationals
inline Certificate cert_exact_equal(std::string cond, std::string detail,
                                    const Rational& lhs, const Rational& rhs) {
    Certificate c;
    c.condition = std::move(cond);
    c.detail = std::move(detail);
    c.lhs = rat_str(lhs);
    c.rhs = rat_str(rhs);
    c.pass = lhs == rhs;
    c.exact = true;
    c.margin = c.pass ? 0.0 : -std::fabs(to_double(rhs - lhs));
    return c;
}

/// strict inequality on nonnegative log-domain quantities
inline Certificate cert_log_less(std::string cond, std::string detail,
                                 const LogReal& lhs, const LogReal& rhs) {
    Certificate c;
    c.condition = std::move(cond);
    c.detail = std::move(detail);
    c.lhs = lhs.str();
    c.rhs = rhs.str();
    c.pass = lhs < rhs;
    c.log_scale = true;
    double m = rhs.log() - lhs.log();
    if (std::isnan(m)) m = 0.0;
    c.margin = std::clamp(m, -1e308, 1e308);
    return c;
}

/// strict inequality on plain doubles (analytic unless marked sampled)
inline Certificate cert_less(std::string cond, std::string detail,
                             double lhs, double rhs, bool sampled = false) {
    Certificate c;
    c.condition = std::move(cond);
    c.detail = std::move(detail);
    char buf[40];
    snprintf(buf, sizeof buf, "%.12g", lhs);
    c.lhs = buf;
    snprintf(buf, sizeof buf, "%.12g", rhs);
    c.rhs = buf;
    c.pass = lhs < rhs;
    c.margin = rhs - lhs;
    c.rigorous = !sampled;
    return c;
}

inline bool all_pass(const std::vector<Certificate>& cs) {
    for (const auto& c : cs)
        if (!c.pass) return false;
    return true;
}

} // namespace akconj
