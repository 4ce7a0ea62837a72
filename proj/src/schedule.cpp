#include "akconj/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace akconj {

std::string CProfile::str() const {
    std::ostringstream os;
    switch (kind) {
        case CProfileKind::Constant: os << "constant:" << value; break;
        case CProfileKind::Harmonic: os << "harmonic"; break;
        case CProfileKind::Geometric: os << "geometric:" << value; break;
        case CProfileKind::Lemma51Driven: os << "lemma51"; break;
    }
    return os.str();
}

CProfile parse_profile(const std::string& text) {
    CProfile p;
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    if (head == "constant") {
        p.kind = CProfileKind::Constant;
        p.value = colon == std::string::npos ? 1.0 : std::stod(text.substr(colon + 1));
    } else if (head == "harmonic") {
        p.kind = CProfileKind::Harmonic;
    } else if (head == "geometric") {
        p.kind = CProfileKind::Geometric;
        p.value = colon == std::string::npos ? 0.5 : std::stod(text.substr(colon + 1));
    } else if (head == "lemma51") {
        p.kind = CProfileKind::Lemma51Driven;
    } else {
        throw ConfigError("unknown amplitude profile: " + text);
    }
    return p;
}

const StageParams& Schedule::stage(int n) const {
    if (n < 1 || n > static_cast<int>(stages.size()))
        throw PrereqViolated("stage index out of range: " + std::to_string(n));
    return stages[n - 1];
}

const Interval& Schedule::interval_before(int n) const {
    static const Interval i0 = initial_interval();
    if (n <= 1) return i0;
    return stage(n - 1).interval;
}

Rational weighted_q_sum(const Schedule& schedule, int n) {
    Rational sum(0);
    for (int i = 1; i < n && i <= static_cast<int>(schedule.stages.size()); ++i) {
        const auto& st = schedule.stage(i);
        sum += rational_from_double(st.c) * Rational(st.q);
    }
    return sum;
}

LogReal inclination_bound(const Schedule& schedule, int n) {
    LogReal sum;
    for (int j = 1; j < n && j <= static_cast<int>(schedule.stages.size()); ++j) {
        const auto& st = schedule.stage(j);
        sum += LogReal::from_value(2.0 * std::numbers::pi * st.c) *
               LogReal::from_log(log_big(st.q));
    }
    return sum;
}

namespace {

// smallest s >= 1 with step*s strictly above `bound`
BigInt min_s_above(const Rational& bound, const BigInt& step) {
    if (bound <= 0) return 1;
    BigInt s = rat_floor(bound / Rational(step)) + 1;
    return s < 1 ? BigInt(1) : s;
}

struct Candidate {
    BigInt p;
    Rational dist;
};

// admissible numerator for denominator q inside `prev` (strict), or nullopt
bool find_numerator(const BigInt& q, const Interval& prev, BigInt& out_p, Rational& out_dist) {
    const Rational& center = prev.center;
    BigInt p_star = rat_round(center * Rational(q));
    std::vector<Candidate> cands;
    for (int k = -8; k <= 8; ++k) {
        BigInt p = p_star + k;
        if (p <= 0 || p >= q) continue;
        cands.push_back({p, rat_abs(Rational(p, q) - center)});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.p < b.p;
    });
    for (const auto& c : cands) {
        if (c.dist >= prev.half_width) continue;  // must be strictly inside
        if (boost::multiprecision::gcd(c.p, q) != 1) continue;
        out_p = c.p;
        out_dist = c.dist;
        return true;
    }
    return false;
}

}  // namespace

StageParams build_stage(const Schedule& schedule, double c_n, const BigInt& s_min) {
    const int n = static_cast<int>(schedule.stages.size()) + 1;
    if (c_n <= 0.0) throw PrereqViolated("amplitude must be positive");
    const GrowthPolicy& pol = schedule.policy;
    const BigInt q_prev = schedule.q_of(n - 1);
    const Interval& prev = schedule.interval_before(n);
    const BigInt step = 4 * q_prev;

    // growth condition q_n > base^(n+2) * sum_{i<n} c_i q_i, exact arithmetic
    Rational growth_bound = Rational(boost::multiprecision::pow(BigInt(pol.base), n + 2)) *
                            weighted_q_sum(schedule, n);

    if (prev.half_width <= 0)
        throw NoAdmissibleNumerator("stage " + std::to_string(n) +
                                    ": previous interval is degenerate");

    BigInt s = min_s_above(growth_bound, step);
    if (s < s_min) s = s_min;
    BigInt p;
    Rational dist;
    const int max_scan = 65536;
    bool found = false;
    const bool aligned = rat_den(prev.center) != 0 && step % rat_den(prev.center) == 0;
    for (int tries = 0; tries < max_scan; ++tries, ++s) {
        BigInt q = step * s;
        // when the previous center's denominator divides q, candidate
        // distances are exact multiples of 1/q and the centered numerator is
        // never reduced, so no fraction fits until q * half_width > 1; jump
        // straight to the first such s
        if (aligned && Rational(1, q) >= prev.half_width) {
            BigInt jump = min_s_above(Rational(1) / prev.half_width, step);
            if (jump > s) { s = jump; q = step * s; }
        }
        if (find_numerator(q, prev, p, dist)) { found = true; break; }
    }
    if (!found)
        throw NoAdmissibleNumerator("stage " + std::to_string(n) +
                                    ": no reduced numerator inside previous interval");

    StageParams st;
    st.n = n;
    st.s = s;
    st.q = step * s;
    st.p = p;
    st.c = c_n;
    st.eps = pol.eps_of(n);
    st.r = pol.r_of(n);
    st.interval.center = Rational(p, st.q);
    // provisional width: inside the cap 1/(4 q^2) and strictly nested
    Rational cap = Rational(1, 4 * st.q * st.q);
    Rational nest = (prev.half_width - dist) / 2;
    st.interval.half_width = cap < nest ? cap : nest;
    return st;
}

Rational alpha_of(const Schedule& schedule) {
    if (schedule.stages.empty()) throw EmptySchedule("alpha_of: no stages");
    return schedule.stages.back().interval.center;
}

namespace {

void stage_certificates(const Schedule& sched, int n, Variant variant,
                        std::vector<Certificate>& out) {
    const StageParams& st = sched.stage(n);
    const std::string tag = "stage " + std::to_string(n);
    const GrowthPolicy& pol = sched.policy;

    Rational growth_rhs(st.q);
    Rational growth_lhs = Rational(boost::multiprecision::pow(BigInt(pol.base), n + 2)) *
                          weighted_q_sum(sched, n);
    out.push_back(cert_exact_less("(3.1)", tag + ": growth of q", growth_lhs, growth_rhs));

    out.push_back(cert_exact_equal("(3.2)", tag + ": q = 4 s q_prev",
                                   Rational(st.q), Rational(4 * st.s * sched.q_of(n - 1))));

    const Interval& prev = sched.interval_before(n);
    Rational nest_lhs = rat_abs(st.interval.center - prev.center) + st.interval.half_width;
    out.push_back(cert_exact_less("nesting", tag + ": interval strictly inside previous",
                                  nest_lhs, prev.half_width));

    out.push_back(cert_exact_less("width", tag + ": |I| below 1/q^2",
                                  2 * st.interval.half_width, Rational(1, st.q * st.q)));

    if (variant == Variant::Theorem2) {
        Certificate c = cert_exact_equal("harmonic", tag + ": c = 1/n",
                                         rational_from_double(st.c),
                                         rational_from_double(1.0 / n));
        out.push_back(c);
    }

    if (variant == Variant::Theorem3) {
        const double eps = st.eps;
        const double s = to_double(st.s);
        out.push_back(cert_less("(5.3)", tag + ": root threshold below s",
                                pol.l51_root_factor * std::sqrt(st.c / eps), s));
        out.push_back(cert_less("(5.3)", tag + ": s log s below c eps / factor",
                                s * std::log(s), st.c * eps / pol.l51_slog_factor));
        out.push_back(cert_less("(5.3)", tag + ": s above minimum",
                                pol.l51_s_min, s));
        // q above inclination * s, in log scale (q may be astronomically big)
        LogReal beta = inclination_bound(sched, n);
        LogReal lhs = beta * LogReal::from_value(s);
        LogReal rhs = LogReal::from_log(log_big(st.q));
        out.push_back(cert_log_less("(5.4)", tag + ": q above beta s", lhs, rhs));
    }
}

}  // namespace

std::vector<Certificate> validate_schedule(const Schedule& schedule, Variant variant) {
    if (schedule.stages.empty()) throw EmptySchedule("validate_schedule: no stages");
    std::vector<Certificate> certs;
    for (int n = 1; n <= static_cast<int>(schedule.stages.size()); ++n)
        stage_certificates(schedule, n, variant, certs);
    return certs;
}

} // namespace akconj
