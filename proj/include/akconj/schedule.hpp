#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "akconj/certificate.hpp"
#include "akconj/errors.hpp"
#include "akconj/rational.hpp"

namespace akconj {

/// closed alpha-interval [center - half_width, center + half_width]
struct Interval {
    Rational center;
    Rational half_width;

    Rational lo() const { return center - half_width; }
    Rational hi() const { return center + half_width; }
    /// strict containment in the interior of `outer`
    bool strictly_inside(const Interval& outer) const {
        return rat_abs(center - outer.center) + half_width < outer.half_width;
    }
    bool contains(const Rational& a) const {
        return rat_abs(a - center) <= half_width;
    }
};

/// the stage-0 interval: all of [0,1]
inline Interval initial_interval() { return {Rational(1, 2), Rational(1, 2)}; }

enum class CProfileKind { Constant, Harmonic, Lemma51Driven, Geometric };

struct CProfile {
    CProfileKind kind = CProfileKind::Constant;
    double value = 1.0;  // constant amplitude, or ratio for Geometric

    /// amplitude for stage n (Lemma51Driven stages are searched, this is the floor)
    double at(int n) const {
        switch (kind) {
            case CProfileKind::Constant: return value;
            case CProfileKind::Harmonic: return 1.0 / n;
            case CProfileKind::Geometric: return std::pow(value, n);
            case CProfileKind::Lemma51Driven: return 1.0;
        }
        return 1.0;
    }
    /// does sum c_n diverge (known for the closed-form profiles)
    bool divergent() const {
        switch (kind) {
            case CProfileKind::Constant: return value > 0.0;
            case CProfileKind::Harmonic: return true;
            case CProfileKind::Geometric: return value >= 1.0;
            case CProfileKind::Lemma51Driven: return true;  // amplitudes >= 1
        }
        return false;
    }
    std::string str() const;
};

CProfile parse_profile(const std::string& text);

/** Growth-rate knobs. `base` scales the denominator growth condition
    q_n > base^(n+2) * sum_{i<n} c_i q_i; eps_base/r_base set the per-stage
    closeness targets eps_n = eps_base^-(n+1) and strip radii r_n = r_base^n.
    The l51_* fields are the threshold constants in the amplitude feasibility
    test (root factor, s*log s factor, minimum s); defaults keep the strict
    literal values, a run may relax them to reach desk-computable amplitudes. */
struct GrowthPolicy {
    int base = 10;
    CProfile c_profile;
    bool literal_mode = false;
    double eps_base = 10.0;
    double r_base = 10.0;
    double l51_root_factor = 16.0;
    double l51_slog_factor = 16.0;
    double l51_s_min = std::exp(2.0);

    double eps_of(int n) const { return std::pow(eps_base, -(n + 1)); }
    double r_of(int n) const { return std::pow(r_base, n); }
};

/** Parameters of one construction stage: rotation number p/q with
    q = 4 s q_{n-1}, shear amplitude c, the certified alpha-interval, and the
    per-stage targets. */
struct StageParams {
    int n = 0;
    BigInt p, q, s;
    double c = 1.0;
    Interval interval;
    double eps = 0.0;
    double r = 0.0;
};

struct Schedule {
    GrowthPolicy policy;
    std::vector<StageParams> stages;

    const StageParams& stage(int n) const;  // 1-based
    BigInt q_of(int n) const { return n == 0 ? BigInt(1) : stage(n).q; }
    const Interval& interval_before(int n) const;  // I_{n-1} (I_0 for n = 1)
};

enum class Variant { Theorem1, Theorem2, Theorem3 };

/** Build stage n = schedule.stages.size() + 1 with amplitude c_n: smallest
    s (hence q = 4 s q_{n-1}) satisfying the growth condition and s >= s_min,
    then the reduced numerator p closest to the previous interval's center
    (ties to the smaller p), and a provisional interval nested strictly inside
    the previous one with half-width capped at 1/(4 q^2).
    Throws NoAdmissibleNumerator when no reduced p/q fits strictly inside. */
StageParams build_stage(const Schedule& schedule, double c_n, const BigInt& s_min = 1);

/** Per-stage certificates: growth (3-1), exact factorization (3-2), strict
    interval nesting, interval width; Theorem2 adds the harmonic-amplitude
    identity, Theorem3 adds the amplitude feasibility and inclination bounds. */
std::vector<Certificate> validate_schedule(const Schedule& schedule, Variant variant);

/// the schedule's rational rotation number: center of the last interval
Rational alpha_of(const Schedule& schedule);

/// exact Sum_{i<n} c_i q_i (amplitudes converted exactly from double)
Rational weighted_q_sum(const Schedule& schedule, int n);

/// 2 pi Sum_{j<n} c_j q_j as an inclination bound for stage n, log-domain
LogReal inclination_bound(const Schedule& schedule, int n);

} // namespace akconj
