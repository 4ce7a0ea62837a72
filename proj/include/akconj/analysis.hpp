#pragma once

#include <functional>

#include "akconj/certificate.hpp"
#include "akconj/torusmaps.hpp"

namespace akconj {

/** Paired norm data: a rigorous analytic upper bound (log-domain, may exceed
    double range) and a sampled sup over a finite grid (a lower witness). */
struct NormEstimate {
    LogReal analytic;
    bool analytic_valid = false;
    double sampled = 0.0;
    bool sampled_valid = true;  // false when strip evaluation overflows
    int grid = 0;
    double r = 0.0;
};

/// |g|_r: analytic sum |c_j| cosh(2 pi q_j r); sampled sup on Im x = r
NormEstimate strip_norm(const TrigSeries& g, double r, int grid = 4096);

/// product of per-atom max-row-sum derivative bounds over A^r, plus a sampled
/// max-row-sum of the chain-rule Jacobian at real points
NormEstimate derivative_norm_bound(const MapExpr& expr, double r, int grid = 64);

struct IntervalBound {
    LogReal half_width;
    bool unconstrained = false;  // c = 0: the gap vanishes identically
    std::vector<Certificate> certs;
};

/** Closeness interval around p/q: every alpha with |alpha - p/q| <= h keeps
    the conjugated-rotation gap below eps on A^r, via the linearized chain
    4 pi q |delta| M C c < eps with C = e^{2 pi q r}. Returned h is half the
    chain's admissible width, so the chain holds with a factor-2 margin. */
IntervalBound lemma21_interval(const BigInt& q, double c, double r, double eps,
                               double M = 1.0);
IntervalBound lemma21_interval(const BigInt& q, double c, const LogReal& r1,
                               const LogReal& eps, const LogReal& M);

/** Rigorous interval for stage n at offset m: transports the reversed
    one-stage commutator through T_{m,n}, M = derivative bound over all its
    atoms on the widened strip. */
struct Prop21Result {
    LogReal half_width;
    bool unconstrained = false;
    LogReal r1, r2, M;
    std::vector<Certificate> certs;
};
Prop21Result prop21_interval(const Schedule& sched, int n, int m, double r, double eps);

/** Exact sup over z of |G_{m,n}^i - G_{m,n-1}^i|_r at exact alpha: the skew
    orbits telescope, leaving 2 c_n cosh(2 pi q_n r) |sin(pi frac(q_n i alpha))|,
    independent of the offset m. */
double iterate_gap(const Schedule& sched, int n, const Rational& alpha,
                   const BigInt& i, double r = 0.0);

/// max of iterate_gap over doubling i = 1, 2, 4, ... capped at tau (tau included)
double iterate_gap_max(const Schedule& sched, int n, const Rational& alpha,
                       const BigInt& tau, double r = 0.0);

/// sampled sup over a rational x-grid of the one-step gap at exact alpha
/// (exact frequency reduction, valid at astronomically large q_n)
double iterate_gap_sampled(const Schedule& sched, int n, const Rational& alpha,
                           int xgrid = 512);

struct Cor21Options {
    double r = 0.0;
    BigInt tau = 0;        // 0: use q_n
    int alpha_samples = 5; // across [center - h, center + h]
    int max_halvings = 200;
};
struct Cor21Result {
    Rational half_width;
    int halvings = 0;
    Certificate cert;  // sampled evidence, never rigorous
};

/// bisect from start_half until max_{i<=tau} iterate gap < eps across an
/// alpha-grid; throws BudgetExceeded past max_halvings
Cor21Result cor21_refine(const Schedule& sched, int n, const Rational& start_half,
                         double eps, const Cor21Options& opt = {});

struct RefineOptions {
    double r = 0.0;
    BigInt tau = 0;
    int alpha_samples = 5;
    int max_halvings = 200;
    int dyadic_bits_cap = 65536;
};
struct RefineResult {
    Interval interval;  // intersection over offsets of the rigorous intervals
                        // and the iterate check, inside the stage's cap
    std::vector<Certificate> certs;
};
RefineResult refine_interval(const Schedule& sched, int n, double eps,
                             const RefineOptions& opt = {});

/// exact rational at or just below the log-domain value; dyadic power of two
/// once doubles underflow; UnderResolved past bits_cap
Rational rational_below(const LogReal& v, int bits_cap = 65536);

using LiftMap = std::function<StripPoint(StripPoint)>;

/// sampled sup over an A^r grid of coordinate-wise lift differences
NormEstimate map_distance(const LiftMap& F, const LiftMap& G, double r, int grid = 128);

LiftMap lift_of(const MapExpr& expr);
LiftMap lift_rotation(double alpha);
LiftMap lift_skew(const TrigSeries& g, double alpha);

/// exact sup |G_{m,n} - G_{m,n-1}|_r at exact alpha: 2 c_n cosh(2 pi q_n r) |sin(pi frac(q_n alpha))|
LogReal skew_step_bound(const Schedule& sched, int n, const Rational& alpha, double r);

/// the same bound maximized over |alpha - center_n| <= half_width
LogReal skew_step_bound_interval(const Schedule& sched, int n,
                                 const Rational& half_width, double r);

} // namespace akconj
