#include "akconj/analysis.hpp"

#include <cmath>

#include "akconj/errors.hpp"
#include "akconj/parallel.hpp"

namespace akconj {

namespace {

LogReal big_arg(const BigInt& q, const LogReal& r) {
    return LogReal::from_value(TWO_PI) * LogReal::from_log(log_big(q)) * r;
}

// whether the double evaluation path can touch this series on A^r
bool strip_evaluable(const TrigSeries& g, double r) {
    for (const auto& t : g.terms) {
        if (!TrigSeries::fits_double(t.q)) return false;
        if (TWO_PI * to_double(t.q) * std::fabs(r) > 700.0) return false;
    }
    return true;
}

double sin_pi_frac(const Rational& x) {
    // |sin(pi t)| with t reduced mod 1 exactly first
    return std::fabs(std::sin(M_PI * to_double(mod1(x))));
}

int pick_coprime_prime(const BigInt& q, int at_least) {
    static const int primes[] = {509,  521,  1021, 1031, 1033, 1039, 2053,
                                 4099, 8209, 16411, 32771, 65537};
    for (int p : primes)
        if (p >= at_least && q % p != 0) return p;
    return 65537;
}

} // namespace

NormEstimate strip_norm(const TrigSeries& g, double r, int grid) {
    if (r < 0) throw PrereqViolated("strip_norm: negative strip width");
    NormEstimate out;
    out.grid = grid;
    out.r = r;
    LogReal bound;
    for (const auto& t : g.terms)
        bound += LogReal::from_value(std::fabs(t.c)) * cosh_log(big_arg(t.q, LogReal::from_value(r)));
    out.analytic = bound;
    out.analytic_valid = true;
    if (!strip_evaluable(g, r)) {
        out.sampled_valid = false;
        return out;
    }
    out.sampled = parallel_max(grid, [&](long long i) {
        double x = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
        return std::abs(g.eval_strip({x, r}));
    });
    return out;
}

NormEstimate derivative_norm_bound(const MapExpr& expr, double r, int grid) {
    if (r < 0) throw PrereqViolated("derivative_norm_bound: negative strip width");
    NormEstimate out;
    out.grid = grid;
    out.r = r;
    out.analytic = atom_derivative_bound(expr, r);
    out.analytic_valid = true;
    bool evaluable = true;
    for (const auto& atom : expr.atoms)
        if (const auto* phi = std::get_if<PhiAtom>(&atom))
            if (!TrigSeries::fits_double(phi->q)) evaluable = false;
    if (!evaluable) {
        out.sampled_valid = false;
        return out;
    }
    out.sampled = parallel_max(grid, [&](long long i) {
        double x = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
        double worst = 0.0;
        for (int j = 0; j < 4; ++j) {
            TorusPoint z = TorusPoint::at(x, (j + 0.5) / 4.0);
            worst = std::max(worst, jacobian(expr, z).max_row_sum());
        }
        return worst;
    });
    return out;
}

IntervalBound lemma21_interval(const BigInt& q, double c, const LogReal& r1,
                               const LogReal& eps, const LogReal& M) {
    if (q < 1) throw PrereqViolated("lemma21_interval: q must be at least 1");
    IntervalBound out;
    if (c == 0.0) {
        out.unconstrained = true;
        out.half_width = LogReal::from_value(0.5);
        return out;
    }
    LogReal qL = LogReal::from_log(log_big(q));
    LogReal C = LogReal::from_log(big_arg(q, r1).value()); // e^{2 pi q r}
    LogReal denom = LogReal::from_value(8.0 * M_PI) * M * C * qL * LogReal::from_value(std::fabs(c));
    out.half_width = eps / denom;
    // the linearized chain evaluated at the returned half-width: margin 2
    LogReal chain = LogReal::from_value(4.0 * M_PI) * qL * out.half_width * M * C *
                    LogReal::from_value(std::fabs(c));
    out.certs.push_back(cert_log_less(
        "lemma-2.1", "commutator chain 4 pi q h M C c at returned half-width vs eps",
        chain, eps));
    return out;
}

IntervalBound lemma21_interval(const BigInt& q, double c, double r, double eps, double M) {
    if (!(eps > 0) || M < 1.0)
        throw PrereqViolated("lemma21_interval: need eps > 0 and M >= 1");
    return lemma21_interval(q, c, LogReal::from_value(r), LogReal::from_value(eps),
                            LogReal::from_value(M));
}

Prop21Result prop21_interval(const Schedule& sched, int n, int m, double r, double eps) {
    if (m < 1 || m > n) throw PrereqViolated("prop21_interval: need 1 <= m <= n");
    const StageParams& st = sched.stage(n);
    Prop21Result out;
    if (st.c == 0.0) {
        out.unconstrained = true;
        out.half_width = LogReal::from_value(0.5);
        return out;
    }
    MapExpr t_full = t_expr(sched, m, n);
    out.r1 = strip_image_halfwidth(t_full, r);
    // the reversed one-stage commutator adds two sine terms to Im y
    LogReal b = LogReal::from_value(2.0 * std::fabs(st.c)) * sinh_log(big_arg(st.q, out.r1));
    out.r2 = out.r1 + b;
    out.M = atom_derivative_bound(t_full, out.r2);

    IntervalBound core = lemma21_interval(st.q, st.c, out.r1, LogReal::from_value(eps), out.M);
    out.half_width = core.half_width;
    for (auto& c : core.certs) {
        c.condition = "prop-2.1";
        c.detail = "stage " + std::to_string(n) + " offset " + std::to_string(m) +
                   ": r1=" + out.r1.str() + " r2=" + out.r2.str() + " M=" + out.M.str();
        out.certs.push_back(std::move(c));
    }
    return out;
}

double iterate_gap(const Schedule& sched, int n, const Rational& alpha,
                   const BigInt& i, double r) {
    const StageParams& st = sched.stage(n);
    double s = sin_pi_frac(Rational(st.q) * Rational(i) * alpha);
    double coshfac = 1.0;
    if (r > 0) {
        double arg = big_arg(st.q, LogReal::from_value(r)).value();
        coshfac = std::cosh(std::min(arg, 710.0));
    }
    return 2.0 * std::fabs(st.c) * s * coshfac;
}

double iterate_gap_max(const Schedule& sched, int n, const Rational& alpha,
                       const BigInt& tau, double r) {
    if (tau < 1) throw PrereqViolated("iterate_gap_max: tau must be at least 1");
    double worst = 0.0;
    for (BigInt i = 1; i < tau; i *= 2)
        worst = std::max(worst, iterate_gap(sched, n, alpha, i, r));
    worst = std::max(worst, iterate_gap(sched, n, alpha, tau, r));
    return worst;
}

double iterate_gap_sampled(const Schedule& sched, int n, const Rational& alpha, int xgrid) {
    const StageParams& st = sched.stage(n);
    int P = pick_coprime_prime(st.q, xgrid);
    double worst = 0.0;
    for (int k = 0; k < P; ++k) {
        Rational x(k, P);
        double a = std::sin(TWO_PI * to_double(mod1(Rational(st.q) * x)));
        double b = std::sin(TWO_PI * to_double(mod1(Rational(st.q) * (x + alpha))));
        worst = std::max(worst, std::fabs(st.c) * std::fabs(a - b));
    }
    return worst;
}

Cor21Result cor21_refine(const Schedule& sched, int n, const Rational& start_half,
                         double eps, const Cor21Options& opt) {
    const StageParams& st = sched.stage(n);
    BigInt tau = opt.tau > 0 ? opt.tau : st.q;
    int S = std::max(2, opt.alpha_samples);
    Rational h = start_half;
    for (int halv = 0; halv <= opt.max_halvings; ++halv) {
        double worst = 0.0;
        for (int k = 0; k < S; ++k) {
            Rational t(2 * k - (S - 1), S - 1);
            Rational a = st.interval.center + h * t;
            worst = std::max(worst, iterate_gap_max(sched, n, a, tau, opt.r));
        }
        if (worst < eps) {
            Cor21Result out;
            out.half_width = h;
            out.halvings = halv;
            out.cert = cert_less("cor-2.1",
                                 "stage " + std::to_string(n) + ": max iterate gap to tau=" +
                                     tau.str() + " over " + std::to_string(S) +
                                     " alpha samples (sampled in i, exact sup in z)",
                                 worst, eps, /*sampled=*/true);
            return out;
        }
        h = h / 2;
    }
    throw BudgetExceeded("cor21_refine: bisection depth exhausted without certifying");
}

RefineResult refine_interval(const Schedule& sched, int n, double eps,
                             const RefineOptions& opt) {
    const StageParams& st = sched.stage(n);
    RefineResult out;
    Rational h = st.interval.half_width; // provisional cap: width and nesting
    for (int m = 1; m <= n; ++m) {
        Prop21Result p = prop21_interval(sched, n, m, opt.r, eps);
        for (auto& c : p.certs) out.certs.push_back(std::move(c));
        if (!p.unconstrained) {
            Rational hm = rational_below(p.half_width, opt.dyadic_bits_cap);
            if (hm < h) h = hm;
        }
    }
    Cor21Options copt;
    copt.r = opt.r;
    copt.tau = opt.tau;
    copt.alpha_samples = opt.alpha_samples;
    copt.max_halvings = opt.max_halvings;
    Cor21Result cor = cor21_refine(sched, n, h, eps, copt);
    out.certs.push_back(cor.cert);
    out.interval = Interval{st.interval.center, cor.half_width};
    return out;
}

Rational rational_below(const LogReal& v, int bits_cap) {
    if (v.is_zero()) return Rational(0);
    double lg = v.log();
    if (lg > 700.0) throw PrereqViolated("rational_below: value out of supported range");
    double val = v.value();
    if (val >= 1e-290) return rational_from_double(val * (1.0 - 1e-12));
    double kf = std::floor(lg / std::log(2.0)) - 1.0;
    if (-kf > static_cast<double>(bits_cap))
        throw UnderResolved("rational_below: dyadic materialization exceeds " +
                            std::to_string(bits_cap) + " bits");
    unsigned shift = static_cast<unsigned>(-kf);
    return Rational(BigInt(1), BigInt(1) << shift);
}

NormEstimate map_distance(const LiftMap& F, const LiftMap& G, double r, int grid) {
    NormEstimate out;
    out.grid = grid;
    out.r = r;
    const double offs[3] = {-r, 0.0, r};
    const int no = r > 0 ? 3 : 1;
    out.sampled = parallel_max(grid, [&](long long i) {
        double x = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
        double worst = 0.0;
        for (int jy = 0; jy < 4; ++jy) {
            double y = (jy + 0.5) / 4.0;
            for (int a = 0; a < no; ++a)
                for (int b = 0; b < no; ++b) {
                    StripPoint p{{x, offs[a]}, {y, offs[b]}};
                    StripPoint u = F(p), v = G(p);
                    worst = std::max(worst, std::abs(u.x - v.x));
                    worst = std::max(worst, std::abs(u.y - v.y));
                }
        }
        return worst;
    });
    return out;
}

LiftMap lift_of(const MapExpr& expr) {
    return [expr](StripPoint z) { return expr.lift(z); };
}

LiftMap lift_rotation(double alpha) {
    return [alpha](StripPoint z) {
        z.x += alpha;
        return z;
    };
}

LiftMap lift_skew(const TrigSeries& g, double alpha) {
    return [g, alpha](StripPoint z) {
        z.y += g.eval_strip(z.x) - g.eval_strip(z.x + alpha);
        z.x += alpha;
        return z;
    };
}

LogReal skew_step_bound(const Schedule& sched, int n, const Rational& alpha, double r) {
    const StageParams& st = sched.stage(n);
    double s = sin_pi_frac(Rational(st.q) * alpha);
    if (s == 0.0 || st.c == 0.0) return LogReal();
    return LogReal::from_value(2.0 * std::fabs(st.c) * s) *
           cosh_log(big_arg(st.q, LogReal::from_value(r)));
}

LogReal skew_step_bound_interval(const Schedule& sched, int n,
                                 const Rational& half_width, double r) {
    const StageParams& st = sched.stage(n);
    if (st.c == 0.0 || half_width <= 0) return LogReal();
    Rational qh = Rational(st.q) * half_width;
    double s = qh >= Rational(1, 2) ? 1.0 : std::sin(M_PI * to_double(qh));
    return LogReal::from_value(2.0 * std::fabs(st.c) * s) *
           cosh_log(big_arg(st.q, LogReal::from_value(r)));
}

} // namespace akconj
