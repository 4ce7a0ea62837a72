#include "akconj/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "akconj/compsum.hpp"
#include "akconj/errors.hpp"

namespace akconj {

namespace {

inline unsigned long long mulmod_u64(unsigned long long a, unsigned long long b,
                                     unsigned long long m) {
    return static_cast<unsigned long long>(static_cast<unsigned __int128>(a) * b % m);
}

std::vector<TrigSeries::Term> active_terms(const TrigSeries& g) {
    std::vector<TrigSeries::Term> a;
    for (const auto& t : g.terms)
        if (t.c != 0.0) a.push_back(t);
    return a;
}

/// Sum |c_i| q_i as an exact rational (amplitudes are dyadic)
Rational weighted_band(const std::vector<TrigSeries::Term>& a) {
    Rational w = 0;
    for (const auto& t : a) w += rational_from_double(std::fabs(t.c)) * Rational(t.q);
    return w;
}

/// Mode reach of e(k x + l (y0 - g(x))): per harmonic the Bessel weights
/// J_m(2 pi l c_i) are below 1e-13 once |m| > 9 |l| c_i + 40, so frequencies
/// outside this band alias with negligible mass.
Rational character_band(long long k, long long l,
                        const std::vector<TrigSeries::Term>& a) {
    Rational fsum = 0;
    for (const auto& t : a) fsum += Rational(t.q);
    return Rational(std::llabs(k)) + Rational(9) * Rational(std::llabs(l)) * weighted_band(a) +
           Rational(40) * fsum;
}

/// gcd(|k|, q_i over the active harmonics); 0 only when k = 0 and none active
BigInt fold_gcd(long long k, const std::vector<TrigSeries::Term>& a) {
    BigInt G = abs(BigInt(k));
    for (const auto& t : a) G = gcd(G, t.q);
    return G;
}

/** Rectangle-rule average of e^{2 pi i (k x + l (y0 - g(x)))} over one period
    1/G, sampled at x_j = j / (p_eff G). All frequency reductions run in
    modular integer arithmetic, so the points stay exact at any scale. */
Complex folded_character_quadrature(long long k, long long l,
                                    const std::vector<TrigSeries::Term>& active,
                                    double y0, const BigInt& G, long long p_eff) {
    const BigInt Gn = G == 0 ? BigInt(1) : G;
    std::vector<unsigned long long> u(active.size());
    std::vector<double> cs(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
        u[i] = BigInt(active[i].q / Gn % p_eff).convert_to<unsigned long long>();
        cs[i] = active[i].c;
    }
    BigInt kk = BigInt(k) / Gn;
    unsigned long long v = BigInt((kk % p_eff + p_eff) % p_eff).convert_to<unsigned long long>();
    const auto pe = static_cast<unsigned long long>(p_eff);
    const double ped = static_cast<double>(p_eff);
    const double ld = static_cast<double>(l);
    ComplexSum acc;
    for (unsigned long long j = 0; j < pe; ++j) {
        double phase = static_cast<double>(v * j % pe) / ped + ld * y0;
        double gsum = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            gsum += cs[i] * std::sin(TWO_PI * (static_cast<double>(u[i] * j % pe) / ped));
        phase -= ld * gsum;
        acc.add(std::polar(1.0, TWO_PI * std::remainder(phase, 1.0)));
    }
    return acc.value() / ped;
}

std::string stage_tag(int n) { return "stage " + std::to_string(n); }

std::string lin_label(long long k, long long l) {
    std::string s;
    auto emit = [&s](long long v, const char* var) {
        if (v == 0) return;
        if (!s.empty())
            s += v < 0 ? " - " : " + ";
        else if (v < 0)
            s += "-";
        long long av = std::llabs(v);
        if (av != 1) {
            s += std::to_string(av);
            s += " ";
        }
        s += var;
    };
    emit(k, "x");
    emit(l, "y");
    return s.empty() ? std::string("0") : s;
}

std::string trig_arg(long long k, long long l) {
    std::string lin = lin_label(k, l);
    if (lin.find(' ') != std::string::npos) lin = "(" + lin + ")";
    return "2 pi " + lin;
}

} // namespace

Complex Observable::eval(double x, double y) const {
    Complex out{0.0, 0.0};
    for (const auto& t : terms)
        out += t.coeff * std::polar(1.0, TWO_PI * (static_cast<double>(t.k) * x +
                                                   static_cast<double>(t.l) * y));
    return out;
}

double Observable::sup_bound() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::abs(t.coeff);
    return s;
}

Complex Observable::mean() const {
    Complex m{0.0, 0.0};
    for (const auto& t : terms)
        if (t.k == 0 && t.l == 0) m += t.coeff;
    return m;
}

long long Observable::max_abs_k() const {
    long long m = 0;
    for (const auto& t : terms) m = std::max(m, std::llabs(t.k));
    return m;
}

long long Observable::max_abs_l() const {
    long long m = 0;
    for (const auto& t : terms) m = std::max(m, std::llabs(t.l));
    return m;
}

Observable Observable::constant(double v) {
    Observable f;
    f.terms.push_back({0, 0, Complex(v, 0.0)});
    if (v == 1.0) {
        f.label = "1";
    } else {
        char buf[32];
        snprintf(buf, sizeof buf, "%g", v);
        f.label = buf;
    }
    return f;
}

Observable Observable::character(long long k, long long l) {
    Observable f;
    f.terms.push_back({k, l, Complex(1.0, 0.0)});
    f.label = "e(" + lin_label(k, l) + ")";
    return f;
}

Observable Observable::cosine(long long k, long long l) {
    Observable f;
    f.terms.push_back({k, l, Complex(0.5, 0.0)});
    f.terms.push_back({-k, -l, Complex(0.5, 0.0)});
    f.label = "cos(" + trig_arg(k, l) + ")";
    return f;
}

Observable Observable::sine(long long k, long long l) {
    Observable f;
    f.terms.push_back({k, l, Complex(0.0, -0.5)});
    f.terms.push_back({-k, -l, Complex(0.0, 0.5)});
    f.label = "sin(" + trig_arg(k, l) + ")";
    return f;
}

SkewSystem skew_system(const Schedule& sched, int n, const Rational& alpha) {
    if (n < 0 || n > static_cast<int>(sched.stages.size()))
        throw PrereqViolated("skew_system: stage out of range");
    SkewSystem sys;
    sys.alpha = alpha;
    if (n >= 1) sys.g = g_series(sched, 1, n);
    return sys;
}

SkewOrbit::SkewOrbit(const TrigSeries& g, const Rational& alpha, const Rational& x0,
                     double y0) {
    Rational am = mod1(alpha), xm = mod1(x0);
    BigInt da = rat_den(am), dx = rat_den(xm);
    B_ = lcm(da, dx);
    a_ = rat_num(am) * (B_ / da);
    r_ = rat_num(xm) * (B_ / dx);
    for (const auto& t : g.terms) {
        qm_.push_back(t.q % B_);
        c_.push_back(t.c);
    }
    u0_ = y0 + g.eval(x0);
    fast_ = B_ <= (BigInt(1) << 62);
    if (fast_) {
        Bu_ = B_.convert_to<unsigned long long>();
        au_ = a_.convert_to<unsigned long long>();
        ru_ = r_.convert_to<unsigned long long>();
        for (const auto& q : qm_) qmu_.push_back(q.convert_to<unsigned long long>());
    }
    eval_y();
}

void SkewOrbit::step() {
    if (fast_) {
        ru_ += au_;
        if (ru_ >= Bu_) ru_ -= Bu_;
    } else {
        r_ += a_;
        if (r_ >= B_) r_ -= B_;
    }
    eval_y();
}

void SkewOrbit::eval_y() {
    double acc = 0.0;
    if (fast_) {
        for (std::size_t i = 0; i < qmu_.size(); ++i)
            acc += c_[i] *
                   std::sin(TWO_PI * (static_cast<double>(mulmod_u64(qmu_[i], ru_, Bu_)) /
                                      static_cast<double>(Bu_)));
    } else {
        for (std::size_t i = 0; i < qm_.size(); ++i)
            acc += c_[i] * std::sin(TWO_PI * to_double(Rational(qm_[i] * r_ % B_, B_)));
    }
    y_ = u0_ - acc;
}

double SkewOrbit::x() const {
    if (fast_) return static_cast<double>(ru_) / static_cast<double>(Bu_);
    return to_double(Rational(r_, B_));
}

Rational SkewOrbit::x_exact() const {
    if (fast_) return Rational(BigInt(ru_), BigInt(Bu_));
    return Rational(r_, B_);
}

BirkhoffResult birkhoff_average(const SkewSystem& map, const Observable& f,
                                const TorusPoint& z0, long long K, Complex reference) {
    if (K < 1) throw PrereqViolated("birkhoff_average: need at least one iterate");
    Rational x0 = z0.xr ? *z0.xr : rational_from_double(z0.x);
    SkewOrbit orb(map.g, map.alpha, x0, z0.y);
    std::vector<long long> marks;
    for (long long c = 1; c < K; c *= 2) marks.push_back(c);
    marks.push_back(K);
    BirkhoffResult res;
    res.reference = reference;
    ComplexSum acc;
    std::size_t mi = 0;
    for (long long i = 0; i <= K; ++i) {
        acc.add(f.eval(orb.x(), orb.y()));
        if (mi < marks.size() && i == marks[mi]) {
            Complex avg = acc.value() / static_cast<double>(i + 1);
            res.checkpoints.push_back({i, avg, std::abs(avg - reference)});
            ++mi;
        }
        if (i < K) orb.step();
    }
    return res;
}

double bessel_j(long long m, double z) {
    bool neg = false;
    if (m < 0) {
        if (m & 1) neg = !neg;
        m = -m;
    }
    if (z < 0.0) {
        if (m & 1) neg = !neg;
        z = -z;
    }
    double v;
    if (m == 0)
        v = ::j0(z);
    else if (m == 1)
        v = ::j1(z);
    else if (m <= std::numeric_limits<int>::max())
        v = ::jn(static_cast<int>(m), z);
    else
        v = 0.0;  // order astronomically past the turning point
    return neg ? -v : v;
}

double bessel_modulus(long long k, long long l, const BigInt& q, double c) {
    if (q <= 0) throw PrereqViolated("bessel_modulus: frequency must be positive");
    if (l == 0) return k == 0 ? 1.0 : 0.0;
    if (BigInt(k) % q != 0) return 0.0;
    BigInt m = BigInt(k) / q;
    if (m > 1'000'000'000 || m < -1'000'000'000) return 0.0;
    return std::fabs(bessel_j(m.convert_to<long long>(), TWO_PI * static_cast<double>(l) * c));
}

Complex curve_integral(const Observable& f, const InvariantCurve& curve,
                       long long quadrature_points, long long budget) {
    if (quadrature_points < 1)
        throw PrereqViolated("curve_integral: quadrature_points must be positive");
    if (budget < 1) throw PrereqViolated("curve_integral: budget must be positive");
    auto active = active_terms(curve.g);
    Complex out{0.0, 0.0};
    for (const auto& t : f.terms) {
        if (t.l == 0) {
            if (t.k == 0) out += t.coeff;
            continue;
        }
        Rational fb = character_band(t.k, t.l, active);
        if (Rational(quadrature_points) < 2 * fb)
            throw UnderResolved("curve_integral: grid below twice the character bandwidth");
        BigInt G = fold_gcd(t.k, active);
        long long p_eff = 1;
        if (G != 0) {
            BigInt pe = (BigInt(quadrature_points) + G - 1) / G;
            if (pe > budget)
                throw InfeasibleQuadrature("curve_integral: folded point count above budget");
            if (pe > 4'000'000'000LL)
                throw InfeasibleQuadrature("curve_integral: folded point count above modular range");
            p_eff = pe.convert_to<long long>();
        }
        out += t.coeff * folded_character_quadrature(t.k, t.l, active, curve.y0, G, p_eff);
    }
    return out;
}

std::vector<Complex> curve_base_factors(const TrigSeries& g, const Observable& f,
                                        long long budget) {
    if (budget < 1) throw PrereqViolated("curve_base_factors: budget must be positive");
    auto active = active_terms(g);
    std::vector<Complex> out;
    out.reserve(f.terms.size());
    for (const auto& t : f.terms) {
        if (t.l == 0 || active.empty()) {
            out.push_back(Complex(t.k == 0 ? 1.0 : 0.0, 0.0));
            continue;
        }
        if (active.size() == 1) {
            // single harmonic: the integral is a Bessel value, exactly
            const BigInt& q = active[0].q;
            if (BigInt(t.k) % q != 0) {
                out.push_back(Complex(0.0, 0.0));
                continue;
            }
            BigInt m = BigInt(t.k) / q;
            double v = (m > 1'000'000'000 || m < -1'000'000'000)
                           ? 0.0
                           : bessel_j(m.convert_to<long long>(),
                                      TWO_PI * static_cast<double>(t.l) * active[0].c);
            out.push_back(Complex(v, 0.0));
            continue;
        }
        BigInt G = fold_gcd(t.k, active);
        Rational fb = character_band(t.k, t.l, active);
        BigInt pe = rat_ceil(2 * fb / Rational(G)) + 64;
        if (pe > budget)
            throw InfeasibleQuadrature("curve_base_factors: folded point count above budget");
        out.push_back(folded_character_quadrature(t.k, t.l, active, 0.0, G,
                                                  pe.convert_to<long long>()));
    }
    return out;
}

Complex curve_reference(const Schedule& sched, int n, const Observable& f,
                        const TorusPoint& z0, long long budget) {
    if (n < 0 || n > static_cast<int>(sched.stages.size()))
        throw PrereqViolated("curve_reference: stage out of range");
    TrigSeries g;
    if (n >= 1) g = g_series(sched, 1, n);
    auto I0 = curve_base_factors(g, f, budget);
    double u0 = z0.y + g.eval(z0);
    Complex out{0.0, 0.0};
    for (std::size_t i = 0; i < f.terms.size(); ++i)
        out += f.terms[i].coeff *
               std::polar(1.0, TWO_PI * static_cast<double>(f.terms[i].l) * u0) * I0[i];
    return out;
}

double PiecewiseLinearCurve::gamma_at(const BigInt& j) const {
    Rational x = Rational(j - 1) * delta;
    return static_cast<double>(l_) * (y0_ - g_.eval(x));
}

double PiecewiseLinearCurve::inclination_at(const BigInt& j) const {
    // alpha_j = (gamma(j delta) - gamma((j-1) delta)) / delta
    //         = -l sum_i 2 c_i sin(pi q_i delta) cos(pi q_i (2j-1) delta) / delta
    // evaluated termwise from exact reduced angles, so nothing cancels
    const Rational two(2);
    double out = 0.0;
    for (const auto& t : g_.terms) {
        Rational u = Rational(t.q) * delta;
        Rational w = u * Rational(2 * j - 1);
        u -= two * Rational(rat_floor(u / two));
        w -= two * Rational(rat_floor(w / two));
        out += 2.0 * t.c * std::sin(M_PI * to_double(u)) * std::cos(M_PI * to_double(w));
    }
    return -static_cast<double>(l_) * out * to_double(segments);
}

double PiecewiseLinearCurve::ladder_at(const BigInt& j) const {
    BigInt twos = 2 * s;
    BigInt jp = ((j - 1) % twos + twos) % twos + 1;
    if (jp > s) jp = twos - jp + 1;
    double sd = to_double(s), qd = to_double(q);
    if (jp == s) return amplitude * qd / sd;
    return amplitude * qd * (1.0 - to_double(jp) / sd);
}

double PiecewiseLinearCurve::ladder_sum_bound() const {
    // sum over all 4 s q segments of 1/A_j = (4 s / a)(1 + H_{s-1})
    return 4.0 * (to_double(s) / amplitude) * (2.0 + log_big(s));
}

PiecewiseLinearCurve approximate_curve(const Schedule& sched, int n, long long l,
                                       double y0, int store) {
    if (n < 1 || n > static_cast<int>(sched.stages.size()))
        throw PrereqViolated("approximate_curve: stage out of range");
    if (l == 0) throw PrereqViolated("approximate_curve: ladder needs a nonzero y-frequency");
    const StageParams& st = sched.stage(n);
    PiecewiseLinearCurve pl;
    pl.s = st.s;
    pl.q = st.q;
    pl.segments = BigInt(4) * st.s * st.q;
    pl.delta = Rational(1, pl.segments);
    pl.amplitude = std::fabs(static_cast<double>(l)) * st.c;
    pl.g_ = g_series(sched, 1, n);
    pl.l_ = l;
    pl.y0_ = y0;
    long long keep = store < 0 ? 0 : store;
    if (BigInt(keep) > pl.segments) keep = pl.segments.convert_to<long long>();
    pl.breakpoints.reserve(keep);
    pl.inclinations.reserve(keep);
    pl.ladder.reserve(keep);
    for (long long j = 1; j <= keep; ++j) {
        BigInt jb(j);
        pl.breakpoints.push_back(pl.gamma_at(jb));
        pl.inclinations.push_back(pl.inclination_at(jb));
        pl.ladder.push_back(pl.ladder_at(jb));
    }
    return pl;
}

Lemma51Result lemma51_certificate(const Schedule& sched, int n, long long k, long long l,
                                  double eps, long long quad_budget) {
    if (n < 1 || n > static_cast<int>(sched.stages.size()))
        throw PrereqViolated("lemma51_certificate: stage out of range");
    if (!(eps > 0.0)) throw PrereqViolated("lemma51_certificate: eps must be positive");
    Lemma51Result res;
    const std::string tag = stage_tag(n);
    if (l == 0) {
        double val = k == 0 ? 1.0 : 0.0;
        Certificate c = cert_less("lemma-5.1", tag + ": l = 0, x-character integrates exactly",
                                  val, eps);
        c.exact = true;
        res.certs.push_back(c);
        res.quadrature_feasible = true;
        res.direct = Complex(val, 0.0);
        res.oracle = val;
        return res;
    }
    const StageParams& st = sched.stage(n);
    const GrowthPolicy& pol = sched.policy;
    const double a = std::fabs(static_cast<double>(l)) * st.c;
    const double sd = to_double(st.s);
    res.certs.push_back(cert_less("(5.3)", tag + ": root threshold below s",
                                  pol.l51_root_factor * std::sqrt(a / eps), sd));
    res.certs.push_back(cert_less("(5.3)", tag + ": s log s below c eps / factor",
                                  sd * log_big(st.s), a * eps / pol.l51_slog_factor));
    res.certs.push_back(cert_less("(5.3)", tag + ": s above minimum", pol.l51_s_min, sd));
    {
        LogReal lhs = inclination_bound(sched, n) * LogReal::from_log(log_big(st.s));
        LogReal rhs = LogReal::from_log(log_big(st.q));
        res.certs.push_back(cert_log_less("(5.4)", tag + ": q above beta s", lhs, rhs));
    }
    PiecewiseLinearCurve pl = approximate_curve(sched, n, l, 0.0, 0);
    res.certs.push_back(cert_less("lemma-5.1", tag + ": piecewise linear defect below eps/2",
                                  2.0 * M_PI * M_PI * M_PI * a / (sd * sd), eps / 2.0));
    res.certs.push_back(cert_less("lemma-5.1", tag + ": ladder reciprocal sum below eps/2",
                                  pl.ladder_sum_bound(), eps / 2.0));

    TrigSeries g = g_series(sched, 1, n);
    auto active = active_terms(g);
    BigInt G = fold_gcd(k, active);
    Rational fb = character_band(k, l, active);
    BigInt pe = G == 0 ? BigInt(1) : rat_ceil(2 * fb / Rational(G)) + 64;
    if (pe > quad_budget || pe > 4'000'000'000LL) {
        res.quadrature_feasible = false;
    } else {
        res.direct = folded_character_quadrature(k, l, active, 0.0, G,
                                                 pe.convert_to<long long>());
        res.quadrature_feasible = true;
    }
    if (active.size() == 1) res.oracle = bessel_modulus(k, l, active[0].q, active[0].c);
    return res;
}

L51Scan l51_scan(const GrowthPolicy& policy, double a, double eps, long long s_cap) {
    if (!(a > 0.0) || !(eps > 0.0))
        throw PrereqViolated("l51_scan: amplitude and eps must be positive");
    L51Scan out;
    long long start = static_cast<long long>(std::floor(policy.l51_s_min)) + 1;
    if (start < 2) start = 2;
    double root = policy.l51_root_factor * std::sqrt(a / eps);
    double slog_cap = a * eps / policy.l51_slog_factor;
    for (long long s = start; s <= s_cap; ++s) {
        ++out.scanned;
        double slog = static_cast<double>(s) * std::log(static_cast<double>(s));
        if (!(slog < slog_cap)) break;  // increasing in s: no larger s can pass
        if (root < static_cast<double>(s)) {
            out.feasible = true;
            out.s = s;
            break;
        }
    }
    return out;
}

Lemma52Window lemma52_window(const Schedule& sched, int n, const Observable& f,
                             double eps, const Interval& I, const Lemma52Options& opt) {
    if (n < 0 || n > static_cast<int>(sched.stages.size()))
        throw PrereqViolated("lemma52_window: stage out of range");
    if (!(eps > 0.0)) throw PrereqViolated("lemma52_window: eps must be positive");
    if (!(I.half_width > 0)) throw PrereqViolated("lemma52_window: degenerate interval");
    TrigSeries g;
    if (n >= 1) g = g_series(sched, 1, n);

    Lemma52Window w;
    // deterministic interior point: the golden section of I
    w.alpha0 = I.lo() + 2 * I.half_width * Rational(BigInt(2654435769ULL), BigInt(1) << 32);

    auto I0 = curve_base_factors(g, f, opt.quad_budget);
    const int Z = std::max(1, opt.zgrid);
    std::vector<SkewOrbit> orbits;
    std::vector<ComplexSum> sums(static_cast<std::size_t>(Z) * Z);
    std::vector<Complex> refs;
    orbits.reserve(static_cast<std::size_t>(Z) * Z);
    refs.reserve(static_cast<std::size_t>(Z) * Z);
    for (int i = 0; i < Z; ++i) {
        Rational x(2 * i + 1, 2 * Z);
        for (int j = 0; j < Z; ++j) {
            double y = (2 * j + 1) / (2.0 * Z);
            double u0 = y + g.eval(x);
            Complex ref{0.0, 0.0};
            for (std::size_t t = 0; t < f.terms.size(); ++t)
                ref += f.terms[t].coeff *
                       std::polar(1.0, TWO_PI * static_cast<double>(f.terms[t].l) * u0) *
                       I0[t];
            refs.push_back(ref);
            orbits.emplace_back(g, w.alpha0, x, y);
        }
    }

    long long K = 1, added = 0;
    for (;;) {
        if (K > opt.K_budget)
            throw BudgetExceeded("lemma52_window: K search exceeded the budget");
        while (added <= K) {
            for (std::size_t idx = 0; idx < orbits.size(); ++idx) {
                sums[idx].add(f.eval(orbits[idx].x(), orbits[idx].y()));
                orbits[idx].step();
            }
            ++added;
        }
        double dev = 0.0;
        for (std::size_t idx = 0; idx < orbits.size(); ++idx)
            dev = std::max(dev, std::abs(sums[idx].value() / static_cast<double>(K + 1) -
                                         refs[idx]));
        if (dev < eps / 4.0) {
            w.deviation = dev;
            break;
        }
        K *= 2;
    }
    w.K = K;

    // sampled sup of the gradient of f o T_n^{-1}; closed inverse form
    Rational sigma = 0;
    for (int j = 1; j <= n; ++j) sigma += Rational(1, 2 * sched.stage(j).q);
    const int DX = std::max(2, opt.dgrid);
    double D = 0.0;
    for (int ix = 0; ix < DX; ++ix) {
        Rational wr = mod1(Rational(2 * ix + 1, 2 * DX) - sigma);
        TorusPoint wp = TorusPoint::at(wr, 0.0);
        double gv = g.eval(wr);
        double gp = g.deriv(wp);
        for (int iy = 0; iy < 8; ++iy) {
            double y = (2 * iy + 1) / 16.0;
            double v = y - gv;
            Complex Sx{0.0, 0.0}, Sy{0.0, 0.0};
            for (const auto& t : f.terms) {
                double ph = to_double(mod1(Rational(t.k) * wr)) + static_cast<double>(t.l) * v;
                Complex e = t.coeff * std::polar(1.0, TWO_PI * ph);
                Sx += e * Complex(0.0, TWO_PI) *
                      (static_cast<double>(t.k) - static_cast<double>(t.l) * gp);
                Sy += e * Complex(0.0, TWO_PI) * static_cast<double>(t.l);
            }
            D = std::max(D, std::max(std::abs(Sx), std::abs(Sy)));
        }
    }
    w.D = D;

    double mult = 4.0 * f.sup_bound() / eps;
    if (!(mult < 9.0e15))
        throw PrereqViolated("lemma52_window: iterate multiplier exceeds integer range");
    w.a = static_cast<long long>(std::floor(mult)) + 1;
    if (static_cast<double>(w.a) * static_cast<double>(K + 1) > 9.0e18)
        throw PrereqViolated("lemma52_window: iterate threshold exceeds integer range");
    w.tau = w.a * (K + 1);

    if (D <= 0.0) {
        w.I_prime = I;  // constant pushforward: every alpha in I qualifies
    } else {
        LogReal h = LogReal::from_value(eps) /
                    (LogReal::from_value(4.0) * LogReal::from_value(static_cast<double>(K + 1)) *
                     LogReal::from_value(D));
        Rational hr = rational_below(h);
        Rational lo = std::max(I.lo(), Rational(w.alpha0 - hr));
        Rational hi = std::min(I.hi(), Rational(w.alpha0 + hr));
        if (!(lo < hi)) throw UnderResolved("lemma52_window: alpha window collapsed");
        w.I_prime = {(lo + hi) / 2, (hi - lo) / 2};
    }

    {
        char buf[96];
        snprintf(buf, sizeof buf, ": sampled deviation at alpha0, K = %lld, %d^2 z-grid",
                 static_cast<long long>(w.K), Z);
        w.certs.push_back(cert_less("lemma-5.2", stage_tag(n) + buf, w.deviation, eps / 4.0,
                                    /*sampled=*/true));
        w.certs.push_back(cert_less("lemma-5.2",
                                    stage_tag(n) + ": iterate multiplier above 4 sup|f| / eps",
                                    mult, static_cast<double>(w.a)));
    }
    return w;
}

double average_deviation(const Schedule& sched, int n, const Observable& f,
                         const Rational& alpha, long long k, int zgrid,
                         long long quad_budget) {
    if (n < 0 || n > static_cast<int>(sched.stages.size()))
        throw PrereqViolated("average_deviation: stage out of range");
    if (k < 0) throw PrereqViolated("average_deviation: negative iterate count");
    TrigSeries g;
    if (n >= 1) g = g_series(sched, 1, n);
    auto I0 = curve_base_factors(g, f, quad_budget);
    const int Z = std::max(1, zgrid);
    double worst = 0.0;
    for (int i = 0; i < Z; ++i) {
        Rational x(2 * i + 1, 2 * Z);
        for (int j = 0; j < Z; ++j) {
            double y = (2 * j + 1) / (2.0 * Z);
            double u0 = y + g.eval(x);
            Complex ref{0.0, 0.0};
            for (std::size_t t = 0; t < f.terms.size(); ++t)
                ref += f.terms[t].coeff *
                       std::polar(1.0, TWO_PI * static_cast<double>(f.terms[t].l) * u0) *
                       I0[t];
            SkewOrbit orb(g, alpha, x, y);
            ComplexSum acc;
            for (long long ii = 0; ii <= k; ++ii) {
                acc.add(f.eval(orb.x(), orb.y()));
                orb.step();
            }
            worst = std::max(worst,
                             std::abs(acc.value() / static_cast<double>(k + 1) - ref));
        }
    }
    return worst;
}

double iterate_observable_gap(const SkewSystem& a, const SkewSystem& b,
                              const Observable& f, long long T, int zgrid) {
    if (T < 0) throw PrereqViolated("iterate_observable_gap: negative iterate count");
    const int Z = std::max(1, zgrid);
    double worst = 0.0;
    for (int i = 0; i < Z; ++i) {
        Rational x(2 * i + 1, 2 * Z);
        for (int j = 0; j < Z; ++j) {
            double y = (2 * j + 1) / (2.0 * Z);
            SkewOrbit oa(a.g, a.alpha, x, y);
            SkewOrbit ob(b.g, b.alpha, x, y);
            for (long long ii = 0; ii <= T; ++ii) {
                worst = std::max(worst, std::abs(f.eval(ob.x(), ob.y()) -
                                                 f.eval(oa.x(), oa.y())));
                oa.step();
                ob.step();
            }
        }
    }
    return worst;
}

double averaged_difference_max(const SkewSystem& a, const SkewSystem& b,
                               const Observable& f, long long K, int zgrid) {
    if (K < 0) throw PrereqViolated("averaged_difference_max: negative iterate count");
    const int Z = std::max(1, zgrid);
    double worst = 0.0;
    for (int i = 0; i < Z; ++i) {
        Rational x(2 * i + 1, 2 * Z);
        for (int j = 0; j < Z; ++j) {
            double y = (2 * j + 1) / (2.0 * Z);
            SkewOrbit oa(a.g, a.alpha, x, y);
            SkewOrbit ob(b.g, b.alpha, x, y);
            ComplexSum diff;
            for (long long k = 0; k <= K; ++k) {
                diff.add(f.eval(ob.x(), ob.y()) - f.eval(oa.x(), oa.y()));
                worst = std::max(worst, std::abs(diff.value()) / static_cast<double>(k + 1));
                oa.step();
                ob.step();
            }
        }
    }
    return worst;
}

DensityReport density_check(int m, int n, const Schedule& sched, double eps,
                            long long budget, const std::optional<Rational>& alpha_in) {
    if (m < 1 || n < m || n > static_cast<int>(sched.stages.size()))
        throw PrereqViolated("density_check: need 1 <= m <= n <= stages");
    if (!(eps > 0.0)) throw PrereqViolated("density_check: eps must be positive");
    if (budget < 1) throw PrereqViolated("density_check: iterate budget must be positive");
    const BigInt& qm = sched.stage(m).q;
    if (qm > 1'000'000) throw BudgetExceeded("density_check: q_m too large to enumerate");
    if (rational_from_double(eps) * Rational(qm) < 1)
        throw PrereqViolated("density_check: eps below 1/q_m, windows are too narrow");

    DensityReport rep;
    rep.eps = eps;
    rep.m = m;
    rep.n = n;
    long long S = static_cast<long long>(std::ceil(1.0 / eps));
    if (S < 1) S = 1;
    if (S > 8192) throw BudgetExceeded("density_check: cell grid side above cap");
    rep.grid_side = static_cast<int>(S);

    TrigSeries g = g_series(sched, 1, n);

    // vertical oscillation of the curve across every width-1/q_m window
    Rational tail = 0;
    for (int j = m + 1; j <= n; ++j) tail += Rational(1, 4 * sched.stage(j).q);
    const long long qml = qm.convert_to<long long>();
    rep.oscillation_per_cell.resize(qml);
    double minosc = std::numeric_limits<double>::infinity();
    bool all = true;
    for (long long k = 0; k < qml; ++k) {
        Rational z = Rational(4 * k + 1, 4 * qm) + tail;
        Rational w = Rational(4 * k + 3, 4 * qm) - tail;
        double osc = g.eval(z) - g.eval(w);  // Gamma(w) - Gamma(z), y0 cancels
        bool ok = osc > 1.0;
        rep.oscillation_per_cell[k] = ok ? 1 : 0;
        all = all && ok;
        minosc = std::min(minosc, osc);
    }
    rep.min_oscillation = minosc;
    rep.oscillation_pass = all;
    rep.certs.push_back(cert_less("density",
                                  "stage " + std::to_string(n) + ": curve oscillation over every width-1/q_" +
                                      std::to_string(m) + " window",
                                  1.0, minosc));

    // eps-cell coverage along the curve orbit
    Rational alpha;
    BigInt iters(budget);
    if (n + 1 <= static_cast<int>(sched.stages.size())) {
        alpha = sched.stage(n + 1).interval.center;
        if (sched.stage(n + 1).q < iters) iters = sched.stage(n + 1).q;
    } else {
        // final stage: an interior point of I_n; the center itself is periodic
        const Interval& I = sched.stage(n).interval;
        alpha = I.lo() + 2 * I.half_width * Rational(BigInt(2654435769ULL), BigInt(1) << 32);
    }
    if (alpha_in) alpha = *alpha_in;
    const long long B = iters.convert_to<long long>();
    std::vector<unsigned char> hit(static_cast<std::size_t>(S) * S, 0);
    long long covered = 0;
    const long long total = S * S;
    SkewOrbit orb(g, alpha, Rational(0), 0.0);
    long long used = 0;
    for (long long i = 0; i < B; ++i) {
        double x = orb.x();
        double y = orb.y();
        y -= std::floor(y);
        long long cx = std::min(S - 1, static_cast<long long>(x * static_cast<double>(S)));
        long long cy = std::min(S - 1, static_cast<long long>(y * static_cast<double>(S)));
        unsigned char& cell = hit[static_cast<std::size_t>(cx) * S + cy];
        if (!cell) {
            cell = 1;
            ++covered;
        }
        used = i + 1;
        if (covered == total) break;
        orb.step();
    }
    rep.iterates_used = used;
    rep.grid_fraction = static_cast<double>(covered) / static_cast<double>(total);
    rep.certs.push_back(cert_less("density", "uncovered eps-cells after the iterate budget",
                                  static_cast<double>(total - covered), 1.0,
                                  /*sampled=*/true));
    return rep;
}

CoboundaryReport coboundary_solve(const std::vector<FourierCoeff>& phi_hat,
                                  const Rational& alpha) {
    CoboundaryReport rep;
    rep.mean = Complex(0.0, 0.0);
    CompensatedSum run;
    for (const auto& e : phi_hat) {
        CoboundaryReport::Entry ent;
        ent.k = e.k;
        ent.phi = e.value;
        if (e.k == 0) {
            rep.mean += e.value;
            ent.g = Complex(0.0, 0.0);
            ent.divisor = 0.0;
        } else {
            Rational fr = mod1(Rational(e.k) * alpha);
            if (fr == 0) {
                if (std::abs(e.value) != 0.0)
                    throw SmallDivisorZero("coboundary_solve: resonant mode k = " + e.k.str() +
                                           " carries a nonzero coefficient");
                ent.g = Complex(0.0, 0.0);
                ent.divisor = 0.0;
            } else {
                double fd = to_double(fr);
                double sp = std::sin(M_PI * fd), cp = std::cos(M_PI * fd);
                Complex d(2.0 * sp * sp, -2.0 * sp * cp);  // 1 - e^{2 pi i k alpha}
                ent.g = e.value / d;
                ent.divisor = std::abs(d);
            }
        }
        run.add(std::abs(ent.g));
        rep.entries.push_back(ent);
        rep.partial_sums.push_back(run.value());
    }
    return rep;
}

LacunarityReport lacunarity_report(const TrigSeries& g, int grid) {
    if (g.terms.size() < 2)
        throw PrereqViolated("lacunarity_report: need at least two harmonics");
    if (grid < 2) throw PrereqViolated("lacunarity_report: grid too small");
    std::vector<TrigSeries::Term> terms = g.terms;
    std::sort(terms.begin(), terms.end(),
              [](const TrigSeries::Term& a, const TrigSeries::Term& b) { return a.q < b.q; });
    LacunarityReport rep;
    rep.lambda = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < terms.size(); ++j) {
        double ratio = to_double(Rational(terms[j + 1].q, terms[j].q));
        rep.ratios.push_back(ratio);
        rep.lambda = std::min(rep.lambda, ratio);
    }
    CompensatedSum ps;
    TrigSeries prefix;
    for (const auto& t : terms) {
        ps.add(std::fabs(t.c));
        rep.partial_sums.push_back(ps.value());
        prefix.terms.push_back(t);
        double mx = -std::numeric_limits<double>::infinity();
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid; ++i) {
            double v = prefix.eval(Rational(i, grid));
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        rep.oscillation.push_back(mx - mn);
    }
    return rep;
}

} // namespace akconj
