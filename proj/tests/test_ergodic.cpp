#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "akconj/analysis.hpp"
#include "akconj/ergodic.hpp"
#include "akconj/errors.hpp"

using namespace akconj;

namespace {

Schedule make_schedule(int base, int stages, double c = 1.0) {
    Schedule s;
    s.policy.base = base;
    s.policy.c_profile = {CProfileKind::Constant, c};
    for (int n = 1; n <= stages; ++n) s.stages.push_back(build_stage(s, c));
    return s;
}

constexpr double PI = 3.14159265358979323846;

const Rational GOLDEN(BigInt(2654435769ULL), BigInt(1) << 32);

} // namespace

TEST_CASE("observable factories: values and labels") {
    Observable c1 = Observable::constant(1.0);
    CHECK(c1.label == "1");
    CHECK(std::abs(c1.eval(0.3, 0.9) - Complex(1.0, 0.0)) < 1e-15);

    Observable ex = Observable::character(1, 0);
    CHECK(ex.label == "e(x)");
    CHECK(std::abs(ex.eval(0.25, 0.7) - Complex(0.0, 1.0)) < 1e-15);

    Observable mixed = Observable::character(-2, 3);
    CHECK(mixed.label == "e(-2 x + 3 y)");
    CHECK(mixed.sup_bound() == doctest::Approx(1.0));
    CHECK(mixed.max_abs_k() == 2);
    CHECK(mixed.max_abs_l() == 3);

    Observable cx = Observable::cosine(1, 0);
    CHECK(cx.label == "cos(2 pi x)");
    for (double x : {0.0, 0.17, 0.5, 0.83}) {
        CHECK(std::abs(cx.eval(x, 0.4) - Complex(std::cos(2 * PI * x), 0.0)) < 1e-15);
    }
    Observable sy = Observable::sine(0, 1);
    CHECK(sy.label == "sin(2 pi y)");
    for (double y : {0.1, 0.25, 0.9}) {
        CHECK(std::abs(sy.eval(0.3, y) - Complex(std::sin(2 * PI * y), 0.0)) < 1e-15);
    }
    CHECK(Observable::cosine(2, -1).label == "cos(2 pi (2 x - y))");
    CHECK(Observable::constant(1.0).mean() == Complex(1.0, 0.0));
    CHECK(Observable::character(1, 0).mean() == Complex(0.0, 0.0));
}

TEST_CASE("skew_system: stage selection and range checks") {
    Schedule s = make_schedule(10, 2);
    CHECK(skew_system(s, 0, Rational(1, 3)).g.terms.empty());
    CHECK(skew_system(s, 1, Rational(1, 3)).g.terms.size() == 1);
    CHECK(skew_system(s, 2, Rational(1, 3)).g.terms.size() == 2);
    CHECK_THROWS_AS(skew_system(s, 3, Rational(1, 3)), PrereqViolated);
    CHECK_THROWS_AS(skew_system(s, -1, Rational(1, 3)), PrereqViolated);
}

TEST_CASE("skew orbit walks the exact residue lattice") {
    Schedule s = make_schedule(10, 2);
    TrigSeries g = g_series(s, 1, 2);
    Rational alpha(17, 97), x0(1, 5);
    SkewOrbit orb(g, alpha, x0, 0.3);
    double u0 = 0.3 + g.eval(x0);
    for (int i = 0; i <= 40; ++i) {
        Rational expect = mod1(x0 + i * alpha);
        CHECK(orb.x_exact() == expect);
        // y rides the conserved level u0 = y0 + g(x0)
        CHECK(orb.y() == doctest::Approx(u0 - g.eval(expect)).epsilon(1e-14));
        orb.step();
    }
}

TEST_CASE("skew orbit matches the closed skew map and the atom oracle") {
    Schedule s = make_schedule(10, 2);
    TrigSeries g = g_series(s, 1, 2);
    Rational alpha(17, 97);
    double ad = to_double(alpha);

    SkewOrbit orb(g, alpha, Rational(1, 5), 0.3);
    TorusPoint z = TorusPoint::at(Rational(1, 5), 0.3);
    MapExpr oracle = compose_oracle(s, 1, 2, ad, alpha);
    TorusPoint w = TorusPoint::at(Rational(1, 5), 0.3);
    for (int i = 0; i < 50; ++i) {
        z = skew_apply(g, ad, alpha, z);
        w = oracle(w);
        orb.step();
        double yw = orb.y() - std::floor(orb.y());
        CHECK(torus_dist(yw, z.y) < 1e-12);
        CHECK(torus_dist(orb.x(), z.x) < 1e-12);
        CHECK(torus_dist(yw, w.y) < 1e-9);
    }
}

TEST_CASE("skew orbit stays exact at astronomic frequencies") {
    TrigSeries g;
    g.terms.push_back({boost::multiprecision::pow(BigInt(10), 30), 1.0});
    Rational alpha(2, 7);
    SkewOrbit orb(g, alpha, Rational(1, 3), 0.0);
    double u0 = g.eval(Rational(1, 3));
    for (int i = 0; i < 10; ++i) {
        CHECK(orb.y() == doctest::Approx(u0 - g.eval(orb.x_exact())).epsilon(1e-14));
        orb.step();
    }
}

TEST_CASE("skew orbit big-denominator fallback stays exact") {
    TrigSeries g;
    g.terms.push_back({BigInt(4), 1.0});
    Rational alpha = Rational(3, BigInt(1) << 70);
    Rational x0 = Rational(1, BigInt(1) << 70);
    SkewOrbit orb(g, alpha, x0, 0.5);
    for (int i = 0; i <= 5; ++i) {
        CHECK(orb.x_exact() == Rational(BigInt(1) + 3 * i, BigInt(1) << 70));
        CHECK(orb.y() == doctest::Approx(0.5 + g.eval(x0) - g.eval(orb.x_exact()))
                             .epsilon(1e-14));
        orb.step();
    }
}

TEST_CASE("birkhoff average of a constant sits at the constant") {
    SkewSystem sys;
    sys.alpha = GOLDEN;
    Observable f = Observable::constant(3.5);
    BirkhoffResult r = birkhoff_average(sys, f, TorusPoint::at(0.2, 0.6), 100,
                                        Complex(3.5, 0.0));
    CHECK(r.checkpoints.size() == 8);  // 1 2 4 8 16 32 64 100
    CHECK(r.checkpoints.back().k == 100);
    for (std::size_t i = 0; i + 1 < r.checkpoints.size(); ++i)
        CHECK(r.checkpoints[i].k < r.checkpoints[i + 1].k);
    for (const auto& cp : r.checkpoints) {
        CHECK(std::abs(cp.average - Complex(3.5, 0.0)) < 1e-13);
        CHECK(cp.deviation < 1e-13);
    }
    CHECK_THROWS_AS(birkhoff_average(sys, f, TorusPoint::at(0.2, 0.6), 0, Complex(0, 0)),
                    PrereqViolated);
}

TEST_CASE("rotation averages obey the geometric-series bound") {
    SkewSystem sys;
    sys.alpha = GOLDEN;
    Observable f = Observable::character(1, 0);
    double divisor = std::abs(1.0 - std::polar(1.0, 2 * PI * to_double(sys.alpha)));
    BirkhoffResult r = birkhoff_average(sys, f, TorusPoint::at(Rational(1, 7), 0.25), 4096,
                                        Complex(0.0, 0.0));
    for (const auto& cp : r.checkpoints) {
        double bound = 2.0 / (static_cast<double>(cp.k + 1) * divisor);
        CHECK(cp.deviation <= 1.01 * bound);
    }
}

TEST_CASE("skew average of e(y) settles on the curve integral") {
    Schedule s = make_schedule(10, 1);  // q = 4, c = 1
    const Interval& I1 = s.stage(1).interval;
    Rational alpha = I1.lo() + 2 * I1.half_width * GOLDEN;
    SkewSystem sys = skew_system(s, 1, alpha);
    Observable f = Observable::character(0, 1);
    TorusPoint z0 = TorusPoint::at(Rational(0), 0.5);
    Complex ref = curve_reference(s, 1, f, z0);
    // u0 = 0.5 and the base factor is the zeroth Bessel value
    CHECK(std::abs(ref - Complex(-::j0(2 * PI), 0.0)) < 1e-12);
    BirkhoffResult r = birkhoff_average(sys, f, z0, 100000, ref);
    CHECK(r.checkpoints.back().deviation < 5e-3);
}

TEST_CASE("curve integral: exact characters and the empty-series curve") {
    InvariantCurve flat{0.7, TrigSeries{}};
    CHECK(std::abs(curve_integral(Observable::constant(1.0), flat, 64) - Complex(1, 0)) <
          1e-15);
    CHECK(std::abs(curve_integral(Observable::character(3, 0), flat, 64)) < 1e-15);
    Complex ey = curve_integral(Observable::character(0, 1), flat, 64);
    CHECK(std::abs(ey - std::polar(1.0, 2 * PI * 0.7)) < 1e-14);
    CHECK(std::abs(curve_integral(Observable::character(2, 1), flat, 64)) < 1e-12);
}

TEST_CASE("curve integral folds to identical samples across frequencies") {
    Observable f0 = Observable::character(0, 1);
    Complex first;
    bool have = false;
    for (long long q : {4, 16, 64}) {
        TrigSeries g;
        g.terms.push_back({BigInt(q), 1.0});
        InvariantCurve curve{0.0, g};
        Complex v = curve_integral(f0, curve, 256 * q);
        if (!have) {
            first = v;
            have = true;
        } else {
            CHECK(v.real() == first.real());
            CHECK(v.imag() == first.imag());
        }
        CHECK(std::abs(v - Complex(::j0(2 * PI), 0.0)) < 1e-9);

        Observable fq = Observable::character(q, 1);
        Complex w = curve_integral(fq, curve, 256 * q);
        CHECK(std::abs(w - Complex(::j1(2 * PI), 0.0)) < 1e-9);
    }
}

TEST_CASE("bessel reflection rules and the modulus oracle") {
    CHECK(bessel_j(-3, 2.5) == doctest::Approx(-bessel_j(3, 2.5)).epsilon(1e-15));
    CHECK(bessel_j(-2, 2.5) == doctest::Approx(bessel_j(2, 2.5)).epsilon(1e-15));
    CHECK(bessel_j(3, -2.5) == doctest::Approx(-bessel_j(3, 2.5)).epsilon(1e-15));
    CHECK(bessel_j(0, 2 * PI) == doctest::Approx(::j0(2 * PI)).epsilon(1e-15));

    BigInt q(4);
    CHECK(bessel_modulus(0, 0, q, 1.0) == 1.0);
    CHECK(bessel_modulus(3, 0, q, 1.0) == 0.0);
    CHECK(bessel_modulus(1, 1, q, 1.0) == 0.0);  // 4 does not divide 1
    CHECK(bessel_modulus(4, 1, q, 1.0) == doctest::Approx(std::fabs(::j1(2 * PI))).epsilon(1e-15));
    CHECK(bessel_modulus(-4, 1, q, 1.0) == doctest::Approx(std::fabs(::j1(2 * PI))).epsilon(1e-15));
    CHECK(bessel_modulus(0, 2, q, 0.5) == doctest::Approx(std::fabs(::j0(2 * PI))).epsilon(1e-15));
}

TEST_CASE("curve integral rejects an under-resolved or over-budget grid") {
    TrigSeries g;
    g.terms.push_back({BigInt(64), 1.0});
    InvariantCurve curve{0.0, g};
    Observable f = Observable::character(0, 1);
    CHECK_THROWS_AS(curve_integral(f, curve, 512), UnderResolved);
    CHECK_THROWS_AS(curve_integral(f, curve, 1000000000, 1000), InfeasibleQuadrature);
    CHECK_THROWS_AS(curve_integral(f, curve, 0), PrereqViolated);
}

TEST_CASE("curve base factors: exact paths at astronomic frequency") {
    TrigSeries g;
    g.terms.push_back({boost::multiprecision::pow(BigInt(10), 30), 1.0});
    Observable f;
    f.terms.push_back({0, 1, Complex(1, 0)});
    f.terms.push_back({1, 1, Complex(1, 0)});
    f.terms.push_back({0, 2, Complex(1, 0)});
    f.terms.push_back({5, 0, Complex(1, 0)});
    auto base = curve_base_factors(g, f);
    CHECK(std::abs(base[0] - Complex(::j0(2 * PI), 0.0)) < 1e-15);
    CHECK(std::abs(base[1]) == 0.0);  // 10^30 does not divide 1
    CHECK(std::abs(base[2] - Complex(::j0(4 * PI), 0.0)) < 1e-15);
    CHECK(std::abs(base[3]) == 0.0);  // pure x-character
}

TEST_CASE("curve base factors refuse an unfoldable astronomic pair") {
    TrigSeries g;
    BigInt q = boost::multiprecision::pow(BigInt(10), 30);
    g.terms.push_back({q, 1.0});
    g.terms.push_back({4 * q, 1.0});
    Observable f = Observable::character(1, 1);
    CHECK_THROWS_AS(curve_base_factors(g, f), InfeasibleQuadrature);
}

TEST_CASE("curve reference agrees with direct quadrature on a two-harmonic curve") {
    Schedule s = make_schedule(2, 2);  // q = 4, 80
    Observable f;
    f.terms.push_back({1, 1, Complex(0.3, 0.1)});
    f.terms.push_back({0, 1, Complex(1.0, 0.0)});
    f.terms.push_back({2, -1, Complex(0.0, 0.5)});
    f.terms.push_back({3, 0, Complex(1.0, 0.0)});
    f.terms.push_back({0, 0, Complex(0.25, 0.0)});
    TorusPoint z0 = TorusPoint::at(Rational(0), 0.7);
    Complex ref = curve_reference(s, 2, f, z0);
    Complex direct = curve_integral(f, invariant_curve(s, 1, 2, 0.7), 16384);
    CHECK(std::abs(ref - direct) < 1e-10);

    // same conserved level, different base point, same reference
    Rational x1(1, 8);
    TrigSeries g = g_series(s, 1, 2);
    TorusPoint z1 = TorusPoint::at(x1, 0.7 - g.eval(x1));
    CHECK(std::abs(curve_reference(s, 2, f, z1) - ref) < 1e-12);
}

TEST_CASE("piecewise linear data: breakpoints, inclinations, ladder") {
    Schedule s;
    s.policy.base = 10;
    s.stages.push_back(build_stage(s, 1.0, 5));  // s = 5, q = 20
    PiecewiseLinearCurve pl = approximate_curve(s, 1, 1, 0.3, 40);
    CHECK(pl.segments == 400);
    CHECK(pl.delta == Rational(1, 400));
    CHECK(pl.amplitude == doctest::Approx(1.0));
    CHECK(pl.breakpoints.size() == 40);

    TrigSeries g = g_series(s, 1, 1);
    double d = to_double(pl.delta);
    for (int j = 1; j <= 40; ++j) {
        double direct = 0.3 - g.eval(Rational(j - 1, 400));
        CHECK(pl.breakpoints[j - 1] == doctest::Approx(direct).epsilon(1e-13));
        double quotient = (pl.gamma_at(BigInt(j + 1)) - pl.gamma_at(BigInt(j))) / d;
        CHECK(pl.inclinations[j - 1] == doctest::Approx(quotient).epsilon(1e-8));
    }

    // mirrored and periodic ladder, and inclination domination on every segment
    CHECK(pl.ladder_at(BigInt(1)) == doctest::Approx(pl.ladder_at(BigInt(10))));
    CHECK(pl.ladder_at(BigInt(5)) == doctest::Approx(pl.ladder_at(BigInt(6))));
    CHECK(pl.ladder_at(BigInt(3)) == doctest::Approx(pl.ladder_at(BigInt(13))));
    double recip = 0.0;
    for (long long j = 1; j <= 400; ++j) {
        double A = pl.ladder_at(BigInt(j));
        CHECK(std::fabs(pl.inclination_at(BigInt(j))) >= A);
        recip += 1.0 / A;
    }
    CHECK(recip <= pl.ladder_sum_bound());

    CHECK_THROWS_AS(approximate_curve(s, 1, 0, 0.0, 8), PrereqViolated);
    CHECK_THROWS_AS(approximate_curve(s, 2, 1, 0.0, 8), PrereqViolated);
}

TEST_CASE("ladder domination survives a second stage and l = -2") {
    Schedule s = make_schedule(2, 2);  // q = 4, 80; s_2 = 5
    PiecewiseLinearCurve pl = approximate_curve(s, 2, -2, 0.0, 0);
    CHECK(pl.amplitude == doctest::Approx(2.0));
    std::mt19937_64 rng(7);
    BigInt segs = pl.segments;
    for (int trial = 0; trial < 400; ++trial) {
        BigInt j = BigInt(rng() % segs.convert_to<unsigned long long>()) + 1;
        CHECK(std::fabs(pl.inclination_at(j)) >= pl.ladder_at(j));
    }
}

TEST_CASE("oscillatory certificate chain at a desk-checkable amplitude") {
    Schedule s;
    s.policy.base = 10;
    s.policy.l51_root_factor = 1.0;
    s.policy.l51_slog_factor = 1.0;
    s.stages.push_back(build_stage(s, 1.28e6, 13000));  // s = 13000, q = 52000
    CHECK(s.stage(1).q == 52000);

    Lemma51Result res = lemma51_certificate(s, 1, 0, 1, 1.0);
    REQUIRE(res.certs.size() == 6);
    CHECK(all_pass(res.certs));
    CHECK(res.certs[0].condition == "(5.3)");
    CHECK(res.certs[3].condition == "(5.4)");
    CHECK(res.certs[4].condition == "lemma-5.1");
    double defect = 2.0 * PI * PI * PI * 1.28e6 / (13000.0 * 13000.0);
    CHECK(res.certs[4].margin == doctest::Approx(0.5 - defect).epsilon(1e-6));
    double ladder = 4.0 * (13000.0 / 1.28e6) * (2.0 + std::log(13000.0));
    CHECK(res.certs[5].margin == doctest::Approx(0.5 - ladder).epsilon(1e-6));

    REQUIRE(res.quadrature_feasible);
    CHECK(res.oracle >= 0.0);
    CHECK(res.oracle == doctest::Approx(std::fabs(::j0(2 * PI * 1.28e6))).epsilon(1e-12));
    CHECK(std::fabs(std::abs(res.direct) - res.oracle) < 1e-8);
    CHECK(std::abs(res.direct) < 1.0);  // the oscillatory integral is tiny here
}

TEST_CASE("amplitude window scan: first witness and literal infeasibility") {
    GrowthPolicy relaxed;
    relaxed.l51_root_factor = 1.0;
    relaxed.l51_slog_factor = 1.0;
    L51Scan hit = l51_scan(relaxed, 1.28e6, 1.0);
    CHECK(hit.feasible);
    CHECK(hit.s == 1132);  // first integer above sqrt(1.28e6)

    GrowthPolicy literal;  // defaults keep the strict factors of 16
    L51Scan miss = l51_scan(literal, 1.0, 0.1);
    CHECK_FALSE(miss.feasible);
    // exhaustive witness: no s up to past the root threshold satisfies both sides
    for (long long sv = 8; sv <= 51; ++sv) {
        bool root_ok = 16.0 * std::sqrt(1.0 / 0.1) < static_cast<double>(sv);
        bool slog_ok = static_cast<double>(sv) * std::log(static_cast<double>(sv)) <
                       1.0 * 0.1 / 16.0;
        CHECK_FALSE((root_ok && slog_ok));
    }
    CHECK_THROWS_AS(l51_scan(literal, 0.0, 0.1), PrereqViolated);
}

TEST_CASE("x-characters earn an exact certificate without quadrature") {
    Schedule s = make_schedule(10, 1);
    Lemma51Result res = lemma51_certificate(s, 1, 5, 0, 0.5);
    REQUIRE(res.certs.size() == 1);
    CHECK(res.certs[0].pass);
    CHECK(res.certs[0].exact);
    CHECK(res.oracle == 0.0);
    CHECK(std::abs(res.direct) == 0.0);

    Lemma51Result mean = lemma51_certificate(s, 1, 0, 0, 0.5);
    CHECK_FALSE(mean.certs[0].pass);  // the constant character cannot decay
    CHECK_THROWS_AS(lemma51_certificate(s, 1, 0, 1, 0.0), PrereqViolated);
    CHECK_THROWS_AS(lemma51_certificate(s, 2, 0, 1, 0.5), PrereqViolated);
}

TEST_CASE("uniform window for a constant observable costs two iterates") {
    Schedule s = make_schedule(10, 1);
    Observable f = Observable::constant(2.0);
    Interval I = s.stage(1).interval;
    Lemma52Window w = lemma52_window(s, 1, f, 0.5, I);
    CHECK(w.K == 1);
    CHECK(w.deviation < 1e-13);
    CHECK(w.D == 0.0);
    CHECK(w.a == 17);  // floor(4 * 2 / 0.5) + 1
    CHECK(w.tau == 34);
    CHECK(w.I_prime.center == I.center);
    CHECK(w.I_prime.half_width == I.half_width);
    CHECK(all_pass(w.certs));
}

TEST_CASE("uniform window for the bare rotation, then the window really works") {
    Schedule s = make_schedule(10, 1);
    Observable f = Observable::character(1, 0);
    Interval I = initial_interval();
    double eps = 0.4;
    Lemma52Window w = lemma52_window(s, 0, f, eps, I);
    CHECK(w.K <= 64);
    CHECK(w.deviation < eps / 4);
    CHECK(w.D == doctest::Approx(2 * PI).epsilon(1e-12));
    CHECK(w.a == 11);
    CHECK(w.tau == w.a * (w.K + 1));
    CHECK(w.I_prime.contains(w.alpha0));
    CHECK(w.I_prime.strictly_inside(I));
    CHECK(all_pass(w.certs));
    CHECK_FALSE(w.certs[0].rigorous);
    CHECK(w.certs[1].rigorous);

    // every alpha in the window keeps long averages near the mean
    for (int t = 0; t < 20; ++t) {
        Rational a = w.I_prime.lo() + 2 * w.I_prime.half_width * Rational(2 * t + 1, 40);
        for (long long k : {w.tau, w.tau + 17, 3 * w.tau}) {
            CHECK(average_deviation(s, 0, f, a, k) < eps);
        }
    }
}

TEST_CASE("uniform window on the first-stage skew product") {
    Schedule s = make_schedule(10, 1);
    Observable f = Observable::character(0, 1);
    Interval I = s.stage(1).interval;
    double eps = 0.5;
    Lemma52Window w = lemma52_window(s, 1, f, eps, I);
    CHECK(w.deviation < eps / 4);
    CHECK(w.I_prime.contains(w.alpha0));
    CHECK(all_pass(w.certs));
    for (int t = 0; t < 3; ++t) {
        Rational a = w.I_prime.lo() + 2 * w.I_prime.half_width * Rational(2 * t + 1, 6);
        CHECK(average_deviation(s, 1, f, a, w.tau) < eps);
        CHECK(average_deviation(s, 1, f, a, 2 * w.tau) < eps);
    }
    CHECK_THROWS_AS(lemma52_window(s, 1, f, 0.0, I), PrereqViolated);
    Lemma52Options tight;
    tight.K_budget = 2;
    CHECK_THROWS_AS(lemma52_window(s, 0, Observable::character(1, 0), 1e-8, initial_interval(), tight),
                    BudgetExceeded);
}

TEST_CASE("observable gaps between consecutive stages") {
    Schedule s = make_schedule(2, 2);
    const Interval& I2 = s.stage(2).interval;
    Rational alpha = I2.lo() + 2 * I2.half_width * GOLDEN;
    SkewSystem a = skew_system(s, 1, alpha);
    SkewSystem b = skew_system(s, 2, alpha);

    // pure x-characters see identical marginals
    CHECK(iterate_observable_gap(a, b, Observable::character(1, 0), 64) < 1e-14);

    Observable ey = Observable::character(0, 1);
    double gap = iterate_observable_gap(a, b, ey, 64);
    CHECK(gap > 0.0);
    double lift = 0.0;
    for (int i = 0; i <= 64; ++i)
        lift = std::max(lift, iterate_gap(s, 2, alpha, BigInt(i)));
    CHECK(gap <= 2 * PI * lift * 1.0001);

    CHECK(averaged_difference_max(a, b, ey, 64) <= gap + 1e-15);
    CHECK(averaged_difference_max(a, b, Observable::constant(1.0), 16) < 1e-15);
}

TEST_CASE("density evidence: oscillation plus full cell coverage") {
    Schedule s = make_schedule(2, 2);  // q = 4, 80
    DensityReport rep = density_check(1, 1, s, 0.25, 1000000);
    CHECK(rep.oscillation_pass);
    CHECK(rep.min_oscillation == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.grid_side == 4);
    CHECK(rep.grid_fraction == 1.0);
    CHECK(rep.iterates_used <= 80);
    CHECK(all_pass(rep.certs));
    CHECK(rep.certs[0].rigorous);
    CHECK_FALSE(rep.certs[1].rigorous);
}

TEST_CASE("density coverage honestly fails on a periodic final stage") {
    Schedule s = make_schedule(10, 1);  // q = 4, orbit period 4 at the center
    DensityReport rep = density_check(1, 1, s, 0.25, 1000, alpha_of(s));
    CHECK(rep.oscillation_pass);
    CHECK(rep.grid_fraction == doctest::Approx(0.25));
    CHECK_FALSE(rep.certs[1].pass);
}

TEST_CASE("density coverage passes at the default interior point of a final stage") {
    Schedule s = make_schedule(10, 1);
    DensityReport rep = density_check(1, 1, s, 0.25, 5000);
    CHECK(rep.grid_fraction == 1.0);
    CHECK(all_pass(rep.certs));
}

TEST_CASE("density preconditions and caps") {
    Schedule s = make_schedule(10, 1);
    CHECK_THROWS_AS(density_check(1, 1, s, 0.25, 0), PrereqViolated);
    CHECK_THROWS_AS(density_check(1, 1, s, 0.1, 100), PrereqViolated);  // eps < 1/q
    CHECK_THROWS_AS(density_check(0, 1, s, 0.25, 100), PrereqViolated);
    CHECK_THROWS_AS(density_check(1, 2, s, 0.25, 100), PrereqViolated);

    Schedule wide;
    wide.policy.base = 10;
    wide.stages.push_back(build_stage(wide, 1.0, 25000));  // q = 100000
    CHECK_THROWS_AS(density_check(1, 1, wide, 1.0 / 10000, 100), BudgetExceeded);

    Schedule huge;
    huge.policy.base = 10;
    huge.stages.push_back(build_stage(huge, 1.0, 300000));  // q = 1.2e6
    CHECK_THROWS_AS(density_check(1, 1, huge, 0.5, 100), BudgetExceeded);
}

TEST_CASE("coboundary solver recovers the generating coefficients") {
    Rational alpha = GOLDEN;
    BigInt q(4);
    double th = 2 * PI * to_double(mod1(q * alpha));
    Complex om = std::polar(1.0, th);
    std::vector<FourierCoeff> phi;
    phi.push_back({q, Complex(0.0, -0.5) * (Complex(1, 0) - om)});
    phi.push_back({-q, Complex(0.0, 0.5) * (Complex(1, 0) - std::conj(om))});
    CoboundaryReport rep = coboundary_solve(phi, alpha);
    REQUIRE(rep.entries.size() == 2);
    CHECK(std::abs(rep.entries[0].g - Complex(0.0, -0.5)) < 1e-10);
    CHECK(std::abs(rep.entries[1].g - Complex(0.0, 0.5)) < 1e-10);
    CHECK(rep.entries[0].divisor == doctest::Approx(std::abs(Complex(1, 0) - om)).epsilon(1e-12));
    CHECK(rep.partial_sums.size() == 2);
    CHECK(rep.partial_sums[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(rep.mean) == 0.0);
}

TEST_CASE("coboundary solver flags resonances and keeps silent zeros") {
    std::vector<FourierCoeff> loud;
    loud.push_back({BigInt(8), Complex(1.0, 0.0)});
    CHECK_THROWS_AS(coboundary_solve(loud, Rational(3, 8)), SmallDivisorZero);

    std::vector<FourierCoeff> quiet;
    quiet.push_back({BigInt(8), Complex(0.0, 0.0)});
    quiet.push_back({BigInt(0), Complex(0.25, 0.0)});
    CoboundaryReport rep = coboundary_solve(quiet, Rational(3, 8));
    CHECK(std::abs(rep.entries[0].g) == 0.0);
    CHECK(rep.mean == Complex(0.25, 0.0));
}

TEST_CASE("lacunarity report: ratios, sums, oscillation growth") {
    TrigSeries g;
    g.terms.push_back({BigInt(16), 0.5});  // deliberately out of order
    g.terms.push_back({BigInt(4), 1.0});
    g.terms.push_back({BigInt(64), 1.0 / 3.0});
    LacunarityReport rep = lacunarity_report(g);
    CHECK(rep.lambda == doctest::Approx(4.0).epsilon(1e-14));
    REQUIRE(rep.ratios.size() == 2);
    CHECK(rep.ratios[0] == doctest::Approx(4.0));
    CHECK(rep.ratios[1] == doctest::Approx(4.0));
    REQUIRE(rep.partial_sums.size() == 3);
    CHECK(rep.partial_sums[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.partial_sums[1] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(rep.partial_sums[2] == doctest::Approx(1.0 + 0.5 + 1.0 / 3.0).epsilon(1e-12));
    CHECK(rep.oscillation[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.oscillation[1] <= 3.0 + 1e-12);
    CHECK(rep.oscillation[2] <= rep.partial_sums[2] * 2 + 1e-12);
    CHECK(rep.oscillation[1] >= rep.oscillation[0] - 1e-12);

    TrigSeries lone;
    lone.terms.push_back({BigInt(4), 1.0});
    CHECK_THROWS_AS(lacunarity_report(lone), PrereqViolated);
}

TEST_CASE("average deviation: constants vanish, orbit checks stay finite") {
    Schedule s = make_schedule(10, 1);
    CHECK(average_deviation(s, 1, Observable::constant(1.0), Rational(1, 7), 32) < 1e-13);
    CHECK_THROWS_AS(average_deviation(s, 1, Observable::constant(1.0), Rational(1, 7), -1),
                    PrereqViolated);
}
