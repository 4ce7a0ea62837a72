#pragma once

#include <complex>
#include <optional>
#include <variant>
#include <vector>

#include "akconj/logreal.hpp"
#include "akconj/schedule.hpp"

namespace akconj {

/** Point on T^2 = R^2/Z^2, coordinates in [0,1). `xr` is an optional exact
    rational backing for x; while present, frequency reductions q*x mod 1 are
    computed exactly before any sine, so arbitrarily large q stays meaningful. */
struct TorusPoint {
    double x = 0.0, y = 0.0;
    std::optional<Rational> xr;

    static TorusPoint at(double x, double y);
    static TorusPoint at(const Rational& x, double y);
};

/// point of the complex strip A^r (|Im x|, |Im y| <= r); lift semantics
struct StripPoint {
    std::complex<double> x{0.0, 0.0}, y{0.0, 0.0};
};

struct Mat2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
    Mat2 mul(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d,
                c * o.a + d * o.c, c * o.b + d * o.d};
    }
    double det() const { return a * d - b * c; }
    double max_row_sum() const {
        double r0 = std::fabs(a) + std::fabs(b), r1 = std::fabs(c) + std::fabs(d);
        return r0 > r1 ? r0 : r1;
    }
};

/** Finite sine series g(x) = sum_j c_j sin(2 pi q_j x) with big-integer
    frequencies. Evaluation at exact rational x reduces q*x mod 1 exactly. */
class TrigSeries {
public:
    struct Term {
        BigInt q;
        double c;
    };
    std::vector<Term> terms;

    double eval(double x) const;
    double eval(const Rational& x) const;
    double eval(const TorusPoint& z) const;              // picks the exact path if backed
    std::complex<double> eval_strip(std::complex<double> x) const;
    double deriv(const TorusPoint& z) const;             // g'(x)
    double deriv_sup() const;                            // 2 pi sum |c| q, may overflow
    double sum_abs_c() const;
    BigInt max_q() const;
    BigInt freq_gcd() const;

    /// largest frequency usable on the double path (fits a 53-bit mantissa)
    static bool fits_double(const BigInt& q);
};

struct RotAtom {
    double alpha = 0.0;
    std::optional<Rational> alpha_r;
};
struct PhiAtom {
    BigInt q;
    double c = 0.0;
    bool inverse = false;
};
using MapAtom = std::variant<RotAtom, PhiAtom>;

/** Composition of rotation and shear atoms, applied first-to-last. This is
    the ground-truth evaluator: no trigonometric collapsing, every atom acts
    in sequence. */
struct MapExpr {
    std::vector<MapAtom> atoms;

    TorusPoint operator()(TorusPoint z) const;
    StripPoint lift(StripPoint z) const;   // no mod-1 wrapping
    MapExpr inverse() const;
    MapExpr then(const MapExpr& next) const;
};

/// one shear step: (x, y) -> (x + 1/(2q), y + c sin(2 pi q x)), or its inverse
TorusPoint phi_apply(const StageParams& st, TorusPoint z, bool inverse = false);

/** Closed form of T_{m,n}^{-1}: subtracts the accumulated x-shift, then every
    sine evaluated at the shifted x. Requires the exact factorization chain
    q_j = 4 s_j q_{j-1} inside [m, n] (throws PrereqViolated otherwise). */
TorusPoint t_inverse_apply(const Schedule& sched, int m, int n, TorusPoint z);

/// the series sum_{j=m}^{n} c_j sin(2 pi q_j x); empty when m > n
TrigSeries g_series(const Schedule& sched, int m, int n);

/// closed skew form (x, y) -> (x + alpha, y + g(x) - g(x + alpha))
TorusPoint skew_apply(const TrigSeries& g, double alpha,
                      const std::optional<Rational>& alpha_r, TorusPoint z);

/// T_{m,n} as an atom list (identity when m > n)
MapExpr t_expr(const Schedule& sched, int m, int n);

/// G_{m,n}(alpha) = T_{m,n}^{-1} R_alpha T_{m,n}, atom by atom
MapExpr compose_oracle(const Schedule& sched, int m, int n, double alpha,
                       std::optional<Rational> alpha_r = std::nullopt);

/** Graph y = y0 - sum_{j=m}^{n} c_j sin(2 pi q_j x), invariant under every
    G_{m,n}(alpha) in the closed skew form. */
struct InvariantCurve {
    double y0 = 0.0;
    TrigSeries g;
    double eval(double x) const { return y0 - g.eval(x); }
    double eval(const Rational& x) const { return y0 - g.eval(x); }
    double eval(const TorusPoint& z) const { return y0 - g.eval(z); }
};

InvariantCurve invariant_curve(const Schedule& sched, int m, int n, double y0);

/// chain-rule Jacobian of the composition at z; shears make it unit lower
/// triangular, so det is exactly 1
Mat2 jacobian(const MapExpr& expr, TorusPoint z);

/// offset conjugation: S_m^{-1} G_{1,n}(alpha) S_m with S_m^{-1} = T_{1,m-1}
MapExpr conjugated_offset(const Schedule& sched, int m, int n, double alpha,
                          std::optional<Rational> alpha_r = std::nullopt);

/** Product over atoms of the max-row-sum bound on the atom derivative over
    A^r: shears contribute 1 + 2 pi q |c| cosh(2 pi q r), rotations 1. */
LogReal atom_derivative_bound(const MapExpr& expr, double r);
LogReal atom_derivative_bound(const MapExpr& expr, const LogReal& r);

/** Max over A^r of the image's |Im| under the composition: the x strip never
    grows, the y strip gains |c| sinh(2 pi q r) per shear. */
LogReal strip_image_halfwidth(const MapExpr& expr, double r);

/// torus distance of two reals modulo 1
double torus_dist(double a, double b);

/// distance of two torus points in the sup metric, coordinates mod 1
double torus_point_dist(const TorusPoint& a, const TorusPoint& b);

inline constexpr double TWO_PI = 6.283185307179586476925286766559;

} // namespace akconj
