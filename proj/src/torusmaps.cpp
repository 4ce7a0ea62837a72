#include "akconj/torusmaps.hpp"

#include <cmath>

#include "akconj/errors.hpp"

namespace akconj {

namespace {

double reduce01(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r = 0.0; // floor rounding at the seam
    return r;
}

// sin(2 pi q x) with the frequency reduction done exactly when possible
double sin_frac(double t01) { return std::sin(TWO_PI * t01); }

double term_frac_exact(const BigInt& q, const Rational& x) {
    return to_double(mod1(Rational(q) * x));
}

double term_frac_double(const BigInt& q, double x) {
    if (!TrigSeries::fits_double(q))
        throw PrereqViolated("frequency exceeds the double mantissa; exact x backing required");
    double qx = to_double(q) * x;
    return reduce01(std::fmod(qx, 1.0) + 1.0);
}

std::complex<double> sin_strip(const BigInt& q, std::complex<double> x) {
    // sin(theta + i phi) = sin(theta) cosh(phi) + i cos(theta) sinh(phi)
    double theta_frac = term_frac_double(q, reduce01(x.real()));
    double phi = to_double(q) * x.imag();
    double arg = TWO_PI * phi;
    if (std::fabs(arg) > 700.0)
        throw PrereqViolated("strip evaluation overflows: 2 pi q |Im x| > 700");
    double th = TWO_PI * theta_frac;
    return {std::sin(th) * std::cosh(arg), std::cos(th) * std::sinh(arg)};
}

} // namespace

TorusPoint TorusPoint::at(double x, double y) {
    TorusPoint z;
    z.x = reduce01(x);
    z.y = reduce01(y);
    return z;
}

TorusPoint TorusPoint::at(const Rational& x, double y) {
    TorusPoint z;
    z.xr = mod1(x);
    z.x = to_double(*z.xr);
    z.y = reduce01(y);
    return z;
}

bool TrigSeries::fits_double(const BigInt& q) {
    return q >= 0 && boost::multiprecision::msb(q == 0 ? BigInt(1) : q) <= 52;
}

double TrigSeries::eval(double x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.c * sin_frac(term_frac_double(t.q, x));
    return s;
}

double TrigSeries::eval(const Rational& x) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.c * sin_frac(term_frac_exact(t.q, x));
    return s;
}

double TrigSeries::eval(const TorusPoint& z) const {
    return z.xr ? eval(*z.xr) : eval(z.x);
}

std::complex<double> TrigSeries::eval_strip(std::complex<double> x) const {
    std::complex<double> s{0.0, 0.0};
    for (const auto& t : terms) s += t.c * sin_strip(t.q, x);
    return s;
}

double TrigSeries::deriv(const TorusPoint& z) const {
    double s = 0.0;
    for (const auto& t : terms) {
        double frac = z.xr ? term_frac_exact(t.q, *z.xr) : term_frac_double(t.q, z.x);
        s += t.c * TWO_PI * to_double(t.q) * std::cos(TWO_PI * frac);
    }
    return s;
}

double TrigSeries::deriv_sup() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::fabs(t.c) * TWO_PI * to_double(t.q);
    return s;
}

double TrigSeries::sum_abs_c() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::fabs(t.c);
    return s;
}

BigInt TrigSeries::max_q() const {
    BigInt m = 0;
    for (const auto& t : terms)
        if (t.q > m) m = t.q;
    return m;
}

BigInt TrigSeries::freq_gcd() const {
    BigInt g = 0;
    for (const auto& t : terms) g = boost::multiprecision::gcd(g, t.q);
    return g;
}

TorusPoint phi_apply(const StageParams& st, TorusPoint z, bool inverse) {
    Rational shift(1, 2 * st.q);
    double c = st.c;
    if (!inverse) {
        double frac = z.xr ? term_frac_exact(st.q, *z.xr) : term_frac_double(st.q, z.x);
        double ynew = z.y + c * sin_frac(frac);
        if (z.xr)
            return TorusPoint::at(*z.xr + shift, ynew);
        return TorusPoint::at(z.x + to_double(shift), ynew);
    }
    // inverse shifts first, then removes the shear at the new x
    TorusPoint w = z.xr ? TorusPoint::at(*z.xr - shift, z.y)
                        : TorusPoint::at(z.x - to_double(shift), z.y);
    double frac = w.xr ? term_frac_exact(st.q, *w.xr) : term_frac_double(st.q, w.x);
    w.y = reduce01(w.y - c * sin_frac(frac));
    return w;
}

TorusPoint t_inverse_apply(const Schedule& sched, int m, int n, TorusPoint z) {
    if (m < 1 || n > static_cast<int>(sched.stages.size()) || m > n)
        throw PrereqViolated("t_inverse_apply: stage range out of bounds");
    for (int j = m + 1; j <= n; ++j) {
        const auto& st = sched.stage(j);
        if (st.q != 4 * st.s * sched.stage(j - 1).q)
            throw PrereqViolated("t_inverse_apply: factorization chain q_j = 4 s_j q_{j-1} broken");
    }
    Rational shift(0);
    for (int j = m; j <= n; ++j) shift += Rational(1, 2 * sched.stage(j).q);

    TorusPoint w = z.xr ? TorusPoint::at(*z.xr - shift, z.y)
                        : TorusPoint::at(z.x - to_double(shift), z.y);
    double y = z.y;
    for (int j = m; j <= n; ++j) {
        const auto& st = sched.stage(j);
        double frac = w.xr ? term_frac_exact(st.q, *w.xr) : term_frac_double(st.q, w.x);
        y -= st.c * sin_frac(frac);
    }
    w.y = reduce01(y);
    return w;
}

TrigSeries g_series(const Schedule& sched, int m, int n) {
    TrigSeries g;
    for (int j = m; j <= n && j <= static_cast<int>(sched.stages.size()); ++j) {
        const auto& st = sched.stage(j);
        g.terms.push_back({st.q, st.c});
    }
    return g;
}

TorusPoint skew_apply(const TrigSeries& g, double alpha,
                      const std::optional<Rational>& alpha_r, TorusPoint z) {
    double gx = g.eval(z);
    if (z.xr && alpha_r) {
        Rational xnew = mod1(*z.xr + *alpha_r);
        double gxa = g.eval(xnew);
        return TorusPoint::at(xnew, z.y + gx - gxa);
    }
    double xnew = reduce01(z.x + (alpha_r ? to_double(*alpha_r) : alpha));
    double gxa = g.eval(xnew);
    return TorusPoint::at(xnew, z.y + gx - gxa);
}

TorusPoint MapExpr::operator()(TorusPoint z) const {
    for (const auto& atom : atoms) {
        if (const auto* rot = std::get_if<RotAtom>(&atom)) {
            if (z.xr && rot->alpha_r)
                z = TorusPoint::at(*z.xr + *rot->alpha_r, z.y);
            else
                z = TorusPoint::at(z.x + (rot->alpha_r ? to_double(*rot->alpha_r) : rot->alpha), z.y);
        } else {
            const auto& phi = std::get<PhiAtom>(atom);
            StageParams st;
            st.q = phi.q;
            st.c = phi.c;
            z = phi_apply(st, z, phi.inverse);
        }
    }
    return z;
}

StripPoint MapExpr::lift(StripPoint z) const {
    for (const auto& atom : atoms) {
        if (const auto* rot = std::get_if<RotAtom>(&atom)) {
            z.x += rot->alpha_r ? to_double(*rot->alpha_r) : rot->alpha;
        } else {
            const auto& phi = std::get<PhiAtom>(atom);
            double half = to_double(Rational(1, 2 * phi.q));
            if (!phi.inverse) {
                TrigSeries one{{{phi.q, phi.c}}};
                z.y += one.eval_strip(z.x);
                z.x += half;
            } else {
                z.x -= half;
                TrigSeries one{{{phi.q, phi.c}}};
                z.y -= one.eval_strip(z.x);
            }
        }
    }
    return z;
}

MapExpr MapExpr::inverse() const {
    MapExpr inv;
    for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
        if (const auto* rot = std::get_if<RotAtom>(&*it)) {
            RotAtom r = *rot;
            r.alpha = -r.alpha;
            if (r.alpha_r) r.alpha_r = -*r.alpha_r;
            inv.atoms.push_back(r);
        } else {
            PhiAtom p = std::get<PhiAtom>(*it);
            p.inverse = !p.inverse;
            inv.atoms.push_back(p);
        }
    }
    return inv;
}

MapExpr MapExpr::then(const MapExpr& next) const {
    MapExpr out = *this;
    out.atoms.insert(out.atoms.end(), next.atoms.begin(), next.atoms.end());
    return out;
}

MapExpr t_expr(const Schedule& sched, int m, int n) {
    MapExpr e;
    for (int j = m; j <= n && j <= static_cast<int>(sched.stages.size()); ++j) {
        const auto& st = sched.stage(j);
        e.atoms.push_back(PhiAtom{st.q, st.c, false});
    }
    return e;
}

MapExpr compose_oracle(const Schedule& sched, int m, int n, double alpha,
                       std::optional<Rational> alpha_r) {
    MapExpr t = t_expr(sched, m, n);
    MapExpr rot;
    rot.atoms.push_back(RotAtom{alpha, std::move(alpha_r)});
    return t.then(rot).then(t.inverse());
}

InvariantCurve invariant_curve(const Schedule& sched, int m, int n, double y0) {
    return InvariantCurve{y0, g_series(sched, m, n)};
}

Mat2 jacobian(const MapExpr& expr, TorusPoint z) {
    Mat2 J;
    for (const auto& atom : expr.atoms) {
        Mat2 A; // atom derivative at the current point
        if (const auto* rot = std::get_if<RotAtom>(&atom)) {
            if (z.xr && rot->alpha_r)
                z = TorusPoint::at(*z.xr + *rot->alpha_r, z.y);
            else
                z = TorusPoint::at(z.x + (rot->alpha_r ? to_double(*rot->alpha_r) : rot->alpha), z.y);
        } else {
            const auto& phi = std::get<PhiAtom>(atom);
            StageParams st;
            st.q = phi.q;
            st.c = phi.c;
            TorusPoint w = phi_apply(st, z, phi.inverse);
            // shear slope evaluated where the sine acts: at z for the forward
            // map, at the shifted image for the inverse
            const TorusPoint& at = phi.inverse ? w : z;
            double frac = at.xr ? term_frac_exact(phi.q, *at.xr) : term_frac_double(phi.q, at.x);
            double slope = phi.c * TWO_PI * to_double(phi.q) * std::cos(TWO_PI * frac);
            A.c = phi.inverse ? -slope : slope;
            z = w;
        }
        J = A.mul(J);
    }
    return J;
}

MapExpr conjugated_offset(const Schedule& sched, int m, int n, double alpha,
                          std::optional<Rational> alpha_r) {
    MapExpr s_inv = t_expr(sched, 1, m - 1);     // S_m^{-1} = T_{1,m-1}
    MapExpr s = s_inv.inverse();
    MapExpr g = compose_oracle(sched, 1, n, alpha, std::move(alpha_r));
    return s.then(g).then(s_inv);
}

LogReal atom_derivative_bound(const MapExpr& expr, double r) {
    return atom_derivative_bound(expr, LogReal::from_value(r));
}

LogReal atom_derivative_bound(const MapExpr& expr, const LogReal& r) {
    LogReal prod = LogReal::from_value(1.0);
    for (const auto& atom : expr.atoms) {
        const auto* phi = std::get_if<PhiAtom>(&atom);
        if (!phi || phi->c == 0.0) continue;
        LogReal arg = LogReal::from_value(TWO_PI) * LogReal::from_log(log_big(phi->q)) * r;
        LogReal slope = LogReal::from_value(TWO_PI * std::fabs(phi->c)) *
                        LogReal::from_log(log_big(phi->q)) * cosh_log(arg);
        prod = prod * (LogReal::from_value(1.0) + slope);
    }
    return prod;
}

LogReal strip_image_halfwidth(const MapExpr& expr, double r) {
    // real shifts keep |Im x| = r, so every shear's sine sees the same strip;
    // only the y width accumulates
    LogReal rx = LogReal::from_value(r);
    LogReal w = rx;
    for (const auto& atom : expr.atoms) {
        const auto* phi = std::get_if<PhiAtom>(&atom);
        if (!phi || phi->c == 0.0) continue;
        LogReal arg = LogReal::from_value(TWO_PI) * LogReal::from_log(log_big(phi->q)) * rx;
        w = w + LogReal::from_value(std::fabs(phi->c)) * sinh_log(arg);
    }
    return w;
}

double torus_dist(double a, double b) {
    double d = std::fabs(a - b);
    d -= std::floor(d);
    return d <= 0.5 ? d : 1.0 - d;
}

double torus_point_dist(const TorusPoint& a, const TorusPoint& b) {
    double dx = torus_dist(a.x, b.x), dy = torus_dist(a.y, b.y);
    return dx > dy ? dx : dy;
}

} // namespace akconj
