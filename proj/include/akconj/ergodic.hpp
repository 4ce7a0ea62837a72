#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "akconj/analysis.hpp"
#include "akconj/torusmaps.hpp"

namespace akconj {

using Complex = std::complex<double>;

/// finite trigonometric polynomial Sum coeff * e^{2 pi i (k x + l y)}
struct Observable {
    struct Term {
        long long k = 0, l = 0;
        Complex coeff;
    };
    std::vector<Term> terms;
    std::string label;

    Complex eval(double x, double y) const;
    Complex eval(const TorusPoint& z) const { return eval(z.x, z.y); }
    /// Sum |coeff|: an upper bound for sup |f|
    double sup_bound() const;
    /// mean value over Lebesgue: the (0,0) coefficient
    Complex mean() const;
    long long max_abs_k() const;
    long long max_abs_l() const;

    static Observable constant(double v);
    static Observable character(long long k, long long l);
    static Observable cosine(long long k, long long l);
    static Observable sine(long long k, long long l);
};

/// closed skew form (x, y) -> (x + alpha, y + g(x) - g(x + alpha))
struct SkewSystem {
    TrigSeries g;
    Rational alpha;
};

/// G_n(alpha) as a skew system; n = 0 gives the bare rotation
SkewSystem skew_system(const Schedule& sched, int n, const Rational& alpha);

/** Orbit iterator of a SkewSystem with the x coordinate kept as an exact
    residue r/B (no drift at any frequency scale); y rides the conserved
    level u0 = y0 + g(x0). */
class SkewOrbit {
public:
    SkewOrbit(const TrigSeries& g, const Rational& alpha, const Rational& x0, double y0);
    void step();
    double x() const;  // in [0, 1)
    double y() const { return y_; }
    Rational x_exact() const;

private:
    bool fast_ = false;
    BigInt B_, r_, a_;
    unsigned long long Bu_ = 0, ru_ = 0, au_ = 0;
    std::vector<BigInt> qm_;
    std::vector<unsigned long long> qmu_;
    std::vector<double> c_;
    double u0_ = 0.0, y_ = 0.0;
    void eval_y();
};

struct BirkhoffResult {
    struct Checkpoint {
        long long k = 0;       // average runs over iterates 0..k
        Complex average;
        double deviation = 0;  // |average - reference|
    };
    std::vector<Checkpoint> checkpoints;  // k doubling from 1, final entry at K
    Complex reference;
};

/// running averages (1/(k+1)) Sum_{i<=k} f(map^i(z0)) at doubling checkpoints
BirkhoffResult birkhoff_average(const SkewSystem& map, const Observable& f,
                                const TorusPoint& z0, long long K, Complex reference);

inline constexpr long long QUAD_BUDGET = 50'000'000;

/** Trapezoidal quadrature of int_0^1 f(x, curve(x)) dx, each character folded
    to one period of gcd(k, frequencies). quadrature_points is the virtual
    grid over [0,1]; the folded point count is what is actually evaluated. */
Complex curve_integral(const Observable& f, const InvariantCurve& curve,
                       long long quadrature_points, long long budget = QUAD_BUDGET);

/// J_m(z) with the (-1)^m reflections for negative order/argument
double bessel_j(long long m, double z);

/** |int_0^1 e^{2 pi i (k x + l Gamma(x))} dx| for the single-sine curve
    Gamma = y0 - c sin(2 pi q x): |J_{k/q}(2 pi l c)| when q divides k, else 0.
    l = 0 degenerates to the pure x-character. */
double bessel_modulus(long long k, long long l, const BigInt& q, double c);

/** Per-term y0-independent curve factors I0 = int e^{2 pi i (k x - l g(x))} dx.
    Exact for l = 0 and for single-harmonic g (Bessel identity); otherwise
    folded quadrature at an internally chosen resolution. */
std::vector<Complex> curve_base_factors(const TrigSeries& g, const Observable& f,
                                        long long budget = QUAD_BUDGET);

/// mu_n-average of f over the invariant curve through z0:
/// Sum coeff e^{2 pi i l u(z0)} I0(k, l)
Complex curve_reference(const Schedule& sched, int n, const Observable& f,
                        const TorusPoint& z0, long long budget = QUAD_BUDGET);

/** Piecewise linear interpolation data for l * Gamma_n on the uniform grid of
    4 s q segments. Only a prefix of the segment data is materialized; any
    segment is evaluated on demand from the exact closed form. */
struct PiecewiseLinearCurve {
    Rational delta;      // 1 / (4 s q)
    BigInt segments;     // 4 s q
    BigInt s;
    BigInt q;
    double amplitude;    // |l| c_n, the ladder scale
    std::vector<double> breakpoints;    // gamma_j at (j-1) delta, stored prefix
    std::vector<double> inclinations;   // alpha_j, stored prefix
    std::vector<double> ladder;         // A_j, stored prefix

    double gamma_at(const BigInt& j) const;        // 1-based segment index
    double inclination_at(const BigInt& j) const;  // exact product form, no cancellation
    double ladder_at(const BigInt& j) const;       // mirrored + periodic extension
    /// closed-form bound 4 (s/a) (2 + ln s) for Sum 1/A_j
    double ladder_sum_bound() const;

private:
    friend PiecewiseLinearCurve approximate_curve(const Schedule&, int, long long,
                                                  double, int);
    TrigSeries g_;
    long long l_ = 1;
    double y0_ = 0.0;
};

PiecewiseLinearCurve approximate_curve(const Schedule& sched, int n, long long l,
                                       double y0, int store = 2048);

struct Lemma51Result {
    std::vector<Certificate> certs;
    bool quadrature_feasible = false;
    Complex direct;        // folded quadrature of the curve character, when feasible
    double oracle = -1.0;  // Bessel modulus for single-harmonic curves, else -1
};

/** Oscillatory-integral certificate chain for the character (k, l) against the
    stage-n curve: the amplitude feasibility pair at |l| c_n with policy
    constants, the inclination-domination bound, the piecewise-linear
    approximation quality, and the ladder sum. Direct quadrature is attached
    when the folded point count fits the budget. */
Lemma51Result lemma51_certificate(const Schedule& sched, int n, long long k, long long l,
                                  double eps, long long quad_budget = QUAD_BUDGET);

struct L51Scan {
    bool feasible = false;
    BigInt s;              // smallest witness when feasible
    long long scanned = 0; // s values examined
};

/// exhaustive scan for the amplitude feasibility pair at amplitude a:
/// root_factor sqrt(a/eps) < s, s ln s < a eps / slog_factor, s > s_min
L51Scan l51_scan(const GrowthPolicy& policy, double a, double eps,
                 long long s_cap = 1'000'000);

struct Lemma52Options {
    int zgrid = 16;                  // compactness surrogate, zgrid x zgrid
    int dgrid = 64;                  // x-resolution for the gradient sup
    long long K_budget = 1 << 22;
    long long quad_budget = QUAD_BUDGET;
};

struct Lemma52Window {
    Rational alpha0;    // deterministic golden split of I
    long long K = 0;
    Interval I_prime;
    long long a = 0;
    long long tau = 0;  // a (K + 1)
    double D = 0.0;     // sampled sup |D(f o T_n^{-1})|
    double deviation = 0.0;  // sup z-grid |avg_K - reference| at alpha0
    std::vector<Certificate> certs;
};

/** Uniform-convergence window: K such that the sampled z-grid deviation at
    alpha0 drops below eps/4, then the alpha-interval of width eps/(4(K+1)D)
    and the iterate threshold tau = a (K+1) with a > 4 |f| / eps. */
Lemma52Window lemma52_window(const Schedule& sched, int n, const Observable& f,
                             double eps, const Interval& I,
                             const Lemma52Options& opt = {});

/// sampled sup over a z-grid of |(1/(k+1)) Sum_{i<=k} f(G_n^i(alpha; z)) - f_n(z)|
double average_deviation(const Schedule& sched, int n, const Observable& f,
                         const Rational& alpha, long long k, int zgrid = 8,
                         long long quad_budget = QUAD_BUDGET);

/// sampled sup over a z-grid of max_{i<=T} |f(b^i z) - f(a^i z)| for two skew
/// systems sharing the rotation number
double iterate_observable_gap(const SkewSystem& a, const SkewSystem& b,
                              const Observable& f, long long T, int zgrid = 8);

/// sampled sup over a z-grid of max_{k<=K} (1/(k+1)) |Sum_{i<=k} (f(b^i z) - f(a^i z))|
double averaged_difference_max(const SkewSystem& a, const SkewSystem& b,
                               const Observable& f, long long K, int zgrid = 8);

struct DensityReport {
    double eps = 0.0;
    int m = 0, n = 0;
    std::vector<unsigned char> oscillation_per_cell;  // one flag per J_k
    bool oscillation_pass = false;
    double min_oscillation = 0.0;
    int grid_side = 0;
    double grid_fraction = 0.0;
    long long iterates_used = 0;
    std::vector<Certificate> certs;
};

/** The two-part density evidence: the z_k / w_k oscillation of Gamma_n over
    every width-1/q_m cell, and the fraction of eps-cells hit by the curve
    orbit within min(q_{n+1}, budget) iterates.  The orbit rotation defaults
    to the next stage's center, or to the golden point of I_n on the final
    stage; pass alpha to override. */
DensityReport density_check(int m, int n, const Schedule& sched, double eps,
                            long long budget,
                            const std::optional<Rational>& alpha = std::nullopt);

struct FourierCoeff {
    BigInt k;
    Complex value;
};

struct CoboundaryReport {
    Complex mean;  // the integral obstruction; solving skips the k = 0 mode
    struct Entry {
        BigInt k;
        Complex phi;
        Complex g;
        double divisor = 0.0;  // |1 - e^{2 pi i k alpha}|
    };
    std::vector<Entry> entries;
    std::vector<double> partial_sums;  // running Sum |g_k| in input order
};

/// g_k = phi_k / (1 - e^{2 pi i k alpha}); exact resonance detection at
/// rational alpha, SmallDivisorZero when an active frequency resonates
CoboundaryReport coboundary_solve(const std::vector<FourierCoeff>& phi_hat,
                                  const Rational& alpha);

struct LacunarityReport {
    double lambda = 0.0;               // min q_{j+1} / q_j
    std::vector<double> ratios;
    std::vector<double> partial_sums;  // Sum |c_j| prefixes
    std::vector<double> oscillation;   // sampled max - min of each prefix series
};

LacunarityReport lacunarity_report(const TrigSeries& g, int grid = 2048);

} // namespace akconj
