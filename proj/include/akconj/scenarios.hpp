#pragma once

#include <optional>
#include <string>
#include <vector>

#include "akconj/ergodic.hpp"
#include "akconj/schedule.hpp"

namespace akconj {

/** First `size` observables of the fixed exhaustion: the constant 1, then
    the character pairs cos/sin(2 pi (k x + l y)) by growing shell
    max(|k|, |l|), x-heavier frequencies first inside a shell.  Prefix
    stable: enumerate_family(m) is a prefix of enumerate_family(n) for
    m <= n. */
std::vector<Observable> enumerate_family(int size);

struct RunConfig {
    GrowthPolicy policy;
    long long quad_budget = QUAD_BUDGET;
    long long orbit_budget = 1'000'000;  // iterate steps per sampled average
    int alpha_samples = 20;
    int z_grid = 8;
    int sup_grid = 41;                   // per-axis grid for sampled sup checks
    std::vector<double> density_eps = {0.5, 0.25};
    unsigned long long seed = 0x5eed;
    std::string out_dir;                 // consumed by report_io, not the runners
    bool emit_csv = true;
    bool emit_svg = true;
};

struct ArtifactRef {
    std::string kind;  // "json", "csv", "svg"
    std::string path;  // relative to the run directory
    std::string role;
};

/// per-stage record of the closeness chain |G_n - G_{n-1}| on the final intervals
struct NormChainEntry {
    int n = 0;
    double eps = 0.0;
    Rational half_width;
    double bound = 0.0;    // interval sup bound, log-domain evaluated
    double sampled = 0.0;  // max one-step gap over sampled rotation numbers
};

struct DensityRun {
    double eps = 0.0;
    int m = 0;  // coarsest stage whose windows resolve eps
    DensityReport report;
};

struct ClosenessEntry {
    int n = 0;
    BigInt tau;
    double bound = 0.0;    // telescoped tail sum of per-stage gaps
    double witness = 0.0;  // direct orbit sup, capped by the budget
    long long witness_iterates = 0;
};

struct Theorem1Evidence {
    std::vector<DensityRun> density;
    std::vector<ClosenessEntry> closeness;
};

struct Theorem2Evidence {
    double u_residual = 0.0;        // sup |u(G z) - u(z)| over the sample grid
    int band_orbits = 0;
    int band_escapes = 0;
    double band_drift = 0.0;        // largest |u(z_i) - u(z_0)| seen along orbits
    LacunarityReport lacunarity;
    Rational coboundary_alpha;
    CoboundaryReport coboundary;
    std::string resonance_message;  // raised at the exact periodic center
};

struct Theorem3Member {
    std::string label;
    long long k = 0, l = 0;              // defining frequency pair
    bool x_only = true;
    long long window_K = 0;
    long long a = 0;
    long long tau = 0;
    Interval window;                     // admissible rotation numbers, this member
    double dev62 = 0.0;                  // sup_z |curve average - space mean|
    double dev63 = 0.0;                  // Birkhoff deviation inside the window
    double dev64 = 0.0;                  // averaged difference against the next stage
    double dev65 = 0.0;                  // deviation at the extended iterate counts
    double part_prev = 0.0;              // decomposition: stage-n average defect
    double part_gap = 0.0;               //                stage gap contribution
    double part_mean = 0.0;              //                reference mismatch
};

struct Theorem3Stage {
    int n = 0;
    double eps = 0.0;
    double c = 0.0;
    BigInt s, q;
    long long a = 0;       // iterate multiplier, max over members
    long long tau = 0;     // window horizon, max over members
    BigInt carry_tau;      // (tau + 1) a, the iterate range handed to stage n+1
    Interval window;       // intersection of the member windows
    std::vector<Theorem3Member> members;
};

struct Theorem3Evidence {
    std::vector<std::string> family;
    std::vector<Theorem3Stage> stages;
    bool complete = true;
    std::string stop_reason;
};

struct RunReport {
    Variant variant = Variant::Theorem1;
    Schedule schedule;
    std::vector<Certificate> certificates;
    std::vector<NormChainEntry> norm_chain;
    std::optional<Theorem1Evidence> theorem1;
    std::optional<Theorem2Evidence> theorem2;
    std::optional<Theorem3Evidence> theorem3;
    std::vector<ArtifactRef> artifacts;
    unsigned long long seed = 0;
    bool complete = true;

    bool all_pass() const;
};

/** Stage the divergent-sum construction: per stage, build and refine the
    rotation interval, certify the closeness chain at eps_n, then assemble
    the density ladder and the telescoped closeness evidence.  Throws
    PrereqViolated when the amplitude profile has a convergent sum. */
RunReport run_theorem1(int stages, const RunConfig& config = {});

/** The harmonic-amplitude chain (c_n = 1/n): invariant level sets of
    u = y + g, orbits trapped in their u-bands, the lacunarity of g, and the
    small-divisor table of the coboundary at an interior rotation number. */
RunReport run_theorem2(int stages, const RunConfig& config = {});

/** Stage the amplitude-driven chain against the first `family_size`
    observables: per stage, search an amplitude passing the feasibility
    chain for every y-dependent member, certify the curve averages, the
    Birkhoff windows and the iterate handoff to the next stage.  A probe
    stage beyond the last certified one backs the handoff checks.  Budget
    exhaustion yields a partial report (complete = false), never a silently
    green one. */
RunReport run_theorem3(int stages, int family_size, const RunConfig& config = {});

/// pointwise identity G_{m,n} = T_{1,m-1} G_{1,n} T_{1,m-1}^{-1} at random points
Certificate offset_family_check(const Schedule& sched, int m, int n,
                                int samples = 200,
                                unsigned long long seed = 0x5eed);

/// transported closeness |G_{1,n} - G_{1,m-1}|_0 <= M |G_{m,n} - R_alpha|_0
/// with the sampled Lipschitz constant M of T_{1,m-1}^{-1}; needs m >= 2
Certificate offset_transport_check(const Schedule& sched, int m, int n,
                                   double r = 0.0);

}  // namespace akconj
