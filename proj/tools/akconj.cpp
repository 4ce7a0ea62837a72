#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "akconj/errors.hpp"
#include "akconj/ergodic.hpp"
#include "akconj/report_io.hpp"
#include "akconj/scenarios.hpp"
#include "akconj/schedule.hpp"
#include "akconj/torusmaps.hpp"

using namespace akconj;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path);
    out << content;
}

Rational parse_rational(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rational(BigInt(text));
        return Rational(BigInt(text.substr(0, slash)), BigInt(text.substr(slash + 1)));
    } catch (const std::exception&) {
        throw ConfigError("cannot parse rational '" + text + "' (want p/q or an integer)");
    }
}

Rational golden_in(const Interval& I) {
    return I.lo() + 2 * I.half_width * Rational(BigInt(2654435769ULL), BigInt(1) << 32);
}

Variant parse_variant(const std::string& name) {
    if (name == "theorem1") return Variant::Theorem1;
    if (name == "theorem2") return Variant::Theorem2;
    if (name == "theorem3") return Variant::Theorem3;
    throw ConfigError("unknown variant '" + name + "'");
}

Observable parse_observable(const std::string& spec) {
    Observable f;
    f.label = spec;
    if (spec == "constant" || spec == "1") {
        f.terms.push_back({0, 0, Complex(1.0, 0.0)});
        return f;
    }
    auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw ConfigError("observable spec must be constant, cos:k,l, sin:k,l or e:k,l");
    std::string kind = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);
    auto comma = rest.find(',');
    long long k = 0, l = 0;
    try {
        k = std::stoll(rest.substr(0, comma));
        if (comma != std::string::npos) l = std::stoll(rest.substr(comma + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad frequency pair in observable spec '" + spec + "'");
    }
    if (kind == "cos") {
        f.terms.push_back({k, l, Complex(0.5, 0.0)});
        f.terms.push_back({-k, -l, Complex(0.5, 0.0)});
    } else if (kind == "sin") {
        f.terms.push_back({k, l, Complex(0.0, -0.5)});
        f.terms.push_back({-k, -l, Complex(0.0, 0.5)});
    } else if (kind == "e") {
        f.terms.push_back({k, l, Complex(1.0, 0.0)});
    } else {
        throw ConfigError("unknown observable kind '" + kind + "'");
    }
    return f;
}

struct BuildFlags {
    int stages = 2;
    int base = 10;
    std::string profile = "constant:1";
    double eps_base = 10.0;
    double r_base = 10.0;
    bool literal = false;
};

void add_build_flags(CLI::App* cmd, BuildFlags& bf) {
    cmd->add_option("--stages", bf.stages, "number of construction stages")
        ->check(CLI::Range(1, 64));
    cmd->add_option("--base", bf.base, "growth base b in the stage condition")
        ->check(CLI::Range(2, 1000000));
    cmd->add_option("--c", bf.profile,
                    "amplitude profile: constant:v, harmonic, geometric:r, lemma51");
    cmd->add_option("--eps-base", bf.eps_base, "per-stage target eps_n = eps_base^-(n+1)");
    cmd->add_option("--r-base", bf.r_base, "strip radius r_n = r_base^n");
    cmd->add_flag("--literal", bf.literal, "use the literal feasibility thresholds");
}

GrowthPolicy policy_of(const BuildFlags& bf) {
    GrowthPolicy pol;
    pol.base = bf.base;
    pol.c_profile = parse_profile(bf.profile);
    pol.eps_base = bf.eps_base;
    pol.r_base = bf.r_base;
    pol.literal_mode = bf.literal;
    return pol;
}

Schedule plain_schedule(const BuildFlags& bf) {
    Schedule sched;
    sched.policy = policy_of(bf);
    for (int n = 1; n <= bf.stages; ++n)
        sched.stages.push_back(build_stage(sched, sched.policy.c_profile.at(n)));
    return sched;
}

void print_stages(const Schedule& sched) {
    for (const auto& st : sched.stages)
        std::printf("stage %d: q=%s s=%s c=%.6g eps=%.3g half_width=%.3e\n", st.n,
                    st.q.str().c_str(), st.s.str().c_str(), st.c, st.eps,
                    to_double(st.interval.half_width));
}

int print_certs(const std::vector<Certificate>& certs) {
    int fails = 0;
    for (const auto& c : certs) {
        if (!c.pass) ++fails;
        std::printf("[%s] %-11s %s | %s < %s | margin %.4g%s%s\n", c.pass ? "PASS" : "FAIL",
                    c.condition.c_str(), c.detail.c_str(), c.lhs.c_str(), c.rhs.c_str(),
                    c.margin, c.log_scale ? " (log)" : "", c.rigorous ? "" : " (sampled)");
    }
    return fails;
}

int finish_run(RunReport& rep, RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("--out is required (or out_dir in --config)");
    emit_artifacts(rep, cfg);
    int fails = 0;
    for (const auto& c : rep.certificates)
        if (!c.pass) ++fails;
    std::printf("%zu certificates, %d failing; complete=%s\n", rep.certificates.size(), fails,
                rep.complete ? "yes" : "no");
    for (const auto& c : rep.certificates)
        if (!c.pass)
            std::printf("[FAIL] %-11s %s | %s < %s\n", c.condition.c_str(), c.detail.c_str(),
                        c.lhs.c_str(), c.rhs.c_str());
    std::printf("report: %s\n", (fs::path(cfg.out_dir) / "report.json").string().c_str());
    if (!rep.complete) return 3;
    return fails == 0 ? 0 : 1;
}

// flags the user actually passed override the config file; the rest keep
// whatever the file (or the default) says
RunConfig merge_config(CLI::App* cmd, const BuildFlags& bf, const std::string& config_file,
                       long long quad_budget, long long orbit_budget, int alpha_samples,
                       int z_grid, int sup_grid, const std::vector<double>& density_eps,
                       unsigned long long seed, const std::string& out) {
    RunConfig cfg;
    if (!config_file.empty()) cfg = config_from_json(slurp(config_file), cfg);
    auto set = [&](const char* name) { return cmd->count(name) > 0; };
    if (set("--base")) cfg.policy.base = bf.base;
    if (set("--c")) cfg.policy.c_profile = parse_profile(bf.profile);
    if (set("--eps-base")) cfg.policy.eps_base = bf.eps_base;
    if (set("--r-base")) cfg.policy.r_base = bf.r_base;
    if (set("--literal")) cfg.policy.literal_mode = bf.literal;
    if (set("--quad-budget")) cfg.quad_budget = quad_budget;
    if (set("--orbit-budget")) cfg.orbit_budget = orbit_budget;
    if (set("--alpha-samples")) cfg.alpha_samples = alpha_samples;
    if (set("--z-grid")) cfg.z_grid = z_grid;
    if (set("--sup-grid")) cfg.sup_grid = sup_grid;
    if (set("--density-eps")) cfg.density_eps = density_eps;
    if (set("--seed")) cfg.seed = seed;
    if (set("--out")) cfg.out_dir = out;
    return cfg;
}

int do_report_check(const std::string& dir);

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-stage conjugation schedules and their ergodic certificates"};
    app.require_subcommand(1);
    int rc = 0;

    // schedule: build the stage parameters and validate the growth conditions
    auto* sc = app.add_subcommand("schedule", "build a schedule and write it as JSON");
    BuildFlags sc_bf;
    add_build_flags(sc, sc_bf);
    std::string sc_out = "schedule.json";
    std::string sc_variant = "theorem1";
    sc->add_option("--out", sc_out, "output JSON path");
    sc->add_option("--variant", sc_variant, "validation variant: theorem1|theorem2|theorem3");
    sc->callback([&] {
        Schedule sched = plain_schedule(sc_bf);
        auto certs = validate_schedule(sched, parse_variant(sc_variant));
        print_stages(sched);
        int fails = print_certs(certs);
        spill(sc_out, schedule_json(sched, certs));
        std::printf("wrote %s\n", sc_out.c_str());
        rc = fails == 0 ? 0 : 1;
    });

    // verify: re-check a schedule file produced here (or edited by hand)
    auto* vf = app.add_subcommand("verify", "validate a schedule JSON file");
    std::string vf_file, vf_variant = "theorem1";
    vf->add_option("--schedule", vf_file, "schedule JSON path")->required();
    vf->add_option("--variant", vf_variant, "validation variant: theorem1|theorem2|theorem3");
    vf->callback([&] {
        Schedule sched = schedule_from_json(slurp(vf_file));
        auto certs = validate_schedule(sched, parse_variant(vf_variant));
        print_stages(sched);
        rc = print_certs(certs) == 0 ? 0 : 1;
    });

    // orbit: trace the closed skew form and dump a CSV
    auto* ob = app.add_subcommand("orbit", "trace an orbit of the final skew map");
    BuildFlags ob_bf;
    add_build_flags(ob, ob_bf);
    std::string ob_alpha, ob_out = "orbit.csv";
    long long ob_steps = 1024;
    double ob_x0 = 0.1376, ob_y0 = 0.5;
    ob->add_option("--alpha", ob_alpha, "rotation number p/q (default: interior point)");
    ob->add_option("--steps", ob_steps, "iterates to record")->check(CLI::Range(1LL, 10000000LL));
    ob->add_option("--x0", ob_x0, "start x");
    ob->add_option("--y0", ob_y0, "start y");
    ob->add_option("--out", ob_out, "output CSV path");
    ob->callback([&] {
        Schedule sched = plain_schedule(ob_bf);
        Rational alpha = ob_alpha.empty() ? golden_in(sched.stages.back().interval)
                                          : parse_rational(ob_alpha);
        TrigSeries g = g_series(sched, 1, ob_bf.stages);
        double a = to_double(alpha);
        std::string csv = "i,x,y\n";
        TorusPoint z = TorusPoint::at(ob_x0, ob_y0);
        char buf[96];
        for (long long i = 0; i <= ob_steps; ++i) {
            snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n", i, z.x, z.y);
            csv += buf;
            z = skew_apply(g, a, std::nullopt, z);
        }
        spill(ob_out, csv);
        std::printf("wrote %s (%lld steps at alpha = %s)\n", ob_out.c_str(), ob_steps,
                    rat_str(alpha).c_str());
        rc = 0;
    });

    // density: the orbit-window coverage evidence on its own
    auto* dn = app.add_subcommand("density", "check orbit-window density on a grid");
    BuildFlags dn_bf;
    add_build_flags(dn, dn_bf);
    double dn_eps = 0.5;
    long long dn_budget = 1'000'000;
    int dn_m = 0;
    std::string dn_alpha;
    dn->add_option("--eps", dn_eps, "window scale to resolve")->check(CLI::PositiveNumber);
    dn->add_option("--budget", dn_budget, "iterate budget");
    dn->add_option("--m", dn_m, "coarse stage (default: first with q_m >= 1/eps)");
    dn->add_option("--alpha", dn_alpha, "rotation number p/q (default: interior point)");
    dn->callback([&] {
        Schedule sched = plain_schedule(dn_bf);
        int m = dn_m;
        if (m <= 0) {
            m = dn_bf.stages;
            for (int j = 1; j <= dn_bf.stages; ++j)
                if (to_double(sched.stage(j).q) * dn_eps >= 1.0) {
                    m = j;
                    break;
                }
        }
        std::optional<Rational> alpha;
        if (!dn_alpha.empty()) alpha = parse_rational(dn_alpha);
        DensityReport rep = density_check(m, dn_bf.stages, sched, dn_eps, dn_budget, alpha);
        std::printf("eps=%g m=%d n=%d grid=%dx%d fraction=%.4f min_oscillation=%.4g "
                    "iterates=%lld\n",
                    rep.eps, rep.m, rep.n, rep.grid_side, rep.grid_side, rep.grid_fraction,
                    rep.min_oscillation, rep.iterates_used);
        rc = print_certs(rep.certs) == 0 ? 0 : 1;
    });

    // measure: Birkhoff averages of one observable against the curve reference
    auto* ms = app.add_subcommand("measure", "average an observable along an orbit");
    BuildFlags ms_bf;
    add_build_flags(ms, ms_bf);
    std::string ms_obs = "cos:1,0", ms_alpha;
    long long ms_iters = 100'000, ms_quad = QUAD_BUDGET;
    double ms_x0 = 0.1376, ms_y0 = 0.5;
    ms->add_option("--obs", ms_obs, "observable: constant, cos:k,l, sin:k,l, e:k,l");
    ms->add_option("--iters", ms_iters, "orbit length")->check(CLI::Range(1LL, 2000000000LL));
    ms->add_option("--alpha", ms_alpha, "rotation number p/q (default: interior point)");
    ms->add_option("--x0", ms_x0, "start x");
    ms->add_option("--y0", ms_y0, "start y");
    ms->add_option("--quad-budget", ms_quad, "quadrature budget for the reference");
    ms->callback([&] {
        Schedule sched = plain_schedule(ms_bf);
        Observable f = parse_observable(ms_obs);
        Rational alpha = ms_alpha.empty() ? golden_in(sched.stages.back().interval)
                                          : parse_rational(ms_alpha);
        TorusPoint z0 = TorusPoint::at(ms_x0, ms_y0);
        Complex ref = curve_reference(sched, ms_bf.stages, f, z0, ms_quad);
        SkewSystem sys = skew_system(sched, ms_bf.stages, alpha);
        BirkhoffResult res = birkhoff_average(sys, f, z0, ms_iters, ref);
        std::printf("reference = %.12g%+.12gi at alpha = %s\n", ref.real(), ref.imag(),
                    rat_str(alpha).c_str());
        for (const auto& cp : res.checkpoints)
            std::printf("k=%-12lld avg = %.12g%+.12gi  deviation = %.6g\n", cp.k,
                        cp.average.real(), cp.average.imag(), cp.deviation);
        double final_dev = res.checkpoints.empty() ? 0.0 : res.checkpoints.back().deviation;
        rc = std::isfinite(final_dev) ? 0 : 1;
    });

    // the three scenario runners share their flag set
    struct RunnerFlags {
        BuildFlags bf;
        long long quad_budget = QUAD_BUDGET;
        long long orbit_budget = 1'000'000;
        int alpha_samples = 20;
        int z_grid = 8;
        int sup_grid = 41;
        std::vector<double> density_eps;
        unsigned long long seed = 0x5eed;
        std::string out, config_file;
        int family = 3;
    };
    auto add_runner_flags = [](CLI::App* cmd, RunnerFlags& rf) {
        add_build_flags(cmd, rf.bf);
        cmd->add_option("--quad-budget", rf.quad_budget, "quadrature point budget");
        cmd->add_option("--orbit-budget", rf.orbit_budget, "iterate budget per average");
        cmd->add_option("--alpha-samples", rf.alpha_samples, "rotation numbers per interval");
        cmd->add_option("--z-grid", rf.z_grid, "per-axis start-point grid");
        cmd->add_option("--sup-grid", rf.sup_grid, "per-axis grid for sampled sup checks");
        cmd->add_option("--density-eps", rf.density_eps, "density ladder scales");
        cmd->add_option("--seed", rf.seed, "seed for sampled checks");
        cmd->add_option("--out", rf.out, "run directory for the artifacts");
        cmd->add_option("--config", rf.config_file, "JSON config file (flags override it)");
    };

    auto* t1 = app.add_subcommand("theorem1", "divergent-sum chain: density and closeness");
    RunnerFlags t1f;
    add_runner_flags(t1, t1f);
    t1->callback([&] {
        RunConfig cfg = merge_config(t1, t1f.bf, t1f.config_file, t1f.quad_budget,
                                     t1f.orbit_budget, t1f.alpha_samples, t1f.z_grid,
                                     t1f.sup_grid, t1f.density_eps, t1f.seed, t1f.out);
        RunReport rep = run_theorem1(t1f.bf.stages, cfg);
        rc = finish_run(rep, cfg);
    });

    auto* t2 = app.add_subcommand("theorem2", "harmonic chain: invariant bands and coboundary");
    RunnerFlags t2f;
    add_runner_flags(t2, t2f);
    t2->callback([&] {
        RunConfig cfg = merge_config(t2, t2f.bf, t2f.config_file, t2f.quad_budget,
                                     t2f.orbit_budget, t2f.alpha_samples, t2f.z_grid,
                                     t2f.sup_grid, t2f.density_eps, t2f.seed, t2f.out);
        RunReport rep = run_theorem2(t2f.bf.stages, cfg);
        rc = finish_run(rep, cfg);
    });

    auto* t3 = app.add_subcommand("theorem3", "amplitude-driven chain: curve averages");
    RunnerFlags t3f;
    add_runner_flags(t3, t3f);
    t3->add_option("--family", t3f.family, "observable family size")->check(CLI::Range(1, 64));
    t3->callback([&] {
        RunConfig cfg = merge_config(t3, t3f.bf, t3f.config_file, t3f.quad_budget,
                                     t3f.orbit_budget, t3f.alpha_samples, t3f.z_grid,
                                     t3f.sup_grid, t3f.density_eps, t3f.seed, t3f.out);
        RunReport rep = run_theorem3(t3f.bf.stages, t3f.family, cfg);
        rc = finish_run(rep, cfg);
    });

    auto* rp = app.add_subcommand("report", "re-check a finished run directory");
    std::string rp_dir;
    rp->add_option("--dir", rp_dir, "run directory holding report.json")->required();
    rp->callback([&] { rc = do_report_check(rp_dir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const BudgetExceeded& e) {
        std::fprintf(stderr, "budget exhausted: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return rc;
}

namespace {

// margin/verdict consistency, schedule revalidation, artifact round-trips
int do_report_check(const std::string& dir) {
    using ojson = nlohmann::ordered_json;
    ojson j = ojson::parse(slurp((fs::path(dir) / "report.json").string()));
    int issues = 0;
    auto flag = [&](const std::string& what) {
        std::printf("[ISSUE] %s\n", what.c_str());
        ++issues;
    };

    bool recomputed_all_pass = true;
    for (const auto& c : j.at("certificates")) {
        bool pass = c.at("pass").get<bool>();
        if (!pass) recomputed_all_pass = false;
        if (!c.at("margin").is_number()) continue;
        double margin = c.at("margin").get<double>();
        std::string cond = c.at("condition").get<std::string>();
        if (pass && margin < 0) flag(cond + ": passing certificate with negative margin");
        if (!pass && margin > 0) flag(cond + ": failing certificate with positive margin");
        if (!c.at("log_scale").get<bool>() && !c.at("exact").get<bool>()) {
            const std::string ls = c.at("lhs").get<std::string>();
            const std::string rs = c.at("rhs").get<std::string>();
            char* end = nullptr;
            double lv = std::strtod(ls.c_str(), &end);
            bool lok = end && *end == '\0' && std::isfinite(lv);
            double rv = std::strtod(rs.c_str(), &end);
            bool rok = end && *end == '\0' && std::isfinite(rv);
            // %.12g rendering can flip the comparison only inside this band
            double tol = 1e-9 * std::max({1.0, std::fabs(lv), std::fabs(rv)});
            if (lok && rok && std::fabs(rv - lv) > tol && (lv < rv) != pass)
                flag(cond + ": rendered sides contradict the verdict");
        }
    }
    if (j.at("all_pass").get<bool>() != recomputed_all_pass)
        flag("all_pass flag disagrees with the certificate list");

    Schedule sched = schedule_from_json(j.at("schedule").dump());
    std::string variant = j.at("variant").get<std::string>();
    // theorem3 schedules are validated structurally: their intervals are
    // recentered inside the member windows, which the variant checks allow
    Variant v = variant == "theorem2" ? Variant::Theorem2 : Variant::Theorem1;
    for (const auto& c : validate_schedule(sched, v))
        if (!c.pass) flag(c.condition + ": schedule fails revalidation (" + c.detail + ")");

    for (const auto& a : j.at("artifacts")) {
        fs::path p = fs::path(dir) / a.at("path").get<std::string>();
        if (!fs::exists(p)) {
            flag("missing artifact " + p.string());
            continue;
        }
        if (a.at("path").get<std::string>() == "orbit.csv") {
            std::istringstream in(slurp(p.string()));
            std::string line;
            std::getline(in, line);
            if (line != "i,x,y") flag("orbit.csv: unexpected header '" + line + "'");
            long long rows = 0;
            while (std::getline(in, line)) {
                auto c1 = line.find(','), c2 = line.rfind(',');
                if (c1 == std::string::npos || c2 == c1) {
                    flag("orbit.csv: malformed row " + std::to_string(rows));
                    break;
                }
                double x = std::strtod(line.c_str() + c1 + 1, nullptr);
                double y = std::strtod(line.c_str() + c2 + 1, nullptr);
                char buf[96];
                snprintf(buf, sizeof buf, "%s,%.17g,%.17g", line.substr(0, c1).c_str(), x, y);
                if (line != buf) {
                    flag("orbit.csv: row " + std::to_string(rows) + " does not round-trip");
                    break;
                }
                if (x < 0 || x >= 1 || y < 0 || y >= 1) {
                    flag("orbit.csv: row " + std::to_string(rows) + " leaves the torus");
                    break;
                }
                ++rows;
            }
            if (rows < 2) flag("orbit.csv: fewer than 2 data rows");
        }
    }

    std::printf("report check: %zu certificates, %d issue%s\n",
                j.at("certificates").size(), issues, issues == 1 ? "" : "s");
    return issues == 0 ? 0 : 1;
}

}  // namespace
