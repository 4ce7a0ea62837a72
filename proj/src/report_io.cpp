#include "akconj/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "akconj/errors.hpp"
#include "akconj/torusmaps.hpp"

namespace akconj {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// non-finite doubles have no JSON number form; keep them readable
ojson jnum(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

std::string fmt17(double v) {
    char buf[40];
    snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Theorem1: return "theorem1";
        case Variant::Theorem2: return "theorem2";
        case Variant::Theorem3: return "theorem3";
    }
    return "theorem1";
}

ojson interval_json(const Interval& I) {
    return ojson{{"center", rat_str(I.center)}, {"half_width", rat_str(I.half_width)}};
}

Rational rat_from(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(BigInt(text));
    return Rational(BigInt(text.substr(0, slash)), BigInt(text.substr(slash + 1)));
}

Interval interval_from(const ojson& j) {
    Interval I;
    I.center = rat_from(j.at("center").get<std::string>());
    I.half_width = rat_from(j.at("half_width").get<std::string>());
    return I;
}

ojson cert_json(const Certificate& c) {
    ojson j;
    j["condition"] = c.condition;
    j["detail"] = c.detail;
    j["lhs"] = c.lhs;
    j["rhs"] = c.rhs;
    j["margin"] = jnum(c.margin);
    j["log_scale"] = c.log_scale;
    j["exact"] = c.exact;
    j["rigorous"] = c.rigorous;
    j["pass"] = c.pass;
    return j;
}

ojson complex_json(const Complex& z) { return ojson::array({jnum(z.real()), jnum(z.imag())}); }

ojson schedule_jobj(const Schedule& sched) {
    ojson pol;
    pol["base"] = sched.policy.base;
    pol["c_profile"] = sched.policy.c_profile.str();
    pol["literal_mode"] = sched.policy.literal_mode;
    pol["eps_base"] = jnum(sched.policy.eps_base);
    pol["r_base"] = jnum(sched.policy.r_base);
    pol["l51_root_factor"] = jnum(sched.policy.l51_root_factor);
    pol["l51_slog_factor"] = jnum(sched.policy.l51_slog_factor);
    pol["l51_s_min"] = jnum(sched.policy.l51_s_min);

    ojson stages = ojson::array();
    for (const auto& st : sched.stages) {
        ojson s;
        s["n"] = st.n;
        s["p"] = st.p.str();
        s["q"] = st.q.str();
        s["s"] = st.s.str();
        s["c"] = jnum(st.c);
        s["eps"] = jnum(st.eps);
        s["r"] = jnum(st.r);
        s["interval"] = interval_json(st.interval);
        stages.push_back(std::move(s));
    }
    return ojson{{"policy", std::move(pol)}, {"stages", std::move(stages)}};
}

ojson theorem1_jobj(const Theorem1Evidence& ev) {
    ojson dens = ojson::array();
    for (const auto& d : ev.density) {
        ojson r;
        r["eps"] = jnum(d.eps);
        r["m"] = d.m;
        r["n"] = d.report.n;
        r["grid_side"] = d.report.grid_side;
        r["grid_fraction"] = jnum(d.report.grid_fraction);
        r["min_oscillation"] = jnum(d.report.min_oscillation);
        r["oscillation_pass"] = d.report.oscillation_pass;
        r["iterates_used"] = d.report.iterates_used;
        dens.push_back(std::move(r));
    }
    ojson close = ojson::array();
    for (const auto& e : ev.closeness) {
        ojson r;
        r["n"] = e.n;
        r["tau"] = e.tau.str();
        r["bound"] = jnum(e.bound);
        r["witness"] = jnum(e.witness);
        r["witness_iterates"] = e.witness_iterates;
        close.push_back(std::move(r));
    }
    return ojson{{"density", std::move(dens)}, {"closeness", std::move(close)}};
}

ojson theorem2_jobj(const Theorem2Evidence& ev) {
    ojson j;
    j["u_residual"] = jnum(ev.u_residual);
    j["band_orbits"] = ev.band_orbits;
    j["band_escapes"] = ev.band_escapes;
    j["band_drift"] = jnum(ev.band_drift);
    ojson lac;
    lac["lambda"] = jnum(ev.lacunarity.lambda);
    lac["ratios"] = ojson::array();
    for (double r : ev.lacunarity.ratios) lac["ratios"].push_back(jnum(r));
    lac["partial_sums"] = ojson::array();
    for (double r : ev.lacunarity.partial_sums) lac["partial_sums"].push_back(jnum(r));
    lac["oscillation"] = ojson::array();
    for (double r : ev.lacunarity.oscillation) lac["oscillation"].push_back(jnum(r));
    j["lacunarity"] = std::move(lac);
    j["coboundary_alpha"] = rat_str(ev.coboundary_alpha);
    ojson cob;
    cob["mean"] = complex_json(ev.coboundary.mean);
    cob["entries"] = ojson::array();
    for (const auto& e : ev.coboundary.entries) {
        ojson r;
        r["k"] = e.k.str();
        r["phi"] = complex_json(e.phi);
        r["g"] = complex_json(e.g);
        r["divisor"] = jnum(e.divisor);
        cob["entries"].push_back(std::move(r));
    }
    cob["partial_sums"] = ojson::array();
    for (double r : ev.coboundary.partial_sums) cob["partial_sums"].push_back(jnum(r));
    j["coboundary"] = std::move(cob);
    j["resonance_message"] = ev.resonance_message;
    return j;
}

ojson theorem3_jobj(const Theorem3Evidence& ev) {
    ojson j;
    j["family"] = ev.family;
    j["complete"] = ev.complete;
    j["stop_reason"] = ev.stop_reason;
    j["stages"] = ojson::array();
    for (const auto& st : ev.stages) {
        ojson s;
        s["n"] = st.n;
        s["eps"] = jnum(st.eps);
        s["c"] = jnum(st.c);
        s["s"] = st.s.str();
        s["q"] = st.q.str();
        s["a"] = st.a;
        s["tau"] = st.tau;
        s["carry_tau"] = st.carry_tau.str();
        s["window"] = interval_json(st.window);
        s["members"] = ojson::array();
        for (const auto& m : st.members) {
            ojson r;
            r["label"] = m.label;
            r["k"] = m.k;
            r["l"] = m.l;
            r["x_only"] = m.x_only;
            r["window_K"] = m.window_K;
            r["a"] = m.a;
            r["tau"] = m.tau;
            r["window"] = interval_json(m.window);
            r["dev62"] = jnum(m.dev62);
            r["dev63"] = jnum(m.dev63);
            r["dev64"] = jnum(m.dev64);
            r["dev65"] = jnum(m.dev65);
            r["part_prev"] = jnum(m.part_prev);
            r["part_gap"] = jnum(m.part_gap);
            r["part_mean"] = jnum(m.part_mean);
            s["members"].push_back(std::move(r));
        }
        j["stages"].push_back(std::move(s));
    }
    return j;
}

ojson report_jobj(const RunReport& rep) {
    ojson j;
    j["format"] = "akconj-report/1";
    j["variant"] = variant_name(rep.variant);
    j["seed"] = rep.seed;
    j["complete"] = rep.complete;
    j["all_pass"] = rep.all_pass();
    j["schedule"] = schedule_jobj(rep.schedule);
    j["certificates"] = ojson::array();
    for (const auto& c : rep.certificates) j["certificates"].push_back(cert_json(c));
    j["norm_chain"] = ojson::array();
    for (const auto& e : rep.norm_chain) {
        ojson r;
        r["n"] = e.n;
        r["eps"] = jnum(e.eps);
        r["half_width"] = rat_str(e.half_width);
        r["bound"] = jnum(e.bound);
        r["sampled"] = jnum(e.sampled);
        j["norm_chain"].push_back(std::move(r));
    }
    if (rep.theorem1) j["theorem1"] = theorem1_jobj(*rep.theorem1);
    if (rep.theorem2) j["theorem2"] = theorem2_jobj(*rep.theorem2);
    if (rep.theorem3) j["theorem3"] = theorem3_jobj(*rep.theorem3);
    j["artifacts"] = ojson::array();
    for (const auto& a : rep.artifacts)
        j["artifacts"].push_back(ojson{{"kind", a.kind}, {"path", a.path}, {"role", a.role}});
    return j;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

std::string schedule_csv(const Schedule& sched) {
    std::string out = "n,p,q,s,c,eps,r,center,half_width\n";
    for (const auto& st : sched.stages) {
        out += std::to_string(st.n) + ',' + st.p.str() + ',' + st.q.str() + ',' + st.s.str() +
               ',' + fmt17(st.c) + ',' + fmt17(st.eps) + ',' + fmt17(st.r) + ',' +
               rat_str(st.interval.center) + ',' + rat_str(st.interval.half_width) + '\n';
    }
    return out;
}

std::string certificates_csv(const std::vector<Certificate>& certs) {
    std::string out = "condition,detail,lhs,rhs,margin,log_scale,exact,rigorous,pass\n";
    for (const auto& c : certs) {
        out += csv_escape(c.condition) + ',' + csv_escape(c.detail) + ',' + csv_escape(c.lhs) +
               ',' + csv_escape(c.rhs) + ',' + fmt17(c.margin) + ',' +
               (c.log_scale ? "1" : "0") + ',' + (c.exact ? "1" : "0") + ',' +
               (c.rigorous ? "1" : "0") + ',' + (c.pass ? "1" : "0") + '\n';
    }
    return out;
}

std::string norm_chain_csv(const std::vector<NormChainEntry>& chain) {
    std::string out = "n,eps,half_width,bound,sampled\n";
    for (const auto& e : chain) {
        out += std::to_string(e.n) + ',' + fmt17(e.eps) + ',' + rat_str(e.half_width) + ',' +
               fmt17(e.bound) + ',' + fmt17(e.sampled) + '\n';
    }
    return out;
}

std::string orbit_csv(const Schedule& sched, long long budget) {
    const int n = static_cast<int>(sched.stages.size());
    TrigSeries g = g_series(sched, 1, n);
    const Interval& I = sched.stages.back().interval;
    Rational alpha_r =
        I.lo() + 2 * I.half_width * Rational(BigInt(2654435769ULL), BigInt(1) << 32);
    double alpha = to_double(alpha_r);
    long long steps = std::min<long long>(4096, std::max<long long>(16, budget));

    std::string out = "i,x,y\n";
    // exact x backing keeps the shear meaningful past double-mantissa frequencies
    TorusPoint z = TorusPoint::at(Rational(1376, 10000), 0.5);
    for (long long i = 0; i <= steps; ++i) {
        out += std::to_string(i) + ',' + fmt17(z.x) + ',' + fmt17(z.y) + '\n';
        z = skew_apply(g, alpha, alpha_r, z);
    }
    return out;
}

std::string curve_svg(const Schedule& sched) {
    const int n = static_cast<int>(sched.stages.size());
    TrigSeries g = g_series(sched, 1, n);
    const int W = 800, H = 420, ML = 14, MR = 14, MT = 34, MB = 16;
    const int samples = 1024;

    std::vector<double> ys(samples + 1);
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i <= samples; ++i) {
        ys[i] = 0.5 - g.eval(Rational(i, samples));
        lo = std::min(lo, ys[i]);
        hi = std::max(hi, ys[i]);
    }
    if (hi - lo < 1e-12) {
        hi += 0.5;
        lo -= 0.5;
    }

    char buf[160];
    std::string out;
    snprintf(buf, sizeof buf,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
             "viewBox=\"0 0 %d %d\">\n",
             W, H, W, H);
    out += buf;
    snprintf(buf, sizeof buf, "<rect width=\"%d\" height=\"%d\" fill=\"#ffffff\"/>\n", W, H);
    out += buf;
    snprintf(buf, sizeof buf,
             "<text x=\"%d\" y=\"22\" font-family=\"monospace\" font-size=\"14\" "
             "fill=\"#333333\">invariant curve y = y0 - g(x), stages 1..%d</text>\n",
             ML, n);
    out += buf;
    double mid = MT + (H - MT - MB) * (hi - 0.5) / (hi - lo);
    if (0.5 >= lo && 0.5 <= hi) {
        snprintf(buf, sizeof buf,
                 "<line x1=\"%d\" y1=\"%.2f\" x2=\"%d\" y2=\"%.2f\" stroke=\"#bbbbbb\" "
                 "stroke-dasharray=\"4 4\"/>\n",
                 ML, mid, W - MR, mid);
        out += buf;
    }
    out += "<polyline fill=\"none\" stroke=\"#2563eb\" stroke-width=\"1.2\" points=\"";
    for (int i = 0; i <= samples; ++i) {
        double px = ML + static_cast<double>(W - ML - MR) * i / samples;
        double py = MT + (H - MT - MB) * (hi - ys[i]) / (hi - lo);
        snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px, py);
        out += buf;
    }
    out += "\"/>\n</svg>\n";
    return out;
}

}  // namespace

std::string report_json(const RunReport& report) { return report_jobj(report).dump(2) + "\n"; }

std::string schedule_json(const Schedule& sched, const std::vector<Certificate>& certificates) {
    ojson j;
    j["format"] = "akconj-schedule/1";
    j["schedule"] = schedule_jobj(sched);
    j["certificates"] = ojson::array();
    for (const auto& c : certificates) j["certificates"].push_back(cert_json(c));
    return j.dump(2) + "\n";
}

Schedule schedule_from_json(const std::string& text) {
    ojson j = ojson::parse(text);
    if (j.contains("schedule")) j = j.at("schedule");

    Schedule sched;
    const ojson& pol = j.at("policy");
    sched.policy.base = pol.at("base").get<int>();
    sched.policy.c_profile = parse_profile(pol.at("c_profile").get<std::string>());
    if (pol.contains("literal_mode")) sched.policy.literal_mode = pol.at("literal_mode").get<bool>();
    if (pol.contains("eps_base")) sched.policy.eps_base = pol.at("eps_base").get<double>();
    if (pol.contains("r_base")) sched.policy.r_base = pol.at("r_base").get<double>();
    if (pol.contains("l51_root_factor"))
        sched.policy.l51_root_factor = pol.at("l51_root_factor").get<double>();
    if (pol.contains("l51_slog_factor"))
        sched.policy.l51_slog_factor = pol.at("l51_slog_factor").get<double>();
    if (pol.contains("l51_s_min")) sched.policy.l51_s_min = pol.at("l51_s_min").get<double>();

    for (const ojson& s : j.at("stages")) {
        StageParams st;
        st.n = s.at("n").get<int>();
        st.p = BigInt(s.at("p").get<std::string>());
        st.q = BigInt(s.at("q").get<std::string>());
        st.s = BigInt(s.at("s").get<std::string>());
        st.c = s.at("c").get<double>();
        st.eps = s.at("eps").get<double>();
        st.r = s.at("r").get<double>();
        st.interval = interval_from(s.at("interval"));
        sched.stages.push_back(std::move(st));
    }
    return sched;
}

RunConfig config_from_json(const std::string& text, RunConfig base) {
    ojson j = ojson::parse(text);
    for (const auto& [key, val] : j.items()) {
        if (key == "base") base.policy.base = val.get<int>();
        else if (key == "c" || key == "c_profile")
            base.policy.c_profile = parse_profile(val.get<std::string>());
        else if (key == "literal_mode") base.policy.literal_mode = val.get<bool>();
        else if (key == "eps_base") base.policy.eps_base = val.get<double>();
        else if (key == "r_base") base.policy.r_base = val.get<double>();
        else if (key == "l51_root_factor") base.policy.l51_root_factor = val.get<double>();
        else if (key == "l51_slog_factor") base.policy.l51_slog_factor = val.get<double>();
        else if (key == "l51_s_min") base.policy.l51_s_min = val.get<double>();
        else if (key == "quad_budget") base.quad_budget = val.get<long long>();
        else if (key == "orbit_budget") base.orbit_budget = val.get<long long>();
        else if (key == "alpha_samples") base.alpha_samples = val.get<int>();
        else if (key == "z_grid") base.z_grid = val.get<int>();
        else if (key == "sup_grid") base.sup_grid = val.get<int>();
        else if (key == "density_eps") base.density_eps = val.get<std::vector<double>>();
        else if (key == "seed") base.seed = val.get<unsigned long long>();
        else if (key == "out_dir") base.out_dir = val.get<std::string>();
        else if (key == "emit_csv") base.emit_csv = val.get<bool>();
        else if (key == "emit_svg") base.emit_svg = val.get<bool>();
        else throw std::runtime_error("unknown config key: " + key);
    }
    return base;
}

void emit_artifacts(RunReport& report, const RunConfig& config) {
    if (config.out_dir.empty())
        throw PrereqViolated("emit_artifacts: config.out_dir is not set");
    fs::path dir(config.out_dir);
    fs::create_directories(dir);

    report.artifacts.clear();
    auto put = [&](const std::string& kind, const std::string& name, const std::string& role,
                   const std::string& content) {
        atomic_write(dir / name, content);
        report.artifacts.push_back({kind, name, role});
    };

    if (config.emit_csv) {
        put("csv", "schedule.csv", "stage parameters", schedule_csv(report.schedule));
        put("csv", "certificates.csv", "checked inequalities",
            certificates_csv(report.certificates));
        if (!report.norm_chain.empty())
            put("csv", "norm_chain.csv", "closeness chain per stage",
                norm_chain_csv(report.norm_chain));
        if (!report.schedule.stages.empty())
            put("csv", "orbit.csv", "sampled orbit of the last stage map",
                orbit_csv(report.schedule, config.orbit_budget));
    }
    if (config.emit_svg && !report.schedule.stages.empty())
        put("svg", "curve.svg", "invariant curve sketch", curve_svg(report.schedule));

    report.artifacts.push_back({"json", "report.json", "full certified run record"});
    atomic_write(dir / "report.json", report_json(report));
}

}  // namespace akconj
