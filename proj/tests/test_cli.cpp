#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "akconj/report_io.hpp"

using namespace akconj;
namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

// ctest runs us from the build directory, next to the binary
std::string cli_path() {
    if (const char* env = std::getenv("AKCONJ_BIN")) return env;
    return "./akconj";
}

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    CliResult r;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("schedule subcommand builds the documented two-stage chain") {
    fs::path dir = fresh_dir("akconj_cli_schedule");
    auto r = run_cli("schedule --stages 2 --base 10 --c constant:1 --out " +
                     (dir / "schedule.json").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("stage 2") != std::string::npos);

    njson j = njson::parse(slurp(dir / "schedule.json"));
    CHECK(j["schedule"]["stages"][0]["q"] == "4");
    CHECK(j["schedule"]["stages"][1]["q"] == "40016");

    Schedule sched = schedule_from_json(slurp(dir / "schedule.json"));
    CHECK(sched.stage(2).q == 40016);
    fs::remove_all(dir);
}

TEST_CASE("verify passes the emitted schedule and fails a tampered q") {
    fs::path dir = fresh_dir("akconj_cli_verify");
    fs::path good = dir / "schedule.json";
    REQUIRE(run_cli("schedule --stages 2 --base 10 --out " + good.string()).code == 0);
    CHECK(run_cli("verify --schedule " + good.string()).code == 0);

    njson j = njson::parse(slurp(good));
    j["schedule"]["stages"][1]["q"] = "12";
    fs::path bad = dir / "bad.json";
    std::ofstream(bad) << j.dump(2);
    auto r = run_cli("verify --schedule " + bad.string());
    CHECK(r.code == 1);
    CHECK(r.out.find("[FAIL]") != std::string::npos);
    CHECK(r.out.find("(3.2)") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("orbit subcommand writes the requested number of rows") {
    fs::path dir = fresh_dir("akconj_cli_orbit");
    fs::path csv = dir / "orbit.csv";
    auto r = run_cli("orbit --stages 1 --base 10 --steps 64 --out " + csv.string());
    CHECK(r.code == 0);
    std::istringstream in(slurp(csv));
    std::string line;
    int lines = 0;
    std::getline(in, line);
    CHECK(line == "i,x,y");
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 65);
    fs::remove_all(dir);
}

TEST_CASE("density subcommand certifies coverage at the interior point") {
    auto r = run_cli("density --stages 2 --base 10 --eps 0.5 --budget 200000");
    CHECK(r.code == 0);
    CHECK(r.out.find("fraction=1.0000") != std::string::npos);
}

TEST_CASE("measure subcommand prints doubling checkpoints") {
    auto r = run_cli("measure --stages 1 --base 10 --obs cos:1,0 --iters 4096");
    CHECK(r.code == 0);
    CHECK(r.out.find("reference =") != std::string::npos);
    CHECK(r.out.find("deviation") != std::string::npos);
}

TEST_CASE("theorem1 run directory validates under the report subcommand") {
    fs::path dir = fresh_dir("akconj_cli_t1");
    auto r = run_cli("theorem1 --stages 2 --out " + (dir / "run").string());
    CHECK(r.code == 0);
    CHECK(r.out.find("0 failing") != std::string::npos);
    CHECK(fs::exists(dir / "run" / "report.json"));
    CHECK(fs::exists(dir / "run" / "curve.svg"));

    auto chk = run_cli("report --dir " + (dir / "run").string());
    CHECK(chk.code == 0);
    CHECK(chk.out.find("0 issues") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("report subcommand flags a tampered verdict") {
    fs::path dir = fresh_dir("akconj_cli_tamper");
    REQUIRE(run_cli("theorem1 --stages 1 --out " + (dir / "run").string()).code == 0);

    fs::path rj = dir / "run" / "report.json";
    njson j = njson::parse(slurp(rj));
    j["certificates"][0]["pass"] = !j["certificates"][0]["pass"].get<bool>();
    std::ofstream(rj) << j.dump(2);

    auto r = run_cli("report --dir " + (dir / "run").string());
    CHECK(r.code == 1);
    CHECK(r.out.find("[ISSUE]") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("identical theorem runs produce byte-identical reports") {
    fs::path dir = fresh_dir("akconj_cli_repro");
    REQUIRE(run_cli("theorem1 --stages 2 --out " + (dir / "a").string()).code == 0);
    REQUIRE(run_cli("theorem1 --stages 2 --out " + (dir / "b").string()).code == 0);
    CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
    fs::remove_all(dir);
}

TEST_CASE("theorem3 run records the observable family") {
    fs::path dir = fresh_dir("akconj_cli_t3");
    auto r = run_cli("theorem3 --stages 1 --family 3 --out " + (dir / "run").string());
    CHECK(r.code == 0);
    njson j = njson::parse(slurp(dir / "run" / "report.json"));
    CHECK(j["variant"] == "theorem3");
    CHECK(j["theorem3"]["family"].size() == 3);
    CHECK(j["theorem3"]["stages"][0]["members"].size() == 3);
    CHECK(j["complete"] == true);
    fs::remove_all(dir);
}

TEST_CASE("config file drives a run and explicit flags override it") {
    fs::path dir = fresh_dir("akconj_cli_config");
    std::ofstream(dir / "cfg.json") << R"({"base": 2, "density_eps": [0.5], "out_dir": ")" +
                                           (dir / "run1").string() + R"("})";
    auto r1 = run_cli("theorem1 --stages 2 --config " + (dir / "cfg.json").string());
    CHECK(r1.code == 0);
    njson j1 = njson::parse(slurp(dir / "run1" / "report.json"));
    CHECK(j1["schedule"]["policy"]["base"] == 2);

    auto r2 = run_cli("theorem1 --stages 2 --config " + (dir / "cfg.json").string() +
                      " --base 10 --out " + (dir / "run2").string());
    CHECK(r2.code == 0);
    njson j2 = njson::parse(slurp(dir / "run2" / "report.json"));
    CHECK(j2["schedule"]["policy"]["base"] == 10);
    fs::remove_all(dir);
}

TEST_CASE("usage and config errors exit with code 2") {
    CHECK(run_cli("schedule --stages 0").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("theorem1 --stages 2").code == 2);   // no --out anywhere
    CHECK(run_cli("theorem1 --stages 2 --config /nonexistent.json --out /tmp/x").code == 2);
    CHECK(run_cli("measure --stages 1 --obs tan:1,0").code == 2);
    CHECK(run_cli("verify --schedule /nonexistent.json").code == 2);
    CHECK(run_cli("").code == 2);  // a subcommand is required
}

TEST_CASE("exhausted budgets exit with code 3") {
    fs::path dir = fresh_dir("akconj_cli_budget");
    auto r = run_cli("theorem3 --stages 1 --family 5 --orbit-budget 4096 --out " +
                     (dir / "run").string());
    CHECK(r.code == 3);
    CHECK(r.out.find("complete=no") != std::string::npos);
    fs::remove_all(dir);
}
