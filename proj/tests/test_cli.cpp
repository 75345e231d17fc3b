#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
    int status;
    std::string out;
};

Run cli(const std::string& args) {
    std::string cmd = std::string(CRNLAB_CLI) + " " + args + " 2>&1";
    Run r{0, ""};
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
    int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("crnlab_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("help and usage errors") {
    auto h = cli("--help");
    CHECK(h.status == 0);
    CHECK(h.out.find("simulate") != std::string::npos);
    CHECK(h.out.find("classify") != std::string::npos);
    auto s = cli("simulate --help");
    CHECK(s.status == 0);
    CHECK(s.out.find("--jumps") != std::string::npos);
    CHECK(cli("").status == 1);
    CHECK(cli("frobnicate").status == 1);
    CHECK(cli("simulate --net nosuch").status == 1);
    CHECK(cli("simulate --x0 1,2,3").status == 1);
    CHECK(cli("lyapunov --net crn2").status == 1);
}

TEST_CASE("simulate") {
    auto d = scratch("sim");
    auto r = cli("simulate --net crn0 --x0 0,0 --jumps 0 --out-dir " + d.string());
    CHECK(r.status == 0);
    CHECK(slurp(d / "trajectory.csv") == "t,x1,x2\n0,0,0\n");

    auto a = scratch("sim_a"), b = scratch("sim_b");
    CHECK(cli("simulate --net crn1 --seed 9 --x0 5,5 --jumps 2000 --out-dir " + a.string()).status == 0);
    CHECK(cli("simulate --net crn1 --seed 9 --x0 5,5 --jumps 2000 --out-dir " + b.string()).status == 0);
    auto ta = slurp(a / "trajectory.csv");
    CHECK(ta == slurp(b / "trajectory.csv"));
    CHECK(count_lines(ta) == 2002);

    // network file
    auto c = scratch("sim_json");
    CHECK(cli("simulate --net " + std::string(CRNLAB_DATA) + "/crn0.json --seed 9 --x0 5,5 --jumps 50 --out-dir " +
              c.string())
              .status == 0);
    auto e = scratch("sim_builtin");
    CHECK(cli("simulate --net crn0 --seed 9 --x0 5,5 --jumps 50 --out-dir " + e.string()).status == 0);
    CHECK(slurp(c / "trajectory.csv") == slurp(e / "trajectory.csv"));
}

TEST_CASE("environment output directory") {
    auto d = scratch("env");
    std::string args = "simulate --net crn0 --jumps 3";
    std::string cmd = "CRNLAB_OUT_DIR=" + d.string() + " " + std::string(CRNLAB_CLI) + " " + args + " > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(d / "trajectory.csv"));
}

TEST_CASE("ode") {
    auto d = scratch("ode");
    auto r = cli("ode --net crn0 --x0 1,1 --t-end 1 --grid 5 --out-dir " + d.string());
    CHECK(r.status == 0);
    CHECK(slurp(d / "ode_path.csv").rfind("t,x1,x2\n0,1,1\n", 0) == 0);
    auto g = slurp(d / "vector_field.csv");
    CHECK(g.rfind("x1,x2,f1,f2\n", 0) == 0);
    CHECK(count_lines(g) == 26);
    CHECK(slurp(d / "vector_field.svg").find("<svg") != std::string::npos);
}

TEST_CASE("boundary") {
    auto d = scratch("bnd");
    CHECK(cli("boundary --net crn1 --k0 5 --runs 2000 --b-max 30 --out-dir " + d.string()).status == 0);
    auto law = slurp(d / "exit_law.csv");
    CHECK(law.rfind("b,analytic,empirical,stderr\n5,", 0) == 0);
    CHECK(fs::exists(d / "boundary_report.txt"));
}

TEST_CASE("lyapunov and verify") {
    auto d = scratch("lya");
    CHECK(cli("lyapunov --net crn0 --preset paper-desk --surface-max 40 --out-dir " + d.string()).status == 0);
    auto p = slurp(d / "params.txt");
    CHECK(p.find("n2 ") != std::string::npos);
    CHECK(slurp(d / "v_surface.csv").rfind("x1,x2,region,V,h\n", 0) == 0);
    CHECK(fs::exists(d / "v_surface.svg"));

    auto v = scratch("ver");
    auto r = cli("verify --net crn0 --delta0 0.5 --eps 0.1 --annulus 200:2000 --out-dir " + v.string());
    CHECK(r.status == 0);
    CHECK(slurp(v / "drift_report.csv") == "x1,x2,region,LV,phiV\n");
    CHECK(cli("verify --net crn0 --annulus 100:2000 --out-dir " + v.string()).status == 1);
    CHECK(cli("lyapunov --net crn0 --eps 0.4 --out-dir " + v.string()).status == 1);
}

TEST_CASE("measure") {
    auto d = scratch("mea");
    CHECK(cli("measure --net crn0 --jumps 20000 --out-dir " + d.string()).status == 0);
    CHECK(slurp(d / "occupation.csv").rfind("x1,x2,", 0) == 0);
    CHECK(count_lines(slurp(d / "phi_moment.csv")) == 11);
}

TEST_CASE("classify") {
    auto d = scratch("cla");
    auto r = cli("classify --net crn2 --seed 7 --n 400 --budget 100000 --threads 2 --out-dir " + d.string());
    CHECK(r.status == 0);
    auto rep = slurp(d / "classify_report.txt");
    CHECK(rep.rfind("verdict transient\n", 0) == 0);
    CHECK(slurp(d / "return_times.csv").rfind("tau,censored\n", 0) == 0);
    auto e = scratch("cla1");
    CHECK(cli("classify --net crn2 --seed 7 --n 400 --budget 100000 --threads 1 --out-dir " + e.string()).status == 0);
    CHECK(slurp(e / "return_times.csv") == slurp(d / "return_times.csv"));
}
