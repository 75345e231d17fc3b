// crnlab command line: simulate | ode | boundary | lyapunov | verify | measure | classify
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "crnlab/boundary.hpp"
#include "crnlab/fluid.hpp"
#include "crnlab/lyapunov.hpp"
#include "crnlab/network.hpp"
#include "crnlab/scaling.hpp"
#include "crnlab/ssa.hpp"
#include "crnlab/stability.hpp"

using namespace crnlab;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, usage = 1, failed = 2, infeasible = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string net = "crn0";
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir;
    std::string preset;
};

struct LyapOpts {
    double delta0 = 0.5, eps = 0.1;
    double b0 = 20, b1 = 10, b2 = 50, rho = 200;
};

void add_common(CLI::App* s, Common& c) {
    s->add_option("--net", c.net, "builtin name (crn0, crn1, crn2) or network JSON file")->capture_default_str();
    s->add_option("--seed", c.seed, "64-bit seed")->capture_default_str();
    s->add_option("--threads", c.threads, "worker threads; outputs do not depend on it")->capture_default_str();
    s->add_option("--out-dir", c.out_dir, "output directory (default $CRNLAB_OUT_DIR or .)");
}

void add_lyap(CLI::App* s, LyapOpts& o, Common& c) {
    s->add_option("--preset", c.preset, "paper-desk: delta0 0.5, eps 0.1, b0 20, b1 10, b2 50, rho 200")
        ->check(CLI::IsMember({"paper-desk"}));
    s->add_option("--delta0", o.delta0)->capture_default_str();
    s->add_option("--eps", o.eps)->capture_default_str();
    s->add_option("--b0", o.b0)->capture_default_str();
    s->add_option("--b1", o.b1)->capture_default_str();
    s->add_option("--b2", o.b2)->capture_default_str();
    s->add_option("--rho", o.rho)->capture_default_str();
}

fs::path out_dir(const Common& c) {
    std::string d = c.out_dir;
    if (d.empty()) {
        const char* e = std::getenv("CRNLAB_OUT_DIR");
        d = e ? e : ".";
    }
    fs::create_directories(d);
    return d;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw UsageError("cannot write " + p.string());
    return f;
}

Network load(const Common& c) {
    try {
        return load_network(c.net);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

template <class T>
std::vector<T> parse_list(const std::string& s, char sep, const char* what) {
    std::vector<T> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        std::istringstream is(tok);
        T x;
        if (!(is >> x)) throw UsageError(std::string("bad ") + what + ": " + s);
        v.push_back(x);
    }
    return v;
}

Variant variant_of(const Network& net, const std::string& name) {
    for (auto v : {Variant::crn0, Variant::crn1, Variant::crn2})
        if (net == builtin_network(variant_name(v))) return v;
    throw UsageError("'" + name + "' is not one of the builtin networks crn0/crn1/crn2");
}

LyapunovParams build_params(const Network& net, const Common& c, const LyapOpts& o) {
    LyapOpts q = o;
    if (c.preset == "paper-desk") q = LyapOpts{};
    Variant v = variant_of(net, c.net);
    if (v == Variant::crn2) throw UsageError("crn2 has no Lyapunov function (it is transient)");
    return select_parameters(q.delta0, q.eps, v, RegionParams{q.b0, q.b1, q.b2, q.rho});
}

// ---- svg ----

std::string color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    int r = int(255 * t), b = int(255 * (1 - t)), g = int(80 + 100 * (1 - std::abs(2 * t - 1)));
    std::ostringstream s;
    s << "rgb(" << r << "," << g << "," << b << ")";
    return s.str();
}

void svg_vector_field(std::ostream& os, const std::vector<GridPoint>& grid, double x1lo, double x1hi, double x2lo,
                      double x2hi) {
    const double W = 600, H = 600, pad = 30;
    auto X = [&](double a) { return pad + (a - x1lo) / std::max(x1hi - x1lo, 1e-12) * (W - 2 * pad); };
    auto Y = [&](double b) { return H - pad - (b - x2lo) / std::max(x2hi - x2lo, 1e-12) * (H - 2 * pad); };
    const int n = std::max(1, int(std::lround(std::sqrt(double(grid.size())))));
    const double cell = (W - 2 * pad) / n;
    os << std::setprecision(10);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    for (const auto& g : grid) {
        double f1 = g.f[0], f2 = g.f[1], m = std::hypot(f1, f2);
        if (!(m > 0)) continue;
        double L = 0.4 * cell;
        double x0 = X(g.x[0]), y0 = Y(g.x[1]);
        double x1 = x0 + L * f1 / m, y1 = y0 - L * f2 / m;
        os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y1
           << "\" stroke=\"" << color(std::log10(1 + m) / 6) << "\" stroke-width=\"1.2\"/>\n";
        os << "<circle cx=\"" << x1 << "\" cy=\"" << y1 << "\" r=\"1.5\" fill=\"black\"/>\n";
    }
    os << "</svg>\n";
}

void svg_surface(std::ostream& os, const PiecewiseLyapunov& V, std::int64_t xmax, std::int64_t stride) {
    const double W = 600, pad = 30;
    const std::int64_t n = xmax / stride + 1;
    const double cell = (W - 2 * pad) / double(n);
    double lo = INFINITY, hi = -INFINITY;
    std::vector<double> lv;
    for (std::int64_t a = 0; a < n; ++a)
        for (std::int64_t b = 0; b < n; ++b) {
            double v = std::log(V({a * stride, b * stride}));
            lv.push_back(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    os << std::setprecision(10);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << W << "\">\n";
    // log V in bands of 0.25
    std::size_t k = 0;
    for (std::int64_t a = 0; a < n; ++a)
        for (std::int64_t b = 0; b < n; ++b, ++k) {
            double band = std::floor(lv[k] * 4) / 4;
            os << "<rect x=\"" << pad + a * cell << "\" y=\"" << W - pad - (b + 1) * cell << "\" width=\"" << cell
               << "\" height=\"" << cell << "\" fill=\"" << color((band - lo) / std::max(hi - lo, 1e-12))
               << "\"/>\n";
        }
    os << "</svg>\n";
}

// ---- subcommands ----

int cmd_simulate(const Common& c, const std::string& x0s, std::int64_t jumps, double tmax, const std::string& out) {
    auto net = load(c);
    auto xv = parse_list<std::int64_t>(x0s, ',', "--x0");
    if (static_cast<int>(xv.size()) != net.d()) throw UsageError("--x0 needs one count per species");
    StopCondition stop;
    stop.max_jumps = jumps;
    if (tmax > 0) stop.max_time = tmax;
    Rng rng = make_stream(c.seed, 0);
    auto tr = simulate(net, xv, stop, rng);
    auto p = out.empty() ? out_dir(c) / "trajectory.csv" : fs::path(out);
    auto f = open_out(p);
    write_trajectory_csv(f, tr);
    std::cout << "wrote " << tr.size() << " rows to " << p.string() << "\n";
    return ok;
}

int cmd_ode(const Common& c, const std::string& x0s, double t_end, double tol, int grid_n, const std::string& win) {
    auto net = load(c);
    auto xv = parse_list<double>(x0s, ',', "--x0");
    if (static_cast<int>(xv.size()) != net.d()) throw UsageError("--x0 needs one value per species");
    auto dir = out_dir(c);
    try {
        auto path = integrate(net, xv, t_end, tol);
        auto f = open_out(dir / "ode_path.csv");
        write_path_csv(f, path);
    } catch (const IntegrationError& e) {
        std::cerr << "integration stopped at t=" << e.last_time << ": " << e.what() << "\n";
        return failed;
    }
    if (net.d() == 2 && grid_n > 0) {
        auto w = parse_list<double>(win, ':', "--window");
        if (w.size() != 4) throw UsageError("--window is x1lo:x1hi:x2lo:x2hi");
        auto g = vector_field_grid(net, w[0], w[1], w[2], w[3], grid_n);
        auto f = open_out(dir / "vector_field.csv");
        write_grid_csv(f, g);
        auto s = open_out(dir / "vector_field.svg");
        svg_vector_field(s, g, w[0], w[1], w[2], w[3]);
    }
    std::cout << "wrote ode_path.csv" << (net.d() == 2 && grid_n > 0 ? ", vector_field.csv/.svg" : "") << " in "
              << dir.string() << "\n";
    return ok;
}

int cmd_boundary(const Common& c, std::int64_t k0, std::int64_t runs, std::int64_t bmax) {
    auto net = load(c);
    Variant v = variant_of(net, c.net);
    auto dir = out_dir(c);
    auto law = exit_distribution_mc(v, k0, runs, c.seed);
    auto rep = open_out(dir / "boundary_report.txt");
    rep << std::setprecision(10);
    if (v == Variant::crn2) {
        double left = double(law.n - law.censored) / double(law.n);
        rep << "variant crn2\nk0 " << k0 << "\nstay_forever_lower_bound " << transience_lower_bound(k0)
            << "\nempirical_exit_fraction " << left << "\nverdict transient\n";
    } else {
        auto f = open_out(dir / "exit_law.csv");
        write_exit_law_csv(f, v, law, bmax);
        auto mr = mean_return_time_diverges(v, k0);
        rep << "variant " << variant_name(v) << "\nk0 " << k0 << "\nruns " << runs << "\nmean_exit_level "
            << (mr.finite ? "finite" : "infinite") << "\ncertificate " << mr.certificate << "\n";
        if (bmax > k0) {
            auto [chi, p] = exit_law_chi_square(v, law, k0, bmax);
            rep << "chi_square " << chi << "\np_value " << p << "\n";
        }
    }
    std::cout << "wrote boundary outputs in " << dir.string() << "\n";
    return ok;
}

int cmd_lyapunov(const Common& c, const LyapOpts& o, std::int64_t smax, std::int64_t sstride) {
    auto net = load(c);
    auto p = build_params(net, c, o);
    auto dir = out_dir(c);
    auto f = open_out(dir / "params.txt");
    write_params(f, p);
    PiecewiseLyapunov V(p);
    if (smax > 0) {
        auto s = open_out(dir / "v_surface.csv");
        V.write_surface_csv(s, smax, smax, std::max<std::int64_t>(1, sstride));
        auto g = open_out(dir / "v_surface.svg");
        svg_surface(g, V, smax, std::max<std::int64_t>(1, sstride));
    }
    std::cout << "feasible; n2 " << p.n2 << ", Ch " << p.Ch << ", gamma " << p.gamma << "\n";
    for (const auto& [k, m] : p.margins) std::cout << "margin " << k << " " << m << "\n";
    return ok;
}

int cmd_verify(const Common& c, const LyapOpts& o, const std::string& ann, int stride, int band) {
    auto net = load(c);
    auto p = build_params(net, c, o);
    auto r = parse_list<double>(ann, ':', "--annulus");
    if (r.size() != 2 || !(r[0] <= r[1])) throw UsageError("--annulus is rmin:rmax");
    if (r[0] < p.region.rho) throw UsageError("--annulus must start at or beyond rho");
    PiecewiseLyapunov V(p);
    Annulus a{r[0], r[1], stride, band};
    auto rep = verify_drift(net, V, a, c.threads);
    auto dir = out_dir(c);
    auto f = open_out(dir / "drift_report.csv");
    write_drift_csv(f, rep);
    std::cout << rep.points << " points, " << rep.violations.size() << " violations, worst margin "
              << rep.worst_margin << " at (" << rep.worst_x[0] << "," << rep.worst_x[1] << ")\n";
    return rep.violations.empty() ? ok : failed;
}

int cmd_measure(const Common& c, const LyapOpts& o, const std::string& x0s, std::int64_t jumps) {
    auto net = load(c);
    auto xv = parse_list<std::int64_t>(x0s, ',', "--x0");
    if (static_cast<int>(xv.size()) != net.d()) throw UsageError("--x0 needs one count per species");
    if (jumps < 1) throw UsageError("--jumps must be at least 1");
    Rng rng = make_stream(c.seed, 0);
    auto mu = occupation_measure(net, xv, jumps, rng);
    auto dir = out_dir(c);
    auto f = open_out(dir / "occupation.csv");
    f << "x1,x2,weight\n" << std::setprecision(12);
    for (const auto& [x, w] : mu.sorted()) {
        for (auto v : x) f << v << ",";
        f << w / mu.total_time << "\n";
    }
    Variant v = variant_of(net, c.net);
    if (v != Variant::crn2) {
        PiecewiseLyapunov V(build_params(net, c, o));
        auto mc = phi_moment(mu, V);
        auto g = open_out(dir / "phi_moment.csv");
        g << "decile,cumulative\n" << std::setprecision(12);
        for (std::size_t k = 0; k < mc.cumulative.size(); ++k) g << k + 1 << "," << mc.cumulative[k] << "\n";
        std::cout << "last-decile share " << mc.last_decile_fraction() << "\n";
    }
    std::cout << mu.weights.size() << " states, total time " << mu.total_time << "\n";
    return ok;
}

int cmd_classify(const Common& c, ClassifyConfig cfg, const std::string& x0s) {
    auto net = load(c);
    cfg.x0 = parse_list<std::int64_t>(x0s, ',', "--x0");
    if (static_cast<int>(cfg.x0.size()) != net.d()) throw UsageError("--x0 needs one count per species");
    cfg.seed = c.seed;
    cfg.threads = c.threads;
    auto r = classify_stability(net, cfg);
    auto dir = out_dir(c);
    auto f = open_out(dir / "classify_report.txt");
    f << "verdict " << stability_name(r.verdict) << "\n" << r.evidence << "\n";
    auto g = open_out(dir / "return_times.csv");
    g << "tau,censored\n" << std::setprecision(12);
    for (double t : r.samples.tau) g << t << ",0\n";
    for (std::int64_t k = 0; k < r.samples.censored; ++k) g << ",1\n";
    std::cout << stability_name(r.verdict) << "\n" << r.evidence << "\n";
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crnlab: stochastic reaction networks, fluid limits and piecewise Lyapunov checks"};
    app.require_subcommand(1);
    Common c;
    LyapOpts lo;

    auto* sim = app.add_subcommand("simulate", "exact SSA trajectory");
    add_common(sim, c);
    std::string x0 = "0,0";
    std::int64_t jumps = 1000;
    double tmax = 0;
    std::string out;
    sim->add_option("--x0", x0, "initial counts, comma separated")->capture_default_str();
    sim->add_option("--jumps", jumps, "jump budget")->capture_default_str();
    sim->add_option("--t-max", tmax, "time horizon (0 = none)");
    sim->add_option("--out", out, "CSV path (default <out-dir>/trajectory.csv)");
    sim->footer("Output: trajectory.csv with columns t,x1,...,xd; the first row is the initial state.");

    auto* ode = app.add_subcommand("ode", "mass-action ODE path and vector field");
    add_common(ode, c);
    std::string ox0 = "1,1", window = "0:3:0:3";
    double t_end = 1, tol = 1e-8;
    int grid_n = 15;
    ode->add_option("--x0", ox0, "initial concentrations")->capture_default_str();
    ode->add_option("--t-end", t_end)->capture_default_str();
    ode->add_option("--tol", tol, "absolute and relative tolerance")->capture_default_str();
    ode->add_option("--grid", grid_n, "vector field points per axis (0 = none)")->capture_default_str();
    ode->add_option("--window", window, "x1lo:x1hi:x2lo:x2hi")->capture_default_str();
    ode->footer("Outputs: ode_path.csv (t,x1,...), vector_field.csv (x1,x2,f1,f2), vector_field.svg.");

    auto* bnd = app.add_subcommand("boundary", "embedded tube chain exit law");
    add_common(bnd, c);
    std::int64_t k0 = 5, runs = 100000, bmax = 50;
    bnd->add_option("--k0", k0)->capture_default_str();
    bnd->add_option("--runs", runs)->capture_default_str();
    bnd->add_option("--b-max", bmax)->capture_default_str();
    bnd->footer("Outputs: exit_law.csv (b,analytic,empirical,stderr) for crn0/crn1; boundary_report.txt.");

    auto* lya = app.add_subcommand("lyapunov", "select parameters and export V");
    add_common(lya, c);
    add_lyap(lya, lo, c);
    std::int64_t smax = 400, sstride = 5;
    lya->add_option("--surface-max", smax, "surface window 0..N in both axes (0 = none)")->capture_default_str();
    lya->add_option("--surface-stride", sstride)->capture_default_str();
    lya->footer("Outputs: params.txt (key value), v_surface.csv (x1,x2,region,V,h), v_surface.svg. Exit 3 if "
                "no feasible parameters.");

    auto* ver = app.add_subcommand("verify", "drift sweep over an annulus");
    add_common(ver, c);
    add_lyap(ver, lo, c);
    std::string ann = "200:2000";
    int stride = 7, band = 7;
    ver->add_option("--annulus", ann, "rmin:rmax")->capture_default_str();
    ver->add_option("--stride", stride, "interior stride")->capture_default_str();
    ver->add_option("--band", band, "stride 1 within this distance of interfaces")->capture_default_str();
    ver->footer("Output: drift_report.csv (x1,x2,region,LV,phiV), one row per violation. Exit 2 on violations, "
                "3 if infeasible.");

    auto* mea = app.add_subcommand("measure", "occupation measure of one long run");
    add_common(mea, c);
    add_lyap(mea, lo, c);
    std::string mx0 = "0,0";
    std::int64_t mjumps = 1000000;
    mea->add_option("--x0", mx0)->capture_default_str();
    mea->add_option("--jumps", mjumps)->capture_default_str();
    mea->footer("Outputs: occupation.csv (x1,x2,weight normalized), phi_moment.csv (decile,cumulative).");

    auto* cla = app.add_subcommand("classify", "return-time based stability verdict");
    add_common(cla, c);
    ClassifyConfig cfg;
    std::string cx0 = "100,0";
    cla->add_option("--x0", cx0)->capture_default_str();
    cla->add_option("--radius", cfg.R, "target ball radius")->capture_default_str();
    cla->add_option("--n", cfg.n, "samples")->capture_default_str();
    cla->add_option("--budget", cfg.budget_jumps, "jump budget per sample")->capture_default_str();
    cla->footer("Outputs: classify_report.txt (first line 'verdict <class>'), return_times.csv (tau,censored).");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? ok : usage;
    }
    try {
        if (*sim) return cmd_simulate(c, x0, jumps, tmax, out);
        if (*ode) return cmd_ode(c, ox0, t_end, tol, grid_n, window);
        if (*bnd) return cmd_boundary(c, k0, runs, bmax);
        if (*lya) return cmd_lyapunov(c, lo, smax, sstride);
        if (*ver) return cmd_verify(c, lo, ann, stride, band);
        if (*mea) return cmd_measure(c, lo, mx0, mjumps);
        if (*cla) return cmd_classify(c, cfg, cx0);
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible at " << e.interface_name << ": " << e.what() << "\n";
        return infeasible;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failed;
    }
    return usage;
}
