// One line per criterion. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "crnlab/boundary.hpp"
#include "crnlab/fluid.hpp"
#include "crnlab/lyapunov.hpp"
#include "crnlab/network.hpp"
#include "crnlab/scaling.hpp"
#include "crnlab/ssa.hpp"
#include "crnlab/stability.hpp"

using namespace crnlab;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = f();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && el > limit_s) {
        o.pass = false;
        o.detail += " over time limit";
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), el);
    std::fflush(stdout);
}

LyapunovParams desk(Variant v) { return select_parameters(0.5, 0.1, v, RegionParams{}); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(5);
    s << v;
    return s.str();
}

// ---- 1, 2 ----

Outcome exit_law_crn1() {
    const std::int64_t k0 = 5, n = 100000;
    auto law = exit_distribution_mc(Variant::crn1, k0, n, 11);
    int bad = 0;
    double worst = 0;
    for (std::int64_t b = 5; b <= 50; ++b) {
        double p = double(k0) / double(b * (b + 1));
        double sd = std::sqrt(p * (1 - p) / double(n));
        double z = std::abs(law.mass(b) - p) / sd;
        worst = std::max(worst, z);
        if (z > 4) ++bad;
    }
    auto [chi, pval] = exit_law_chi_square(Variant::crn1, law, 5, 50);
    return {bad == 0 && pval > 0.001,
            "max |z| " + fmt(worst) + ", chi2 " + fmt(chi) + ", p " + fmt(pval)};
}

Outcome exit_law_crn0() {
    const std::int64_t k0 = 5, n = 100000;
    auto law = exit_distribution_mc(Variant::crn0, k0, n, 12);
    // geometric MLE on b - k0
    double s = 0, m = 0;
    for (auto [b, c] : law.counts) {
        s += double(b - k0) * double(c);
        m += double(c);
    }
    double mean = s / m, a = mean / (1 + mean);
    double rate = std::log(a);
    return {std::abs(rate - std::log(0.5)) <= 0.02, "fitted log-rate " + fmt(rate) + " vs " + fmt(std::log(0.5))};
}

// ---- 3 ----

Outcome transience_crn2() {
    const auto net = builtin_network("crn2");
    const std::int64_t n = 10000, budget = 100000;
    // trajectories split across threads; each keeps its own stream
    const unsigned T = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    std::vector<std::int64_t> part(T, 0);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < T; ++w)
        pool.emplace_back([&, w] {
            for (std::int64_t i = w; i < n; i += T) {
                Rng rng = make_stream(13, static_cast<std::uint64_t>(i));
                State x{50, 0};
                // only the jump chain matters for leaving within a jump budget
                for (std::int64_t k = 0; k < budget; ++k) {
                    if (jump_inplace(net, x, rng) < 0) break;
                    if (x[1] >= 2) {
                        ++part[w];
                        break;
                    }
                }
            }
        });
    for (auto& t : pool) t.join();
    std::int64_t left = 0;
    for (auto c : part) left += c;
    double f = double(left) / double(n);
    double lb = transience_lower_bound(50);
    double sd = std::sqrt(std::max(f * (1 - f), 1e-12) / double(n));
    return {f <= 1 - lb + 4 * sd, "left tube " + fmt(f) + ", bound 1-" + fmt(lb) + " + 4sd " + fmt(4 * sd)};
}

// ---- 4 ----

Outcome fluid_limit() {
    const auto net = builtin_network("crn0");
    const Concentration x0{1, 1};
    auto ode = integrate(net, x0, 1.0, 1e-10);
    const int grid = 200;
    double scale = 0;
    for (int g = 0; g <= grid; ++g)
        for (double v : path_at(ode, double(g) / grid)) scale = std::max(scale, std::abs(v));
    std::vector<double> dev;
    for (double vol : {10.0, 100.0, 1000.0}) {
        auto sn = volume_scaled(net, vol);
        std::vector<std::vector<double>> mean(grid + 1, std::vector<double>(2, 0.0));
        const int paths = 100;
        for (int i = 0; i < paths; ++i) {
            Rng rng = make_stream(14, static_cast<std::uint64_t>(i) + static_cast<std::uint64_t>(vol) * 1000);
            State x{std::llround(vol), std::llround(vol)};
            double t = 0, dt = 0;
            int g = 0;
            while (g <= grid) {
                State prev = x;
                bool alive = step_inplace(sn, x, rng, dt) >= 0;
                double tn = alive ? t + dt : INFINITY;
                while (g <= grid && double(g) / grid < tn) {
                    for (int c = 0; c < 2; ++c) mean[g][c] += double(prev[c]) / vol / paths;
                    ++g;
                }
                t = tn;
            }
        }
        double d = 0;
        for (int g = 0; g <= grid; ++g) {
            auto y = path_at(ode, double(g) / grid);
            for (int c = 0; c < 2; ++c) d = std::max(d, std::abs(mean[g][c] - y[c]));
        }
        dev.push_back(d / scale);
    }
    bool ok = dev[2] <= 0.05 && dev[0] > dev[1] && dev[1] > dev[2];
    return {ok, "relative sup deviation v=10 " + fmt(dev[0]) + ", v=100 " + fmt(dev[1]) + ", v=1000 " + fmt(dev[2])};
}

// ---- 5 ----

Outcome drift() {
    std::string d;
    bool ok = true;
    for (auto v : {Variant::crn0, Variant::crn1}) {
        PiecewiseLyapunov V(desk(v));
        auto rep = verify_drift(builtin_network(variant_name(v)), V, Annulus{});
        ok = ok && rep.violations.empty();
        d += std::string(variant_name(v)) + " " + std::to_string(rep.points) + " points, " +
             std::to_string(rep.violations.size()) + " violations, worst margin " + fmt(rep.worst_margin) + "; ";
    }
    return {ok, d};
}

// ---- 6 ----

std::vector<State> interface_samples(const RegionParams& g, RegionId iface) {
    std::vector<State> out;
    for (double r = g.rho; r <= 100 * g.rho; r *= 1.02) {
        switch (iface) {
            case RegionId::T12: {
                double c = r / std::sqrt(1 + 1 / (g.b1 * g.b1));
                out.push_back({std::llround(c), std::llround(c / g.b1)});
                break;
            }
            case RegionId::T23: {
                double c = r / std::sqrt(1 + g.b1 * g.b1);
                out.push_back({std::llround(c), std::llround(c * g.b1)});
                break;
            }
            case RegionId::T34: out.push_back({std::llround(g.b2), std::llround(r)}); break;
            case RegionId::T01: out.push_back({std::llround(r), std::llround(g.b0)}); break;
            default: break;
        }
    }
    return out;
}

bool crosses(const FluxTerm& f, RegionId iface) {
    auto pair = [&](RegionId a, RegionId b) {
        return (f.from.region == a && f.to.region == b) || (f.from.region == b && f.to.region == a);
    };
    switch (iface) {
        case RegionId::T12: return pair(RegionId::T1, RegionId::T2);
        case RegionId::T23: return pair(RegionId::T2, RegionId::T3);
        case RegionId::T34: return pair(RegionId::T3, RegionId::T4);
        case RegionId::T01: return pair(RegionId::T0prime, RegionId::T1);
        default: return false;
    }
}

Outcome curvature_flux() {
    bool ok = true;
    std::string d;
    for (auto v : {Variant::crn0, Variant::crn1}) {
        const auto net = builtin_network(variant_name(v));
        PiecewiseLyapunov V(desk(v));
        const auto& g = V.params().region;
        for (auto iface : {RegionId::T12, RegionId::T23, RegionId::T34, RegionId::T01}) {
            auto xs = interface_samples(g, iface);
            auto rep = curvature_samples(V, iface, xs);
            double worst_f = -INFINITY;
            std::int64_t terms = 0;
            for (const auto& s : xs)
                for (int a = -7; a <= 7; ++a)
                    for (int b = -7; b <= 7; ++b) {
                        State x{s[0] + a, s[1] + b};
                        if (x[0] < 0 || x[1] < 0 || std::hypot(double(x[0]), double(x[1])) < g.rho) continue;
                        for (const auto& f : flux_terms(net, V, x))
                            if (crosses(f, iface)) {
                                ++terms;
                                worst_f = std::max(worst_f, f.flux);
                            }
                    }
            bool here = rep.worst() < 0 && terms > 0 && worst_f <= 0;
            ok = ok && here;
            d += std::string(variant_name(v)) + " " + region_name(iface) + " max kappa " + fmt(rep.worst()) +
                 " max flux " + fmt(worst_f) + " (" + std::to_string(terms) + "); ";
        }
    }
    return {ok, d};
}

// ---- 7 ----

Outcome homogeneity() {
    PiecewiseLyapunov V(desk(Variant::crn0));
    const auto& e = V.params().exps;
    const std::vector<double> ls{10, 100};
    auto piece = [&](RegionId r, int j = 0) {
        return [&V, r, j](const Point& x) { return V.piece_value({r, j}, x); };
    };
    auto dot = [](double a, double b, const ScalingVector& w) { return a * w.w[0] + b * w.w[1]; };
    bool ok = true;
    std::string d;
    auto check = [&](const char* name, const PointFn& f, const ScalingVector& w, double delta,
                     const std::vector<Point>& xs, double tol) {
        double dev = homogeneity_check(f, w, delta, xs, ls);
        ok = ok && dev <= tol;
        d += std::string(name) + " " + fmt(dev) + "; ";
    };
    const ScalingVector diag(1, 1), w3(2, 1), w1(1, 0.05), e1(1, 0), e2(0, 1);
    check("T4", piece(RegionId::T4), e2, e.delta4, {{5, 200}, {20, 500}, {40, 2000}, {45, 800}}, 0.05);
    check("T3", piece(RegionId::T3), w3, dot(e.delta3p - 4, e.delta3pp - 2, w3), {{100, 1500}, {60, 900}}, 1e-10);
    check("T2", piece(RegionId::T2, 0), diag, e.delta2() * diag.w[0],
          {{100, 900}, {100, 300}}, 0.05);
    check("T2 inner sector", piece(RegionId::T2, V.params().n2), diag, e.delta2() * diag.w[0],
          {{950, 100}}, 0.05);
    check("T1", piece(RegionId::T1), w1, dot(e.delta1p - 5, e.delta1pp - 1, w1), {{500, 30}, {900, 60}}, 1e-10);
    check("T0'", piece(RegionId::T0prime), e1, e.delta0pp - 5, {{300, 5}, {1000, 12}}, 1e-10);
    return {ok, d};
}

// ---- 8 ----

Outcome trichotomy() {
    std::string d;
    bool ok = true;
    ClassifyConfig c0;
    c0.seed = 21;
    auto r0 = classify_stability(builtin_network("crn0"), c0);
    ClassifyConfig c1;
    c1.seed = 22;
    c1.n = 20000;
    auto r1 = classify_stability(builtin_network("crn1"), c1);
    ClassifyConfig c2;
    c2.seed = 23;
    c2.n = 400;
    c2.budget_jumps = 100000;
    auto r2 = classify_stability(builtin_network("crn2"), c2);
    ok = r0.verdict == Stability::positive_recurrent && r1.verdict == Stability::null_recurrent &&
         r2.verdict == Stability::transient && r1.tail.lo >= -1.3 && r1.tail.hi <= -0.7;
    d = std::string("crn0 ") + stability_name(r0.verdict) + ", crn1 " + stability_name(r1.verdict) + " slope " +
        fmt(r1.tail.slope) + " CI [" + fmt(r1.tail.lo) + ", " + fmt(r1.tail.hi) + "], crn2 " +
        stability_name(r2.verdict);
    return {ok, d};
}

// ---- 9 ----

Outcome invariant_measure() {
    const auto net = builtin_network("crn0");
    PiecewiseLyapunov V(desk(Variant::crn0));
    Rng a = make_stream(31, 0), b = make_stream(32, 0);
    auto mu = occupation_measure(net, {0, 0}, 10000000, a);
    auto nu = occupation_measure(net, {0, 0}, 10000000, b);
    auto mc = phi_moment(mu, V);
    double tv = tv_distance(mu, nu);
    double last = mc.last_decile_fraction();
    return {last < 0.01 && tv <= 0.05, "last-decile share " + fmt(last) + ", two-seed TV " + fmt(tv)};
}

// ---- 10 ----

Outcome rates() {
    auto e0 = tv_coupling_estimate(builtin_network("crn0"), {0, 0}, {40, 10}, {10, 20, 40}, 4000, 41);
    bool ok0 = e0[1].p <= 0.9 * e0[0].p && e0[2].p <= 0.9 * e0[1].p && e0[0].p > 0;
    auto p1 = desk(Variant::crn1);
    PowerPhi ph{p1.Ch, -1};
    std::vector<double> ts{100, 200, 400, 1000, 2000, 4000, 10000};
    auto e1 = tv_coupling_estimate(builtin_network("crn1"), {0, 0}, {40, 10}, ts, 20000, 42);
    // one free constant, fixed at the first time
    const double C = e1[0].p * H_phi_inverse(ts[0], ph);
    bool ok1 = e1[0].p > 0;
    double worst = -INFINITY;
    for (const auto& e : e1) {
        double bound = C / H_phi_inverse(e.t, ph);
        worst = std::max(worst, (e.p - bound) / std::max(e.stderr_, 1e-12));
        if (e.p > bound + 4 * e.stderr_) ok1 = false;
    }
    return {ok0 && ok1, "crn0 " + fmt(e0[0].p) + " -> " + fmt(e0[1].p) + " -> " + fmt(e0[2].p) + "; crn1 C''=" +
                            fmt(C) + ", p(1e4) " + fmt(e1.back().p) + ", max excess " + fmt(worst) + " sd"};
}

// ---- 11 ----

Outcome kernels() {
    const auto net = builtin_network("crn0");
    PiecewiseLyapunov V(desk(Variant::crn0));
    Rng rng = make_stream(51, 0);
    std::uniform_int_distribution<std::int64_t> u(0, 400);
    int gen_bad = 0, flux_bad = 0, sandwich_bad = 0;
    double worst_z = 0;
    // generator against short-time Monte Carlo
    for (int i = 0; i < 10; ++i) {
        State x{u(rng), u(rng)};
        double LV = drift_at(net, V, x).LV;
        double lam = total_propensity(net, x);
        const double dt = 1e-3 / lam;
        const double v0 = V(x);
        const int n = 1000000;
        double s = 0, s2 = 0;
        for (int k = 0; k < n; ++k) {
            State y = x;
            double t = 0, h;
            while (true) {
                State keep = y;
                if (step_inplace(net, y, rng, h) < 0) break;
                t += h;
                if (t > dt) {
                    y = keep;
                    break;
                }
            }
            double dv = (V(y) - v0) / dt;
            s += dv;
            s2 += dv * dv;
        }
        double mean = s / n, sd = std::sqrt(std::max(s2 / n - mean * mean, 0.0) / n);
        double z = std::abs(mean - LV) / std::max(sd, 1e-300);
        worst_z = std::max(worst_z, z);
        if (z > 4) ++gen_bad;
    }
    // flux bookkeeping near interfaces
    const auto& g = V.params().region;
    std::uniform_int_distribution<int> off(-7, 7);
    std::uniform_int_distribution<std::int64_t> along(200, 3000);
    int done = 0;
    while (done < 10) {
        std::int64_t a = along(rng);
        State x;
        switch (done % 4) {
            case 0: x = {a, std::llround(a / g.b1)}; break;
            case 1: x = {a / 10, std::llround(a / 10 * g.b1)}; break;
            case 2: x = {std::llround(g.b2), a}; break;
            default: x = {a, std::llround(g.b0)}; break;
        }
        x[0] += off(rng);
        x[1] += off(rng);
        auto terms = flux_terms(net, V, x);
        if (terms.empty()) continue;
        double lhs = drift_at(net, V, x).LV, rhs = piece_generator(net, V, x), scale = 0;
        for (const auto& f : terms) rhs += f.lambda * (f.flux + f.defect);
        for (int r = 0; r < net.size(); ++r) {
            State y = x;
            for (int c = 0; c < 2; ++c) y[c] += net.vec(r)[c];
            scale += propensity(net, r, x) * (std::abs(V(x)) + (y[0] >= 0 && y[1] >= 0 ? std::abs(V(y)) : 0));
        }
        if (std::abs(lhs - rhs) > 1e-9 * scale) ++flux_bad;
        ++done;
    }
    // propensity below the monomial and ratio nondecreasing
    std::uniform_int_distribution<std::int64_t> big(0, 60);
    for (int i = 0; i < 10000; ++i) {
        State x{big(rng), big(rng)};
        for (int r = 0; r < net.size(); ++r) {
            const auto& cin = net.reaction(r).c_in;
            if (x[0] < cin[0] || x[1] < cin[1]) continue;
            double L = propensity(net, r, x), l = mass_action_rate(net, r, {double(x[0]), double(x[1])});
            if (L > l * (1 + 1e-15)) ++sandwich_bad;
            for (int c = 0; c < 2; ++c) {
                State y = x;
                ++y[c];
                double L2 = propensity(net, r, y), l2 = mass_action_rate(net, r, {double(y[0]), double(y[1])});
                if (L2 / l2 < L / l * (1 - 1e-12)) ++sandwich_bad;
            }
        }
    }
    return {gen_bad == 0 && flux_bad == 0 && sandwich_bad == 0,
            "generator max |z| " + fmt(worst_z) + " (" + std::to_string(gen_bad) + " bad), flux identity " +
                std::to_string(flux_bad) + " bad, sandwich " + std::to_string(sandwich_bad) + " bad"};
}

}  // namespace

int main() {
    run(1, "exit law crn1 k0=5", 30, exit_law_crn1);
    run(2, "geometric exit law crn0 k0=5", 0, exit_law_crn0);
    run(3, "transience crn2 from (50,0)", 120, transience_crn2);
    run(4, "fluid limit crn0", 0, fluid_limit);
    run(5, "drift sweep crn0 crn1", 300, drift);
    run(6, "interface curvature and flux", 0, curvature_flux);
    run(7, "piecewise homogeneity", 0, homogeneity);
    run(8, "stability trichotomy", 600, trichotomy);
    run(9, "invariant measure moment crn0", 0, invariant_measure);
    run(10, "convergence rates", 0, rates);
    run(11, "kernel exactness", 0, kernels);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures;
}
