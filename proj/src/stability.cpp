#include "crnlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

namespace crnlab {

DriftAt drift_at(const Network& net, const PiecewiseLyapunov& V, const State& x) {
    double LV = apply_generator(net, [&V](const State& s) { return V(s); }, x);
    double ph = phi(V(x), V.params());
    return {LV, ph, -LV - ph};
}

bool near_interface(const PiecewiseLyapunov& V, const State& s, double band) {
    const auto& g = V.params().region;
    const double x1 = double(s[0]), x2 = double(s[1]);
    const double B0 = std::llround(g.b0);
    if (x2 <= 2 + band) return true;
    if (std::abs(x2 - B0) <= band) return true;
    if (x2 > B0 - band && std::abs(x1 - g.b2) <= band) return true;
    const double nn = std::sqrt(1 + g.b1 * g.b1);
    if (std::abs(g.b1 * x2 - x1) / nn <= band) return true;
    if (std::abs(x2 - g.b1 * x1) / nn <= band) return true;
    const double r = std::hypot(x1, x2), ph = std::atan2(x2, x1);
    const int n2 = V.params().n2;
    for (int j = 1; j <= n2; ++j)
        if (r * std::abs(std::sin(ph - std::atan(V.sector_ratio(j)))) <= band) return true;
    return false;
}

namespace {

template <class F>
void parallel_for(std::int64_t n, int threads, F&& body) {
    // body(i, worker); workers take indices round-robin
    const int T = std::max(1, threads);
    if (T == 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i, 0);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < T; ++w)
        pool.emplace_back([&, w] {
            for (std::int64_t i = w; i < n; i += T) body(i, w);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

DriftReport verify_drift(const Network& net, const PiecewiseLyapunov& V, const Annulus& a, int threads) {
    const auto R0 = static_cast<std::int64_t>(std::floor(a.r_max));
    const int T = std::max(1, threads);
    std::vector<DriftReport> part(T);
    parallel_for(R0 + 1, T, [&](std::int64_t x1, int w) {
        auto& rep = part[w];
        double lo2 = a.r_min * a.r_min - double(x1) * double(x1);
        auto x2lo = lo2 <= 0 ? std::int64_t(0) : static_cast<std::int64_t>(std::ceil(std::sqrt(lo2)));
        auto x2hi = static_cast<std::int64_t>(std::floor(std::sqrt(a.r_max * a.r_max - double(x1) * double(x1))));
        for (std::int64_t x2 = x2lo; x2 <= x2hi; ++x2) {
            State x{x1, x2};
            double n2 = double(x1) * double(x1) + double(x2) * double(x2);
            if (n2 < a.r_min * a.r_min) continue;
            bool coarse = x1 % a.stride == 0 && x2 % a.stride == 0;
            if (!coarse && !near_interface(V, x, a.band)) continue;
            auto d = drift_at(net, V, x);
            ++rep.points;
            RegionId reg = classify_region(V.params().region, x);
            ++rep.points_by_region[region_name(reg)];
            if (d.margin < rep.worst_margin || (d.margin == rep.worst_margin && x < rep.worst_x)) {
                rep.worst_margin = d.margin;
                rep.worst_x = x;
            }
            if (d.margin < 0) rep.violations.push_back({x, d.LV, d.phiV, reg});
        }
    });
    DriftReport rep;
    rep.annulus = a;
    for (auto& p : part) {
        rep.points += p.points;
        for (auto& [k, c] : p.points_by_region) rep.points_by_region[k] += c;
        if (p.points && (p.worst_margin < rep.worst_margin ||
                         (p.worst_margin == rep.worst_margin && p.worst_x < rep.worst_x))) {
            rep.worst_margin = p.worst_margin;
            rep.worst_x = p.worst_x;
        }
        rep.violations.insert(rep.violations.end(), p.violations.begin(), p.violations.end());
    }
    std::sort(rep.violations.begin(), rep.violations.end(),
              [](const DriftViolation& u, const DriftViolation& v) { return u.x < v.x; });
    return rep;
}

void write_drift_csv(std::ostream& os, const DriftReport& rep) {
    os << "x1,x2,region,LV,phiV\n" << std::setprecision(12);
    for (const auto& v : rep.violations)
        os << v.x[0] << "," << v.x[1] << "," << region_name(v.region) << "," << v.LV << "," << v.phiV << "\n";
}

Point interface_normal(const RegionParams& p, RegionId iface) {
    const double nn = std::sqrt(1 + p.b1 * p.b1);
    switch (iface) {
        case RegionId::T12: return {-1 / nn, p.b1 / nn};
        case RegionId::T23: return {-p.b1 / nn, 1 / nn};
        case RegionId::T34: return {1, 0};
        case RegionId::T01:
        case RegionId::T00: return {0, 1};
        default: throw std::invalid_argument("interface_normal: not a curvature interface");
    }
}

namespace {

// Discrete curvature samples at x; own piece minus the continued neighbour.
std::vector<std::pair<int, double>> discrete_kappa(const PiecewiseLyapunov& V, RegionId iface, const State& s,
                                                   int c_star) {
    const auto& g = V.params().region;
    std::vector<std::pair<int, double>> out;
    Piece below, above;
    Point base;
    switch (iface) {
        case RegionId::T34:
            base = {g.b2, double(s[1])};
            below = {RegionId::T4, 0};
            above = {RegionId::T3, 0};
            break;
        case RegionId::T01:
            base = {double(s[0]), double(std::llround(g.b0))};
            below = {RegionId::T0prime, 0};
            above = {RegionId::T1, 0};
            break;
        case RegionId::T00:
            base = {double(s[0]), 2.0};
            below = {RegionId::T0, 0};
            above = {RegionId::T0prime, 0};
            break;
        default: throw std::invalid_argument("discrete curvature needs T34, T01 or T00");
    }
    const Point n = interface_normal(g, iface);
    for (int a = -c_star; a <= c_star; ++a) {
        if (a == 0) continue;
        Point p{base[0] + a * n[0], base[1] + a * n[1]};
        if (p[0] < 0 || p[1] < 0) continue;
        if (iface == RegionId::T00 && a < -2) continue;
        const Piece& own = a > 0 ? above : below;
        const Piece& other = a > 0 ? below : above;
        out.push_back({a, V.piece_value(own, p) - V.piece_value(other, p)});
    }
    return out;
}

Point project_on_ray(const Point& x, double slope) {
    // closest point of {x2 = slope x1}
    double t = (x[0] + slope * x[1]) / (1 + slope * slope);
    return {t, slope * t};
}

}  // namespace

double interface_curvature(const PiecewiseLyapunov& V, RegionId iface, const State& s, int c_star) {
    const auto& g = V.params().region;
    const Point x{double(s[0]), double(s[1])};
    if (iface == RegionId::T12 || iface == RegionId::T23) {
        const Point n = interface_normal(g, iface);
        Point xs;
        Point gi, go;
        if (iface == RegionId::T12) {
            xs = project_on_ray(x, 1 / g.b1);
            gi = V.piece_gradient({RegionId::T1, 0}, xs);
            go = V.piece_gradient({RegionId::T2, V.params().n2}, xs);
        } else {
            xs = project_on_ray(x, g.b1);
            gi = V.piece_gradient({RegionId::T2, 0}, xs);
            go = V.piece_gradient({RegionId::T3, 0}, xs);
        }
        return n[0] * (go[0] - gi[0]) + n[1] * (go[1] - gi[1]);
    }
    double worst = -INFINITY;
    for (auto [a, k] : discrete_kappa(V, iface, s, c_star)) worst = std::max(worst, k);
    return worst;
}

double CurvatureReport::worst() const {
    double w = -INFINITY;
    for (const auto& s : samples) w = std::max(w, s.value);
    return w;
}

CurvatureReport curvature_samples(const PiecewiseLyapunov& V, RegionId iface, const std::vector<State>& xs,
                                  int c_star) {
    CurvatureReport rep;
    rep.iface = iface;
    rep.c_perp = interface_normal(V.params().region, iface);
    for (const auto& s : xs) {
        if (iface == RegionId::T12 || iface == RegionId::T23) {
            rep.samples.push_back({s, 0, interface_curvature(V, iface, s, c_star)});
        } else {
            for (auto [a, k] : discrete_kappa(V, iface, s, c_star)) rep.samples.push_back({s, a, k});
        }
    }
    return rep;
}

std::vector<FluxTerm> flux_terms(const Network& net, const PiecewiseLyapunov& V, const State& s) {
    std::vector<FluxTerm> out;
    const Point x{double(s[0]), double(s[1])};
    const Piece pi = V.piece_at(x);
    for (int r = 0; r < net.size(); ++r) {
        double lam = propensity(net, r, s);
        if (lam == 0.0) continue;
        const auto& c = net.vec(r);
        const Point y{x[0] + double(c[0]), x[1] + double(c[1])};
        const Piece pj = V.piece_at(y);
        if (pj == pi) continue;
        double lo = 0, hi = 1;  // piece at lo is pi, at hi it differs
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            Point m{x[0] + mid * double(c[0]), x[1] + mid * double(c[1])};
            (V.piece_at(m) == pi ? lo : hi) = mid;
        }
        const double beta = hi;
        const Point xs{x[0] + beta * double(c[0]), x[1] + beta * double(c[1])};
        FluxTerm f;
        f.reaction = r;
        f.from = pi;
        f.to = pj;
        f.beta = beta;
        f.lambda = lam;
        double vj_y = V.piece_value(pj, y), vj_s = V.piece_value(pj, xs);
        double vi_y = V.piece_value(pi, y), vi_s = V.piece_value(pi, xs);
        f.flux = (vj_y - vj_s) - (vi_y - vi_s);
        f.defect = vj_s - vi_s;
        f.dominated = std::abs(f.flux) <= 0.5 * V.rate_h(pi, x) / lam;
        out.push_back(f);
    }
    return out;
}

double piece_generator(const Network& net, const PiecewiseLyapunov& V, const State& s) {
    const Point x{double(s[0]), double(s[1])};
    const Piece pi = V.piece_at(x);
    auto f = [&](const State& z) { return V.piece_value(pi, {double(z[0]), double(z[1])}); };
    return apply_generator(net, f, s);
}

std::size_t StateHash::operator()(const State& s) const {
    std::size_t h = 1469598103934665603ull;
    for (auto v : s) h = (h ^ std::hash<std::int64_t>()(v)) * 1099511628211ull;
    return h;
}

std::vector<std::pair<State, double>> OccupationMeasure::sorted() const {
    std::vector<std::pair<State, double>> v(weights.begin(), weights.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
}

OccupationMeasure occupation_measure(const Network& net, const State& x0, std::int64_t n_jumps, Rng& rng) {
    if (n_jumps < 1) throw std::invalid_argument("occupation_measure: n_jumps < 1");
    OccupationMeasure mu;
    State x = x0, prev;
    double dt = 0;
    for (std::int64_t k = 0; k < n_jumps; ++k) {
        prev = x;
        if (step_inplace(net, x, rng, dt) < 0) break;
        mu.weights[prev] += dt;
        mu.total_time += dt;
    }
    return mu;
}

double tv_distance(const OccupationMeasure& a, const OccupationMeasure& b) {
    double s = 0;
    for (const auto& [x, w] : a.weights) {
        auto it = b.weights.find(x);
        double wb = it == b.weights.end() ? 0.0 : it->second / b.total_time;
        s += std::abs(w / a.total_time - wb);
    }
    for (const auto& [x, w] : b.weights)
        if (!a.weights.count(x)) s += w / b.total_time;
    return 0.5 * s;
}

double MomentCurve::last_decile_fraction() const {
    if (cumulative.size() < 10 || total <= 0) return 0;
    return (cumulative[9] - cumulative[8]) / total;
}

MomentCurve phi_moment(const OccupationMeasure& mu, const PiecewiseLyapunov& V) {
    std::vector<std::pair<double, double>> vw;  // (V, weight)
    vw.reserve(mu.weights.size());
    for (const auto& [x, w] : mu.weights) vw.push_back({V(x), w});  // holding time, not normalized
    std::sort(vw.begin(), vw.end());
    MomentCurve c;
    const std::size_t N = vw.size();
    double acc = 0;
    std::size_t next = 1;
    for (std::size_t i = 0; i < N; ++i) {
        acc += phi(vw[i].first, V.params()) * vw[i].second;
        while (next <= 10 && i + 1 == (N * next + 9) / 10) {
            c.cumulative.push_back(acc);
            ++next;
        }
    }
    while (c.cumulative.size() < 10) c.cumulative.push_back(acc);
    c.total = acc;
    return c;
}

ReturnTimeSamples return_time_samples(const Network& net, double R, const State& x0, std::int64_t n,
                                      std::int64_t budget_jumps, std::uint64_t seed, int threads) {
    const double R2 = R * R;
    auto inside = [R2](const State& s) {
        double q = 0;
        for (auto v : s) q += double(v) * double(v);
        return q <= R2;
    };
    StopCondition budget;
    budget.max_jumps = budget_jumps;
    std::vector<HitResult> hits(static_cast<std::size_t>(n));
    parallel_for(n, threads, [&](std::int64_t i, int) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(i));
        hits[static_cast<std::size_t>(i)] = hitting_time(net, x0, inside, budget, rng);
    });
    ReturnTimeSamples out;
    out.n = n;
    out.R = R;
    for (const auto& h : hits) {
        if (h.hit) {
            out.tau.push_back(h.tau);
        } else {
            ++out.censored;
            double q = 0;
            for (auto v : h.at) q += double(v) * double(v);
            out.censored_norms.push_back(std::sqrt(q));
        }
    }
    return out;
}

namespace {

double fit_slope(const std::vector<double>& sorted_tau, std::int64_t n, double s_min, double s_max,
                 std::size_t* used = nullptr) {
    // survival just after the k-th smallest uncensored value
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    const std::size_t N = sorted_tau.size();
    double last_lx = -INFINITY;
    for (std::size_t k = 0; k < N; ++k) {
        double S = double(n - std::int64_t(k) - 1) / double(n);
        if (S < s_min || S > s_max || S <= 0) continue;
        double lx = std::log(sorted_tau[k]);
        if (lx - last_lx < 0.01) continue;  // thin to roughly log-even spacing
        last_lx = lx;
        double ly = std::log(S);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (used) *used = m;
    if (m < 3) return NAN;
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

TailFit tail_slope(const ReturnTimeSamples& s, double s_min, double s_max, int boot, std::uint64_t seed) {
    TailFit f;
    std::vector<double> t = s.tau;
    std::sort(t.begin(), t.end());
    f.slope = fit_slope(t, s.n, s_min, s_max, &f.points);
    if (boot <= 0 || !(f.slope == f.slope)) {
        f.lo = f.hi = f.slope;
        return f;
    }
    Rng rng = make_stream(seed, 0xb007);
    std::uniform_int_distribution<std::int64_t> pick(0, s.n - 1);
    std::vector<double> slopes;
    for (int b = 0; b < boot; ++b) {
        std::vector<double> r;
        r.reserve(t.size());
        for (std::int64_t i = 0; i < s.n; ++i) {
            auto k = pick(rng);
            if (k < static_cast<std::int64_t>(t.size())) r.push_back(t[static_cast<std::size_t>(k)]);
        }
        std::sort(r.begin(), r.end());
        double v = fit_slope(r, s.n, s_min, s_max);
        if (v == v) slopes.push_back(v);
    }
    std::sort(slopes.begin(), slopes.end());
    if (slopes.empty()) {
        f.lo = f.hi = f.slope;
        return f;
    }
    f.lo = slopes[static_cast<std::size_t>(0.025 * (slopes.size() - 1))];
    f.hi = slopes[static_cast<std::size_t>(0.975 * (slopes.size() - 1))];
    return f;
}

double truncated_mean(const ReturnTimeSamples& s, double T) {
    double acc = 0;
    for (double v : s.tau) acc += std::min(v, T);
    acc += double(s.censored) * T;
    return s.n ? acc / double(s.n) : 0.0;
}

double H_phi(double u, const PowerPhi& p) {
    if (!(p.C > 0)) throw std::invalid_argument("H_phi: phi must be positive");
    if (u < 1) throw std::invalid_argument("H_phi: u < 1");
    if (p.gamma == 1) return std::log(u) / p.C;
    return (std::pow(u, 1 - p.gamma) - 1) / (p.C * (1 - p.gamma));
}

double H_phi_inverse(double t, const PowerPhi& p) {
    if (!(p.C > 0)) throw std::invalid_argument("H_phi_inverse: phi must be positive");
    if (t < 0) throw std::invalid_argument("H_phi_inverse: t < 0");
    if (p.gamma == 1) return std::exp(p.C * t);
    double base = 1 + p.C * (1 - p.gamma) * t;
    if (base <= 0) throw std::domain_error("H_phi_inverse: travel time exceeds the finite explosion time");
    return std::pow(base, 1 / (1 - p.gamma));
}

std::vector<CouplingEstimate> tv_coupling_estimate(const Network& net, const State& x, const State& y,
                                                   const std::vector<double>& ts, std::int64_t n, std::uint64_t seed,
                                                   std::int64_t max_jumps) {
    const double horizon = ts.empty() ? 0.0 : *std::max_element(ts.begin(), ts.end());
    std::vector<double> meet(static_cast<std::size_t>(n), INFINITY);
    for (std::int64_t i = 0; i < n; ++i) {
        if (x == y) {
            meet[i] = 0;
            continue;
        }
        Rng ra = make_stream(seed, 2 * static_cast<std::uint64_t>(i));
        Rng rb = make_stream(seed, 2 * static_cast<std::uint64_t>(i) + 1);
        State sa = x, sb = y, na = x, nb = y;
        double dta = 0, dtb = 0;
        bool alive_a = step_inplace(net, na, ra, dta) >= 0;
        bool alive_b = step_inplace(net, nb, rb, dtb) >= 0;
        double ta = alive_a ? dta : INFINITY, tb = alive_b ? dtb : INFINITY;
        for (std::int64_t k = 0; k < max_jumps; ++k) {
            double tnow;
            if (ta <= tb) {
                tnow = ta;
                if (tnow > horizon) break;
                sa = na;
                ta = step_inplace(net, na, ra, dta) >= 0 ? ta + dta : INFINITY;
            } else {
                tnow = tb;
                if (tnow > horizon) break;
                sb = nb;
                tb = step_inplace(net, nb, rb, dtb) >= 0 ? tb + dtb : INFINITY;
            }
            if (sa == sb) {
                meet[i] = tnow;
                break;
            }
        }
    }
    std::vector<CouplingEstimate> out;
    for (double t : ts) {
        double fail = 0;
        for (double m : meet) fail += m > t ? 1.0 : 0.0;
        double p = n ? fail / double(n) : 0.0;
        out.push_back({t, p, std::sqrt(std::max(p * (1 - p), 1e-12) / double(std::max<std::int64_t>(n, 1)))});
    }
    return out;
}

const char* stability_name(Stability s) {
    switch (s) {
        case Stability::positive_recurrent: return "positive_recurrent";
        case Stability::null_recurrent: return "null_recurrent";
        case Stability::transient: return "transient";
        default: return "inconclusive";
    }
}

Classification classify_stability(const Network& net, const ClassifyConfig& cfg) {
    Classification c;
    c.samples = return_time_samples(net, cfg.R, cfg.x0, cfg.n, cfg.budget_jumps, cfg.seed, cfg.threads);
    const auto& s = c.samples;
    const double cf = s.censored_fraction();
    const double sig = std::sqrt(std::max(cf * (1 - cf), 1e-12) / double(s.n));
    double x0n = 0;
    for (auto v : cfg.x0) x0n += double(v) * double(v);
    x0n = std::sqrt(x0n);
    if (!s.censored_norms.empty())
        c.mean_norm_censored =
            std::accumulate(s.censored_norms.begin(), s.censored_norms.end(), 0.0) / double(s.censored_norms.size());
    std::ostringstream ev;
    ev << std::setprecision(6);
    ev << "n=" << s.n << " censored_fraction=" << cf << " (sd " << sig << ")";
    if (cf - 4 * sig > cfg.transient_censored) {
        ev << " mean_censored_norm=" << c.mean_norm_censored << " start_norm=" << x0n;
        c.verdict = c.mean_norm_censored > x0n ? Stability::transient : Stability::inconclusive;
        c.evidence = ev.str();
        return c;
    }
    std::vector<double> t = s.tau;
    std::sort(t.begin(), t.end());
    const double med = t.empty() ? 0.0 : t[t.size() / 2];
    double s_min = cfg.tail_s_min > 0 ? cfg.tail_s_min : 20.0 / double(s.n);
    c.tail = tail_slope(s, s_min, cfg.tail_s_max, cfg.bootstrap, cfg.seed);
    double growth = 0;
    int k = 0;
    for (double f = 4; f <= 64; f *= 2) c.truncated_means.push_back(truncated_mean(s, f * med));
    for (std::size_t i = 1; i < c.truncated_means.size(); ++i, ++k)
        growth += c.truncated_means[i] / c.truncated_means[i - 1] - 1;
    c.mean_growth = k ? growth / k : 0;
    ev << " median=" << med << " tail_slope=" << c.tail.slope << " ci=[" << c.tail.lo << "," << c.tail.hi << "]"
       << " truncated_mean_growth=" << c.mean_growth;
    if (c.tail.lo >= cfg.null_slope_floor && c.mean_growth > cfg.null_mean_growth)
        c.verdict = Stability::null_recurrent;
    else if (c.mean_growth < cfg.null_mean_growth / 4)
        c.verdict = Stability::positive_recurrent;
    else
        c.verdict = Stability::inconclusive;
    c.evidence = ev.str();
    return c;
}

}  // namespace crnlab
