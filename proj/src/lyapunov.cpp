#include "crnlab/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace crnlab {

ExponentTable derive_exponents(double delta0, double eps, Variant v, int c_star) {
    if (!(delta0 > 0 && delta0 < 1)) throw std::invalid_argument("derive_exponents: delta0 must lie in (0,1)");
    if (!(eps > 0 && eps < delta0 / 2)) throw std::invalid_argument("derive_exponents: eps must lie in (0, delta0/2)");
    if (v == Variant::crn2) throw std::invalid_argument("derive_exponents: crn2 admits no Lyapunov function");
    ExponentTable e;
    e.variant = v;
    e.delta0 = delta0;
    e.eps = eps;
    e.delta0p = v == Variant::crn0 ? delta0 : delta0 - 1;
    e.delta0pp = 5 + delta0;
    e.delta1p = 5 + delta0;
    e.delta1pp = 1 - eps;
    e.delta2p = 6 + delta0 - eps;
    e.delta3p = 4 + eps;
    e.delta3pp = 2 + delta0 - 2 * eps;
    e.delta4 = delta0 - 2 * eps;
    e.delta4pp = e.delta4 + 2;
    e.delta4star = e.delta4;
    e.delta4p = std::max(5.0, c_star * (e.delta3p - 4) + 4) + 0.5;
    return e;
}

double global_drift_exponent(const ExponentTable& e) {
    auto ratio = [](double a1, double a2, double v1, double v2, double w1, double w2) {
        return (a1 * w1 + a2 * w2) / (v1 * w1 + v2 * w2);
    };
    std::vector<double> r = {
        ratio(0, e.delta4pp, 0, e.delta4, 0, 1),
        ratio(e.delta3p, e.delta3pp, e.delta3p - 4, e.delta3pp - 2, 2, 1),
        ratio(e.delta2p, e.delta2p, e.delta2p - 6, e.delta2p - 6, 1, 1),
        ratio(e.delta1p, e.delta1pp, e.delta1p - 5, e.delta1pp - 1, 1, 0),
        ratio(e.delta0pp, 0, e.delta0pp - 5, 0, 1, 0),
        ratio(e.delta0p, 0, e.delta0, 0, 1, 0),
    };
    return std::min(1.0, *std::min_element(r.begin(), r.end()));
}

double phi(double v, const LyapunovParams& p) { return p.Ch * std::pow(v, p.gamma); }

double P_poly(double r) {
    return -12 / r + 3000 * r + 7500 * r * r + 12500 * r * r * r + 9375 * r * r * r * r + 300 * std::log(r);
}

double P_prime(double r) { return 12 * std::pow(1 + 5 * r, 5) / (r * r); }

namespace {

// sum_{j=k}^{B0-1} 1/binom(j,2), continued to real k > 1 by the telescoped form
double level_tail(double k, double B0) { return 2 * (1 / (k - 1) - 1 / (B0 - 1)); }

double series_term(const ExponentTable& e, int k) {
    double b5 = static_cast<double>(falling(k, 5));
    return std::pow(double(k), e.delta4p) / (e.delta4pp - 2 + b5);
}

}  // namespace

void LyapunovParams::validate() const {
    region.validate();
    auto pos = [](double v, const char* n) {
        if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument(std::string("LyapunovParams: ") + n + " must be positive");
    };
    pos(h0, "h0"); pos(h0p, "h0p"); pos(h1, "h1"); pos(h2, "h2"); pos(h3, "h3"); pos(h4, "h4");
    pos(m1, "m1"); pos(m2, "m2"); pos(m3, "m3"); pos(m4, "m4"); pos(m4star, "m4star");
    if (!(eta2star > 1 && eta2star < 2)) throw std::invalid_argument("LyapunovParams: eta2star must lie in (1,2)");
    if (n2 < 1) throw std::invalid_argument("LyapunovParams: n2 must be positive");
    if (!(Ch > 0 && Ch < 1)) throw std::invalid_argument("LyapunovParams: Ch must lie in (0,1)");
    if (m0_levels.size() < 3) throw std::invalid_argument("LyapunovParams: m0 table too short");
    for (std::size_t i = 0; i < m0_levels.size(); ++i) {
        pos(m0_levels[i], "m0 level");
        if (i && !(m0_levels[i] < m0_levels[i - 1])) throw std::invalid_argument("LyapunovParams: m0 levels must decrease");
    }
    if (!(m0_levels[2] < m0_levels[1] * (1 - exps.delta0) - h0))
        throw std::invalid_argument("LyapunovParams: first-level inequality fails");
}

LyapunovParams select_parameters(double delta0, double eps, Variant v, const RegionParams& region,
                                 const TuningTargets& t) {
    region.validate();
    LyapunovParams p;
    p.exps = derive_exponents(delta0, eps, v, 7);
    p.region = region;
    const auto& e = p.exps;
    const double b0 = region.b0, b1 = region.b1, b2 = region.b2;
    const int B2 = static_cast<int>(std::llround(b2));
    const int cs = 7;
    p.k4 = t.k4;
    p.c4 = t.c4;
    p.h4 = 1.0;

    // T4 series and the T34 bound on m4 (discrete curvature, x2 -> infinity)
    auto G = [&](int n) {
        double s = 0;
        for (int k = std::max(1, t.k4); k <= n; ++k) s += series_term(e, k);
        return s;
    };
    const double a3 = e.delta3p - 4;
    double m4max = INFINITY;
    for (int a = 1; a <= cs; ++a) {
        m4max = std::min(m4max, (G(B2 + a) - G(B2)) / (std::pow(1 + double(a) / b2, a3) - 1));
        m4max = std::min(m4max, (G(B2) - G(B2 - a)) / (1 - std::pow(1 - double(a) / b2, a3)));
    }
    p.m4 = t.m4_fraction * m4max;
    p.m4star = p.m4 - p.h4 * G(B2);
    p.margins["T34_m4"] = 1 - t.m4_fraction;
    double v4min = p.m4star - t.c4 * p.m4 * b2 / b0;  // V4 at (0, b0) over b0^delta4
    p.margins["T4_positive"] = v4min / p.m4;
    if (!(m4max > 0) || !(v4min > 0))
        throw InfeasibleError("T34", "no m4 satisfies the T34 curvature with a positive T4 piece");

    p.h3 = a3 * p.m4 * std::pow(b2, -a3);
    const double A3 = p.h3 / a3;
    const double d3 = e.delta3();
    p.m3 = A3 * std::pow(b1, e.delta3pp - 2) * std::pow(1 + 5 * b1, -d3);

    // T23: <c3, grad V3> < <c3, grad V2> on x2 = b1 x1
    const double K = (5 + 1 / b1) / (1 - 1 / (b1 * b1));
    const double g3 = A3 * std::pow(b1, e.delta3pp - 2) * (5 * a3 - (e.delta3pp - 2) / b1);
    if (!(g3 > 0)) throw InfeasibleError("T23", "V3 does not decrease along r3 on T23 for this b1");
    const double h2max = g3 / (K * std::pow(1 + 5 * b1, e.delta2p) / (b1 * b1));
    p.h2 = t.h2_fraction * h2max;
    p.margins["T23_h2"] = 1 - t.h2_fraction;

    // T12: pick n2 so that V2 falls faster than V1 along r3, with a safety factor
    p.eta2star = t.eta2;
    const double th_hi = std::atan(b1), th_lo = std::atan(1 / b1);
    const double d2 = e.delta2();
    for (int n2 = 1; n2 <= t.n2_max; ++n2) {
        const double dth = (th_hi - th_lo) / (n2 + 1);
        double q = 0;
        for (int j = 0; j <= n2; ++j)
            q += std::pow(t.eta2, j) * (P_poly(std::tan(th_hi - j * dth)) - P_poly(std::tan(th_hi - (j + 1) * dth)));
        double m2 = std::pow(1 + 5 / b1, d2) * (p.m3 + p.h2 * K / 12 * q);
        double lhs = p.h2 * K * std::pow(t.eta2, n2) * std::pow(1 + 5 / b1, e.delta2p) * b1 * b1;
        double rhs = m2 * (5 * (e.delta1p - 5) + (1 - e.delta1pp) * b1);
        if (lhs >= t.t12_safety * rhs) {
            p.n2 = n2;
            p.m2 = m2;
            p.margins["T12"] = lhs / rhs - 1;
            break;
        }
    }
    if (p.n2 == 0) throw InfeasibleError("T12", "no subdivision up to n2_max makes the T12 curvature negative");

    p.h1 = p.m2 * (1 - e.delta1pp) * std::pow(b1, e.delta1pp - 1);
    p.m1 = p.h1 / (1 - e.delta1pp) * std::pow(b0, e.delta1pp - 1);

    // T01: discrete curvature on both sides for |alpha| <= c*
    const double B0 = std::llround(b0);
    double h0pmax = INFINITY;
    for (int a = 1; a <= cs && B0 - a >= 2; ++a) {
        double below = p.m1 * (std::pow(1 - a / B0, e.delta1pp - 1) - 1) / level_tail(B0 - a, B0);
        double above = p.m1 * (1 - std::pow(1 + a / B0, e.delta1pp - 1)) / -level_tail(B0 + a, B0);
        h0pmax = std::min({h0pmax, below, above});
    }
    p.h0p = t.h0p_fraction * h0pmax;
    p.margins["T01_h0p"] = 1 - t.h0p_fraction;

    // level table; m0(2) sits at the midpoint of (0, m0(1)(1-delta0) - h0)
    const int top = static_cast<int>(std::ceil(b0));
    p.m0_levels.assign(top + 1, 0.0);
    for (int k = 2; k <= top; ++k) p.m0_levels[k] = p.m1 + p.h0p * level_tail(k, B0);
    const double m02 = p.m0_levels[2];
    p.h0 = t.h0_ratio * m02;
    p.m0_levels[1] = (2 * m02 + p.h0) / (1 - e.delta0);
    p.m0_levels[0] = p.m0_levels[1] + p.h0;
    p.margins["first_level"] = (p.m0_levels[1] * (1 - e.delta0) - p.h0 - m02) / m02;

    p.gamma = global_drift_exponent(e);
    if (v == Variant::crn0) {
        // level 0 gives -LV/V -> h0/(m0(1)+h0), level 1 -> 1 - m0(2)/m0(1)
        double r = std::min(p.h0 / (p.m0_levels[1] + p.h0), 1 - m02 / p.m0_levels[1]);
        p.Ch = t.ch_fraction * r;
    } else {
        // phi = Ch/V; level 0 needs Ch <= h0 * m0(1)
        p.Ch = std::min(0.5, t.ch_fraction * p.h0 * p.m0_levels[1]);
    }
    p.validate();
    return p;
}

PiecewiseLyapunov::PiecewiseLyapunov(LyapunovParams p) : p_(std::move(p)) {
    p_.validate();
    const double b1 = p_.region.b1;
    K_ = (5 + 1 / b1) / (1 - 1 / (b1 * b1));
    const double th_hi = std::atan(b1), th_lo = std::atan(1 / b1);
    const double dth = (th_hi - th_lo) / (p_.n2 + 1);
    rho_.resize(p_.n2 + 2);
    for (int j = 0; j <= p_.n2 + 1; ++j) rho_[j] = std::tan(th_hi - j * dth);
    rho_[0] = b1;
    rho_[p_.n2 + 1] = 1 / b1;
    qcum_.assign(p_.n2 + 2, 0.0);
    for (int j = 0; j <= p_.n2; ++j)
        qcum_[j + 1] = qcum_[j] + std::pow(p_.eta2star, j) * (P_poly(rho_[j]) - P_poly(rho_[j + 1]));
    const int n = static_cast<int>(2 * p_.region.b2) + 64;
    G_.assign(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) G_[k] = G_[k - 1] + (k >= p_.k4 ? series_term(p_.exps, k) : 0.0);
}

double PiecewiseLyapunov::series(double x1) const {
    // partial sums, joined linearly between integers
    if (x1 <= 0) return 0;
    const long long n = static_cast<long long>(std::floor(x1));
    auto at = [this](long long k) {
        if (k < static_cast<long long>(G_.size())) return G_[k];
        double s = G_.back();
        for (long long i = G_.size(); i <= k; ++i) s += series_term(p_.exps, static_cast<int>(i));
        return s;
    };
    const double lo = at(n), fr = x1 - double(n);
    return fr > 0 ? lo + fr * (at(n + 1) - lo) : lo;
}

int PiecewiseLyapunov::sector_of(double r) const {
    const double th_hi = std::atan(p_.region.b1), th_lo = std::atan(1 / p_.region.b1);
    const double dth = (th_hi - th_lo) / (p_.n2 + 1);
    int j = static_cast<int>(std::floor((th_hi - std::atan(r)) / dth));
    return std::clamp(j, 0, p_.n2);
}

double PiecewiseLyapunov::Q(double r) const {
    const int j = sector_of(r);
    return qcum_[j] + std::pow(p_.eta2star, j) * (P_poly(rho_[j]) - P_poly(r));
}

double PiecewiseLyapunov::dQ(double r) const { return -std::pow(p_.eta2star, sector_of(r)) * P_prime(r); }

Piece PiecewiseLyapunov::piece_at(const Point& x) const {
    RegionId r = piece_region(p_.region, x);
    Piece pc{r, 0};
    if (r == RegionId::T2) pc.sector = sector_of(x[1] / x[0]);
    return pc;
}

double PiecewiseLyapunov::piece_value(const Piece& pc, const Point& x) const {
    const auto& e = p_.exps;
    const auto& g = p_.region;
    const double x1 = x[0], x2 = x[1];
    switch (pc.region) {
        case RegionId::T0: {
            const double m01 = p_.m0_levels[1];
            double l0 = m01 * std::pow(x1 + 1, e.delta0) + p_.h0 * std::pow(std::max(x1, 1.0), e.delta0p);
            double l1 = m01 * std::pow(x1, e.delta0);
            if (x2 <= 0) return l0;
            if (x2 <= 1) return (1 - x2) * l0 + x2 * l1;
            // continued upward through the level table
            return std::pow(x1, e.delta0) * (p_.m1 + p_.h0p * level_tail(x2, std::llround(g.b0)));
        }
        case RegionId::T0prime: {
            // below level 2 the tail blows up at 1; continue it linearly instead
            const double B0 = std::llround(g.b0);
            const double tl = x2 >= 2 ? level_tail(x2, B0) : level_tail(2, B0) - 2 * (x2 - 2);
            return std::pow(x1, e.delta0pp - 5) * (p_.m1 + p_.h0p * tl);
        }
        case RegionId::T1:
            return p_.h1 / (1 - e.delta1pp) * std::pow(x1, e.delta1p - 5) * std::pow(x2, e.delta1pp - 1);
        case RegionId::T2: {
            const double S = x1 + 5 * x2, r = x2 / x1;
            const int j = pc.sector;
            double q = qcum_[j] + std::pow(p_.eta2star, j) * (P_poly(rho_[j]) - P_poly(r));
            return std::pow(S, e.delta2()) * (p_.m3 + p_.h2 * K_ / 12 * q);
        }
        case RegionId::T3:
            return p_.h3 / (e.delta3p - 4) * std::pow(x1, e.delta3p - 4) * std::pow(x2, e.delta3pp - 2);
        case RegionId::T4:
            return std::pow(x2, e.delta4) * (p_.m4star + p_.h4 * series(x1)) +
                   p_.c4 * p_.m4 * (x1 - g.b2) * std::pow(x2, e.delta4 - 1);
        default:
            throw std::invalid_argument("piece_value: not an open region");
    }
}

Point PiecewiseLyapunov::piece_gradient(const Piece& pc, const Point& x) const {
    const auto& e = p_.exps;
    const double x1 = x[0], x2 = x[1];
    switch (pc.region) {
        case RegionId::T1: {
            double v = piece_value(pc, x);
            return {v * (e.delta1p - 5) / x1, v * (e.delta1pp - 1) / x2};
        }
        case RegionId::T3: {
            double v = piece_value(pc, x);
            return {v * (e.delta3p - 4) / x1, v * (e.delta3pp - 2) / x2};
        }
        case RegionId::T2: {
            const double S = x1 + 5 * x2, r = x2 / x1, d = e.delta2();
            const int j = pc.sector;
            double q = qcum_[j] + std::pow(p_.eta2star, j) * (P_poly(rho_[j]) - P_poly(r));
            double dq = -std::pow(p_.eta2star, j) * P_prime(r);
            double c = p_.h2 * K_ / 12;
            double base = d * std::pow(S, d - 1) * (p_.m3 + c * q);
            double rad = std::pow(S, d) * c * dq;
            return {base - rad * x2 / (x1 * x1), 5 * base + rad / x1};
        }
        default: {
            // central differences for the lattice pieces
            const double h = 1e-4 * std::max(1.0, std::hypot(x1, x2));
            return {(piece_value(pc, {x1 + h, x2}) - piece_value(pc, {x1 - h, x2})) / (2 * h),
                    (piece_value(pc, {x1, x2 + h}) - piece_value(pc, {x1, x2 - h})) / (2 * h)};
        }
    }
}

double PiecewiseLyapunov::rate_h(const Piece& pc, const Point& x) const {
    const auto& e = p_.exps;
    const double x1 = x[0], x2 = x[1];
    switch (pc.region) {
        case RegionId::T4: return p_.h4 * std::pow(x1, e.delta4p) * std::pow(x2, e.delta4pp);
        case RegionId::T3: return p_.h3 * std::pow(x1, e.delta3p) * std::pow(x2, e.delta3pp);
        case RegionId::T2: return p_.h2 * std::pow(p_.eta2star, pc.sector) * std::pow(x1 + 5 * x2, e.delta2p);
        case RegionId::T1: return p_.h1 * std::pow(x1, e.delta1p) * std::pow(x2, e.delta1pp);
        case RegionId::T0prime: return p_.h0p * std::pow(x1, e.delta0pp);
        case RegionId::T0: return p_.h0 * std::pow(std::max(x1, 1.0), e.delta0p);
        default: throw std::invalid_argument("rate_h: not an open region");
    }
}

Evaluation PiecewiseLyapunov::evaluate(const State& s) const {
    Point x{double(s[0]), double(s[1])};
    Piece pc = piece_at(x);
    return {piece_value(pc, x), pc, rate_h(pc, x)};
}

void PiecewiseLyapunov::write_surface_csv(std::ostream& os, std::int64_t x1_max, std::int64_t x2_max,
                                          std::int64_t stride) const {
    os << "x1,x2,region,V,h\n" << std::setprecision(12);
    for (std::int64_t a = 0; a <= x1_max; a += stride)
        for (std::int64_t b = 0; b <= x2_max; b += stride) {
            auto ev = evaluate({a, b});
            os << a << "," << b << "," << region_name(classify_region(p_.region, {a, b})) << "," << ev.value << ","
               << ev.rate << "\n";
        }
}

double alt_piece_value(RegionId region, const Point& x, double chi, const LyapunovParams& p) {
    if (!(chi > 0)) throw std::invalid_argument("alt_piece_value: chi must be positive");
    const double d4 = p.exps.delta4, b1 = p.region.b1, b2 = p.region.b2;
    const double x1 = x[0], x2 = x[1];
    auto v3 = [&](double y1, double y2) { return std::pow(y2, d4) * (chi * p.m4 + p.h3 * (y1 - chi * b2)); };
    // trace on T23 along the r3 characteristic, plus h2 times the travelled length
    auto v2 = [&](double y1, double y2) {
        const double S = y1 + 5 * y2, u = S / (1 + 5 * b1);
        const double len = std::sqrt(26.0) * (b1 * y1 - y2) / (1 + 5 * b1);
        return v3(u, b1 * u) + p.h2 * std::pow(S, d4) * len;
    };
    switch (region) {
        case RegionId::T3: return v3(x1, x2);
        case RegionId::T2: return v2(x1, x2);
        case RegionId::T1: return v2(x1, x1 / b1) + p.h1 * std::pow(x1, d4) * (x1 / b1 - x2);
        default: throw std::invalid_argument("alt_piece_value: region must be T1, T2 or T3");
    }
}

void write_params(std::ostream& os, const LyapunovParams& p) {
    os << std::setprecision(17);
    const auto& e = p.exps;
    os << "variant " << variant_name(e.variant) << "\n";
    os << "delta0 " << e.delta0 << "\neps " << e.eps << "\n";
    os << "b0 " << p.region.b0 << "\nb1 " << p.region.b1 << "\nb2 " << p.region.b2 << "\nrho " << p.region.rho << "\n";
    os << "h0 " << p.h0 << "\nh0p " << p.h0p << "\nh1 " << p.h1 << "\nh2 " << p.h2 << "\nh3 " << p.h3 << "\nh4 " << p.h4
       << "\n";
    os << "m1 " << p.m1 << "\nm2 " << p.m2 << "\nm3 " << p.m3 << "\nm4 " << p.m4 << "\nm4star " << p.m4star << "\n";
    os << "eta2star " << p.eta2star << "\nn2 " << p.n2 << "\nCh " << p.Ch << "\ngamma " << p.gamma << "\n";
    os << "k4 " << p.k4 << "\nc4 " << p.c4 << "\n";
    os << "m0_levels";
    for (double m : p.m0_levels) os << " " << m;
    os << "\n";
    for (const auto& [k, v] : p.margins) os << "margin." << k << " " << v << "\n";
}

LyapunovParams read_params(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto sp = line.find(' ');
        if (sp == std::string::npos) throw std::invalid_argument("read_params: bad line '" + line + "'");
        kv[line.substr(0, sp)] = line.substr(sp + 1);
    }
    auto num = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::invalid_argument("read_params: missing " + k);
        return std::stod(it->second);
    };
    LyapunovParams p;
    p.exps = derive_exponents(num("delta0"), num("eps"), variant_from_name(kv.at("variant")), 7);
    p.region = {num("b0"), num("b1"), num("b2"), num("rho")};
    p.h0 = num("h0"); p.h0p = num("h0p"); p.h1 = num("h1"); p.h2 = num("h2"); p.h3 = num("h3"); p.h4 = num("h4");
    p.m1 = num("m1"); p.m2 = num("m2"); p.m3 = num("m3"); p.m4 = num("m4"); p.m4star = num("m4star");
    p.eta2star = num("eta2star");
    p.n2 = static_cast<int>(num("n2"));
    p.Ch = num("Ch");
    p.gamma = num("gamma");
    p.k4 = static_cast<int>(num("k4"));
    p.c4 = num("c4");
    std::istringstream ms(kv.at("m0_levels"));
    for (double m; ms >> m;) p.m0_levels.push_back(m);
    for (const auto& [k, v] : kv)
        if (k.rfind("margin.", 0) == 0) p.margins[k.substr(7)] = std::stod(v);
    p.validate();
    return p;
}

}  // namespace crnlab
