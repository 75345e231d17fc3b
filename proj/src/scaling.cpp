#include "crnlab/scaling.hpp"

#include <cmath>
#include <stdexcept>

namespace crnlab {

ScalingVector::ScalingVector(double w1, double w2) {
    if (w1 < 0 || w2 < 0 || (w1 == 0 && w2 == 0)) throw std::invalid_argument("scaling vector must be nonnegative and nonzero");
    double n = std::hypot(w1, w2);
    w = {w1 / n, w2 / n};
}

Point scale(const ScalingVector& w, double l, const Point& x) {
    if (l < 1) throw std::invalid_argument("scale: l < 1");
    return {std::pow(l, w.w[0]) * x[0], std::pow(l, w.w[1]) * x[1]};
}

ToricCoordinates toric_coordinates(const Point& z, int c_star) {
    if (!(z[0] > 0 && z[1] > 0)) throw std::invalid_argument("toric_coordinates: z must be strictly positive");
    ToricCoordinates tc;
    tc.c_star = c_star;
    double a = std::log(z[0] / (2.0 * c_star)), b = std::log(z[1] / (2.0 * c_star));
    double n = std::hypot(a, b);
    tc.theta = std::exp(n);
    if (n == 0.0) {
        tc.degenerate = true;
        return tc;
    }
    tc.w = {a / n, b / n};
    return tc;
}

Point from_toric(const ToricCoordinates& tc) {
    double lt = std::log(tc.theta);
    return {2.0 * tc.c_star * std::exp(lt * tc.w[0]), 2.0 * tc.c_star * std::exp(lt * tc.w[1])};
}

void RegionParams::validate() const {
    if (!(b0 > 2)) throw std::invalid_argument("RegionParams: b0 must exceed 2");
    if (!(b1 > 1)) throw std::invalid_argument("RegionParams: b1 must exceed 1");
    if (!(b2 > 5)) throw std::invalid_argument("RegionParams: b2 must exceed 5");
    if (!(rho > std::max(b0, b2))) throw std::invalid_argument("RegionParams: rho must exceed max(b0, b2)");
}

const char* region_name(RegionId r) {
    static const char* names[] = {"T0", "T0prime", "T1", "T2", "T3", "T4", "T00", "T01", "T12", "T23", "T34", "T4star"};
    return names[static_cast<int>(r)];
}

bool is_interface(RegionId r) { return static_cast<int>(r) >= static_cast<int>(RegionId::T00); }

RegionId classify_region(const RegionParams& p, const State& s) {
    const double x1 = double(s[0]), x2 = double(s[1]);
    if (s[1] <= 1) return RegionId::T0;
    if (s[1] == 2) return RegionId::T00;
    if (std::abs(x2 - p.b0) < 0.5) return RegionId::T01;
    if (x2 < p.b0) return RegionId::T0prime;
    if (std::abs(x2 * p.b1 - x1) < p.b1) return RegionId::T12;
    if (x2 < x1 / p.b1) return RegionId::T1;
    if (x1 >= p.b2 - 1) {
        if (std::abs(x2 - p.b1 * x1) < p.b1) return RegionId::T23;
        if (x2 < p.b1 * x1) return RegionId::T2;
        if (std::abs(x1 - p.b2) < 1) return RegionId::T34;
        if (x1 > p.b2) return RegionId::T3;
    }
    if (x2 < p.b1 * x1) return RegionId::T2;
    return s[0] == 0 ? RegionId::T4star : RegionId::T4;
}

RegionId piece_region(const RegionParams& p, const Point& x) {
    if (x[1] < 1.5) return RegionId::T0;
    if (x[1] <= p.b0) return RegionId::T0prime;
    if (x[1] * p.b1 <= x[0]) return RegionId::T1;
    if (x[1] < p.b1 * x[0]) return RegionId::T2;
    return x[0] >= p.b2 ? RegionId::T3 : RegionId::T4;
}

ExposedSet exposed_reactions(const Network& net, const ScalingVector& w) {
    ExposedSet e;
    const double tol = 1e-12;
    e.plain_value = -INFINITY;
    e.lifted_value = -INFINITY;
    for (int r = 0; r < net.size(); ++r) {
        const auto& rx = net.reaction(r);
        double plain = 0;
        for (int i = 0; i < net.d(); ++i) plain += w.w[i] * rx.c_in[i];
        if (plain > e.plain_value + tol) {
            e.plain_value = plain;
            e.plain = {r};
        } else if (std::abs(plain - e.plain_value) <= tol) {
            e.plain.insert(r);
        }
        for (int i = 0; i < net.d(); ++i) {
            if (net.vec(r)[i] == 0) continue;
            double v = plain - w.w[i];
            if (v > e.lifted_value + tol) {
                e.lifted_value = v;
                e.lifted = {r};
            } else if (std::abs(v - e.lifted_value) <= tol) {
                e.lifted.insert(r);
            }
        }
    }
    return e;
}

double homogeneity_check(const PointFn& f, const ScalingVector& w, double delta, const std::vector<Point>& samples,
                         const std::vector<double>& l_values) {
    double worst = 0.0;
    for (const auto& x : samples) {
        if (!(x[0] > 0 && x[1] > 0)) throw std::invalid_argument("homogeneity_check: samples must be positive");
        double fx = f(x);
        if (fx == 0.0) throw std::invalid_argument("homogeneity_check: f vanishes at a sample");
        for (double l : l_values) {
            double ld = std::pow(l, delta);
            double dev = std::abs(f(scale(w, l, x)) - ld * fx) / (ld * std::abs(fx));
            worst = std::max(worst, dev);
        }
    }
    return worst;
}

void write_region_map_csv(std::ostream& os, const RegionParams& p, std::int64_t x1_max, std::int64_t x2_max) {
    os << "x1,x2,region\n";
    for (std::int64_t a = 0; a <= x1_max; ++a)
        for (std::int64_t b = 0; b <= x2_max; ++b) os << a << "," << b << "," << region_name(classify_region(p, {a, b})) << "\n";
}

}  // namespace crnlab
