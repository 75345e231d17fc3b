#include "crnlab/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include <boost/numeric/odeint.hpp>

namespace crnlab {

namespace ode = boost::numeric::odeint;

std::vector<double> ode_rhs(const Network& net, const Concentration& x) {
    std::vector<double> f(net.d(), 0.0);
    for (int r = 0; r < net.size(); ++r) {
        double lam = mass_action_rate(net, r, x);
        if (lam == 0.0) continue;
        const auto& v = net.vec(r);
        for (int i = 0; i < net.d(); ++i) f[i] += lam * double(v[i]);
    }
    return f;
}

OdePath integrate(const Network& net, const Concentration& x0, double t_end, double tol) {
    if (!(t_end > 0) || !(tol > 0)) throw std::invalid_argument("integrate: need t_end > 0 and tol > 0");
    using Vec = std::vector<double>;
    auto sys = [&net](const Vec& x, Vec& dx, double) {
        // the field is evaluated on the clipped state so trial stages stay meaningful
        Vec y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::max(x[i], 0.0);
        dx = ode_rhs(net, y);
    };
    auto stepper = ode::make_controlled(tol, tol, ode::runge_kutta_dopri5<Vec>());
    OdePath path{{0.0, x0}};
    Vec x = x0;
    double t = 0.0;
    double dt = std::min(1e-3, t_end);
    const double dt_min = 1e-14 * std::max(1.0, t_end);
    while (t < t_end) {
        dt = std::min(dt, t_end - t);
        double t_try = t;
        Vec trial = x;
        auto res = stepper.try_step(sys, trial, t_try, dt);
        if (res == ode::fail) {
            if (dt < dt_min) throw IntegrationError("step size underflow", t);
            continue;  // dt was reduced by the controller
        }
        for (double& v : trial) {
            if (v <= -tol) throw IntegrationError("state left the nonnegative orthant", t);
            if (v < 0) v = 0;
        }
        if (t_try >= t_end - 1e-15 * std::max(1.0, t_end)) t_try = t_end;
        t = t_try;
        x = std::move(trial);
        path.push_back({t, x});
    }
    return path;
}

Concentration path_at(const OdePath& path, double t) {
    if (t <= path.front().t) return path.front().x;
    if (t >= path.back().t) return path.back().x;
    auto it = std::lower_bound(path.begin(), path.end(), t,
                               [](const OdeSample& s, double v) { return s.t < v; });
    const auto& b = *it;
    const auto& a = *(it - 1);
    double w = (t - a.t) / (b.t - a.t);
    Concentration x(a.x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1 - w) * a.x[i] + w * b.x[i];
    return x;
}

std::vector<GridPoint> vector_field_grid(const Network& net, double x1_lo, double x1_hi, double x2_lo,
                                         double x2_hi, int n) {
    if (n < 2) throw std::invalid_argument("vector_field_grid: n < 2");
    if (x1_hi < x1_lo || x2_hi < x2_lo) throw std::invalid_argument("vector_field_grid: bad bounds");
    std::vector<GridPoint> g;
    const bool deg1 = x1_hi == x1_lo, deg2 = x2_hi == x2_lo;
    const int n1 = deg1 ? 1 : n, n2 = deg2 ? 1 : n;
    for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i) {
            Concentration x = {deg1 ? x1_lo : x1_lo + (x1_hi - x1_lo) * i / (n - 1),
                               deg2 ? x2_lo : x2_lo + (x2_hi - x2_lo) * j / (n - 1)};
            g.push_back({x, ode_rhs(net, x)});
        }
    return g;
}

void write_path_csv(std::ostream& os, const OdePath& path) {
    os << "t,x1,x2\n" << std::setprecision(17);
    for (const auto& s : path) os << s.t << "," << s.x[0] << "," << s.x[1] << "\n";
}

void write_grid_csv(std::ostream& os, const std::vector<GridPoint>& grid) {
    os << "x1,x2,f1,f2\n" << std::setprecision(17);
    for (const auto& g : grid) os << g.x[0] << "," << g.x[1] << "," << g.f[0] << "," << g.f[1] << "\n";
}

Network volume_scaled(const Network& net, double v) {
    if (!(v > 0)) throw std::invalid_argument("volume_scaled: v must be positive");
    std::vector<Reaction> rs = net.reactions();
    for (auto& r : rs) {
        int n = 0;
        for (int c : r.c_in) n += c;
        r.kappa *= std::pow(v, 1 - n);
    }
    return Network(net.species(), rs);
}

}  // namespace crnlab
