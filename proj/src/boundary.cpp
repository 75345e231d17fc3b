#include "crnlab/boundary.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace crnlab {

std::pair<double, double> tube_jump_probs(Variant v, std::int64_t x1) {
    if (x1 < 1) throw std::invalid_argument("tube_jump_probs: x1 < 1");
    double w;  // relative weight of the downward jump
    switch (v) {
        case Variant::crn0: w = 1.0; break;
        case Variant::crn1: w = double(x1); break;
        default: w = double(x1) * double(x1); break;
    }
    return {1.0 / (1.0 + w), w / (1.0 + w)};
}

double tube_exact_up(Variant v, std::int64_t x1) {
    static const Network nets[3] = {builtin_network("crn0"), builtin_network("crn1"), builtin_network("crn2")};
    const Network& net = nets[static_cast<int>(v)];
    double down = propensity(net, 1, {x1, 1});
    return 1.0 / (1.0 + down);
}

double exit_distribution(Variant v, std::int64_t k0, std::int64_t b) {
    if (k0 < 1 || b < k0) throw std::invalid_argument("exit_distribution: need b >= k0 >= 1");
    if (v == Variant::crn0) return 0.5 * std::pow(0.5, double(b - k0));
    if (v == Variant::crn1) return double(k0) / (double(b) * double(b + 1));
    throw std::invalid_argument("exit_distribution: crn2 has no normalized exit law");
}

double transience_lower_bound(std::int64_t k0) {
    if (k0 < 0) throw std::invalid_argument("transience_lower_bound: k0 < 0");
    const std::int64_t N = k0 + 200000;
    double s = 0.0;
    for (std::int64_t k = N; k > k0; --k) s += 1.0 / (double(k) * double(k) + 1.0);
    // tail over k > N sits between the integrals from N+1 and from N
    double lo = M_PI / 2 - std::atan(double(N + 1));
    double hi = M_PI / 2 - std::atan(double(N));
    return 1.0 - (s + 0.5 * (lo + hi));
}

ReturnMeanVerdict mean_return_time_diverges(Variant v, std::int64_t k0) {
    if (k0 < 1) throw std::invalid_argument("mean_return_time_diverges: k0 < 1");
    if (v == Variant::crn2) throw std::invalid_argument("crn2: the chain need not return; use transience_lower_bound");
    if (v == Variant::crn1) {
        return {false, "x0*integral_{k0+1}^inf (k-x0)/(k(k+1)) dk = inf: integrand ~ 1/k (k0=" +
                           std::to_string(k0) + ")"};
    }
    return {true, "geometric exit law (1/2)^{b-k0+1}: sum (b-k0) 2^{-(b-k0+1)} = 1"};
}

double truncated_exit_mean(Variant v, std::int64_t k0, std::int64_t B) {
    double s = 0.0;
    for (std::int64_t b = k0; b <= B; ++b) s += exit_distribution(v, k0, b) * double(b - k0);
    return s;
}

double ExitLaw::mass(std::int64_t b) const {
    auto it = counts.find(b);
    return n > 0 && it != counts.end() ? double(it->second) / double(n) : 0.0;
}

ExitLaw exit_distribution_mc(Variant v, std::int64_t k0, std::int64_t n, std::uint64_t seed,
                             std::int64_t max_steps) {
    ExitLaw law;
    law.k0 = k0;
    law.n = n;
    std::vector<double> up;  // cached exact up-probabilities
    for (std::int64_t i = 0; i < n; ++i) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        std::int64_t x1 = k0;
        bool done = false;
        // start on level 1; each loop is one visit to (x1,1)
        for (std::int64_t steps = 0; steps < max_steps; steps += 2) {
            std::size_t idx = static_cast<std::size_t>(x1 - k0);
            while (up.size() <= idx) up.push_back(tube_exact_up(v, k0 + std::int64_t(up.size())));
            if (U(rng) < up[idx]) {
                ++law.counts[x1];
                done = true;
                break;
            }
            ++x1;  // down to (x1,0), then forced to (x1+1,1)
        }
        if (!done) ++law.censored;
    }
    return law;
}

void write_exit_law_csv(std::ostream& os, Variant v, const ExitLaw& law, std::int64_t b_max) {
    os << "b,analytic,empirical,stderr\n" << std::setprecision(12);
    for (std::int64_t b = law.k0; b <= b_max; ++b) {
        double p = v == Variant::crn2 ? NAN : exit_distribution(v, law.k0, b);
        double q = law.mass(b);
        double se = std::sqrt(std::max(p == p ? p : q, 1e-300) * (1 - (p == p ? p : q)) / double(law.n));
        os << b << "," << p << "," << q << "," << se << "\n";
    }
}

std::pair<double, double> exit_law_chi_square(Variant v, const ExitLaw& law, std::int64_t b_lo,
                                              std::int64_t b_hi) {
    double stat = 0.0, p_in = 0.0;
    std::int64_t c_in = 0;
    for (std::int64_t b = b_lo; b <= b_hi; ++b) {
        double p = exit_distribution(v, law.k0, b);
        auto it = law.counts.find(b);
        double o = it == law.counts.end() ? 0.0 : double(it->second);
        double e = p * double(law.n);
        stat += (o - e) * (o - e) / e;
        p_in += p;
        c_in += static_cast<std::int64_t>(o);
    }
    double e_rest = (1.0 - p_in) * double(law.n);
    double o_rest = double(law.n - c_in);
    int dof = static_cast<int>(b_hi - b_lo);
    if (e_rest > 0) {
        stat += (o_rest - e_rest) * (o_rest - e_rest) / e_rest;
        ++dof;
    }
    boost::math::chi_squared dist(dof);
    return {stat, boost::math::cdf(boost::math::complement(dist, stat))};
}

}  // namespace crnlab
