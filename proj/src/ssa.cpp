#include "crnlab/ssa.hpp"

#include <iomanip>

#include "crnlab/boundary.hpp"

namespace crnlab {

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
    return Rng(seq);
}

namespace {

// fires one reaction chosen with probability proportional to its propensity;
// the total rate goes to total, -1 when every propensity vanishes
int fire(const Network& net, State& x, Rng& rng, double& total) {
    const int R = net.size();
    double a[16];
    std::vector<double> big;
    double* props = a;
    if (R > 16) {
        big.resize(R);
        props = big.data();
    }
    total = 0.0;
    for (int r = 0; r < R; ++r) {
        props[r] = propensity(net, r, x);
        total += props[r];
    }
    if (total <= 0.0) return -1;
    double u = double(rng() >> 11) * 0x1.0p-53 * total;
    int pick = R - 1;
    for (int r = 0; r < R; ++r) {
        if (u < props[r]) {
            pick = r;
            break;
        }
        u -= props[r];
    }
    while (props[pick] == 0.0) --pick;  // u landed on the rounding slack at the top
    const auto& v = net.vec(pick);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += v[i];
    return pick;
}

}  // namespace

int step_inplace(const Network& net, State& x, Rng& rng, double& dt) {
    // holding time by inversion from the first 53-bit uniform, then the reaction
    const double u0 = double(rng() >> 11) * 0x1.0p-53;
    double total;
    const int pick = fire(net, x, rng, total);
    if (pick >= 0) dt = -std::log(1.0 - u0) / total;
    return pick;
}

int jump_inplace(const Network& net, State& x, Rng& rng) {
    double total;
    return fire(net, x, rng, total);
}

StepResult step(const Network& net, const State& x, Rng& rng) {
    State next = x;
    double dt = 0;
    int r = step_inplace(net, next, rng, dt);
    if (r < 0) return Absorbed{};
    return Jump{dt, std::move(next), r};
}

Trajectory simulate(const Network& net, const State& x0, const StopCondition& stop, Rng& rng) {
    Trajectory tr;
    tr.push_back({0.0, x0});
    State x = x0, prev = x0;
    double t = 0.0, dt = 0.0;
    std::int64_t jumps = 0;
    for (;;) {
        if (stop.max_jumps && jumps >= *stop.max_jumps) break;
        if (stop.absorb && stop.absorb(x)) break;
        prev = x;
        if (step_inplace(net, x, rng, dt) < 0) break;
        if (stop.max_time && t + dt > *stop.max_time) {
            x = prev;
            break;
        }
        t += dt;
        ++jumps;
        tr.push_back({t, x});
    }
    return tr;
}

HitResult hitting_time(const Network& net, const State& x0, const StatePredicate& target,
                       const StopCondition& budget, Rng& rng) {
    HitResult res;
    State x = x0, prev = x0;
    double t = 0.0, dt = 0.0;
    for (;;) {
        if (budget.max_jumps && res.jumps_taken >= *budget.max_jumps) break;
        prev = x;
        if (step_inplace(net, x, rng, dt) < 0) break;
        if (budget.max_time && t + dt > *budget.max_time) {
            x = prev;
            break;
        }
        t += dt;
        ++res.jumps_taken;
        if (target(x)) {
            res.hit = true;
            res.tau = t;
            res.at = x;
            return res;
        }
    }
    res.at = x;
    return res;
}

Variant variant_from_name(const std::string& name) {
    if (name == "crn0") return Variant::crn0;
    if (name == "crn1") return Variant::crn1;
    if (name == "crn2") return Variant::crn2;
    throw NetworkError("unknown variant '" + name + "'");
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::crn0: return "crn0";
        case Variant::crn1: return "crn1";
        default: return "crn2";
    }
}

std::vector<State> embedded_tube_chain(Variant v, const State& x0, std::int64_t n, Rng& rng) {
    std::vector<State> out{x0};
    State x = x0;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (std::int64_t k = 0; k < n && x[1] < 2; ++k) {
        if (x[1] == 0) {
            x = {x[0] + 1, 1};
        } else {
            if (U(rng) < tube_exact_up(v, x[0])) x = {x[0] + 1, 2};
            else x = {x[0], 0};
        }
        out.push_back(x);
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t";
    if (!tr.empty())
        for (std::size_t i = 0; i < tr[0].x.size(); ++i) os << ",x" << i + 1;
    os << "\n" << std::setprecision(17);
    for (const auto& e : tr) {
        os << e.t;
        for (auto v : e.x) os << "," << v;
        os << "\n";
    }
}

}  // namespace crnlab
