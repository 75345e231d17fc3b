#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <variant>
#include <vector>

#include "crnlab/network.hpp"

namespace crnlab {

using Rng = std::mt19937_64;

// Independent substream for trajectory `index` of a run seeded with `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

struct Event {
    double t;
    State x;
};
using Trajectory = std::vector<Event>;

using StatePredicate = std::function<bool(const State&)>;

struct StopCondition {
    std::optional<double> max_time;
    std::optional<std::int64_t> max_jumps;
    StatePredicate absorb;
};

struct Jump {
    double dt;
    State next;
    int reaction;
};
struct Absorbed {};
using StepResult = std::variant<Jump, Absorbed>;

StepResult step(const Network& net, const State& x, Rng& rng);
// Allocation-free variant: advances x, stores the holding time in dt and
// returns the fired reaction, or -1 when every propensity vanishes.
int step_inplace(const Network& net, State& x, Rng& rng, double& dt);
// Embedded jump chain only: same reaction law as step_inplace, no holding time.
int jump_inplace(const Network& net, State& x, Rng& rng);

Trajectory simulate(const Network& net, const State& x0, const StopCondition& stop, Rng& rng);

struct HitResult {
    bool hit = false;
    double tau = 0.0;
    State at;
    std::int64_t jumps_taken = 0;
};

// First t > 0 with X_t in target; a start inside target does not count.
HitResult hitting_time(const Network& net, const State& x0, const StatePredicate& target,
                       const StopCondition& budget, Rng& rng);

enum class Variant { crn0, crn1, crn2 };
Variant variant_from_name(const std::string& name);
const char* variant_name(Variant v);

// Embedded chain on {x2 < 2}: from (x1,0) to (x1+1,1); from (x1,1) up to
// (x1+1,2) (absorbing) or down to (x1,0).
std::vector<State> embedded_tube_chain(Variant v, const State& x0, std::int64_t n, Rng& rng);

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

}  // namespace crnlab
