#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crnlab {

using State = std::vector<std::int64_t>;
using Concentration = std::vector<double>;

struct Reaction {
    std::vector<int> c_in;
    std::vector<int> c_out;
    double kappa = 1.0;
};

class NetworkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable after construction. The constructor enforces the invariants.
class Network {
public:
    Network(std::vector<std::string> species, std::vector<Reaction> reactions);

    int d() const { return static_cast<int>(species_.size()); }
    int size() const { return static_cast<int>(reactions_.size()); }
    const std::vector<std::string>& species() const { return species_; }
    const std::vector<Reaction>& reactions() const { return reactions_; }
    const Reaction& reaction(int r) const { return reactions_.at(r); }
    const std::vector<std::int64_t>& vec(int r) const { return vecs_.at(r); }
    // nonzero entries of c_in as (species, coefficient)
    const std::vector<std::pair<int, int>>& inputs(int r) const { return inputs_[r]; }

    // max 1-norm over all input and output complexes
    int c_star() const;

    bool operator==(const Network& o) const;

private:
    std::vector<std::string> species_;
    std::vector<Reaction> reactions_;
    std::vector<std::vector<std::int64_t>> vecs_;
    std::vector<std::vector<std::pair<int, int>>> inputs_;
};

Network builtin_network(const std::string& name);
Network parse_network(const std::string& text);
Network load_network(const std::string& name_or_path);
std::string format_network(const Network& net);

// Stochastic propensity: kappa * prod falling factorials.
double propensity(const Network& net, int r, const State& x);
// Deterministic rate kappa * prod x_i^{c_in_i}, 0^0 = 1.
double mass_action_rate(const Network& net, int r, const Concentration& x);
std::vector<std::int64_t> reaction_vector(const Network& net, int r);
double total_propensity(const Network& net, const State& x);

using StateFn = std::function<double(const State&)>;
double apply_generator(const Network& net, const StateFn& f, const State& x);

// falling factorial a(a-1)...(a-k+1), 0 when a < k
__int128 falling(std::int64_t a, int k);

}  // namespace crnlab
