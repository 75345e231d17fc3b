#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "crnlab/ssa.hpp"

namespace crnlab {

// Analytic (idealized) tube law at level x2 = 1.
std::pair<double, double> tube_jump_probs(Variant v, std::int64_t x1);
// Exact propensity ratio at (x1, 1) of the builtin network.
double tube_exact_up(Variant v, std::int64_t x1);

// Probability that the chain started at (k0,1) is absorbed at (b+1,2).
double exit_distribution(Variant v, std::int64_t k0, std::int64_t b);

// 1 - sum_{k>k0} 1/(k^2+1), tail error below 1e-10
double transience_lower_bound(std::int64_t k0);

struct ReturnMeanVerdict {
    bool finite;
    std::string certificate;
};
ReturnMeanVerdict mean_return_time_diverges(Variant v, std::int64_t k0);
// sum_{b=k0}^{B} P(b) (b - k0): the part of E[tau] carried by exits up to B
double truncated_exit_mean(Variant v, std::int64_t k0, std::int64_t B);

struct ExitLaw {
    std::int64_t k0 = 0;
    std::int64_t n = 0;
    std::map<std::int64_t, std::int64_t> counts;  // b -> absorptions at (b+1,2)
    std::int64_t censored = 0;
    double mass(std::int64_t b) const;
};

ExitLaw exit_distribution_mc(Variant v, std::int64_t k0, std::int64_t n, std::uint64_t seed,
                             std::int64_t max_steps = 1000000);

void write_exit_law_csv(std::ostream& os, Variant v, const ExitLaw& law, std::int64_t b_max);

// Pearson chi-square of empirical counts on b in [b_lo, b_hi] plus one pooled
// remainder cell; returns (statistic, p-value).
std::pair<double, double> exit_law_chi_square(Variant v, const ExitLaw& law, std::int64_t b_lo,
                                              std::int64_t b_hi);

}  // namespace crnlab
