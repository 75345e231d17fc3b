#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "crnlab/lyapunov.hpp"
#include "crnlab/network.hpp"
#include "crnlab/ssa.hpp"

namespace crnlab {

// ---- drift ----

struct DriftAt {
    double LV, phiV, margin;
};
DriftAt drift_at(const Network& net, const PiecewiseLyapunov& V, const State& x);

struct Annulus {
    double r_min = 200, r_max = 2000;
    int stride = 7;       // interior stride
    int band = 7;         // stride 1 within this distance of an interface
};

struct DriftViolation {
    State x;
    double LV, phiV;
    RegionId region;
};

struct DriftReport {
    Annulus annulus;
    std::int64_t points = 0;
    double worst_margin = INFINITY;
    State worst_x;
    std::vector<DriftViolation> violations;
    std::map<std::string, std::int64_t> points_by_region;
};

// True when x lies within `band` of an interface or a T2 sector ray.
bool near_interface(const PiecewiseLyapunov& V, const State& x, double band);
// Result independent of the thread count.
DriftReport verify_drift(const Network& net, const PiecewiseLyapunov& V, const Annulus& a, int threads = 1);
void write_drift_csv(std::ostream& os, const DriftReport& rep);

// ---- curvature and flux ----

struct CurvatureSample {
    State x;
    int alpha;      // 0 for the gradient form
    double value;
};
struct CurvatureReport {
    RegionId iface;
    Point c_perp;
    std::vector<CurvatureSample> samples;
    double worst() const;
};

// Gradient form on T12/T23; the largest discrete kappa over 1 <= |alpha| <= c* on T01/T34/T00.
double interface_curvature(const PiecewiseLyapunov& V, RegionId iface, const State& x, int c_star = 7);
CurvatureReport curvature_samples(const PiecewiseLyapunov& V, RegionId iface, const std::vector<State>& xs,
                                  int c_star = 7);
Point interface_normal(const RegionParams& p, RegionId iface);

struct FluxTerm {
    int reaction;
    Piece from, to;
    double beta;        // crossing fraction along c^r
    double lambda;      // propensity at x
    double flux;        // [Vj(x+c) - Vj(x*)] - [Vi(x+c) - Vi(x*)]
    double defect;      // Vj(x*) - Vi(x*), zero on continuous interfaces
    bool dominated;     // |flux| <= 0.5 h(x) / lambda
};
std::vector<FluxTerm> flux_terms(const Network& net, const PiecewiseLyapunov& V, const State& x);
// Generator applied to the piece of x continued across every interface.
double piece_generator(const Network& net, const PiecewiseLyapunov& V, const State& x);

// ---- measures ----

struct StateHash {
    std::size_t operator()(const State& s) const;
};

struct OccupationMeasure {
    std::unordered_map<State, double, StateHash> weights;
    double total_time = 0;
    std::vector<std::pair<State, double>> sorted() const;
};
OccupationMeasure occupation_measure(const Network& net, const State& x0, std::int64_t n_jumps, Rng& rng);
double tv_distance(const OccupationMeasure& a, const OccupationMeasure& b);

struct MomentCurve {
    std::vector<double> cumulative;  // at deciles 1..10 of the V-ordered support
    double total = 0;
    double last_decile_fraction() const;
};
MomentCurve phi_moment(const OccupationMeasure& mu, const PiecewiseLyapunov& V);

// ---- return times ----

struct ReturnTimeSamples {
    std::vector<double> tau;  // uncensored
    std::int64_t censored = 0;
    std::int64_t n = 0;
    double R = 0;
    std::vector<double> censored_norms;  // distance from the origin when the budget ran out
    double censored_fraction() const { return n ? double(censored) / double(n) : 0.0; }
};

struct TailFit {
    double slope = 0, lo = 0, hi = 0;  // point estimate and 95% bootstrap interval
    std::size_t points = 0;
};

ReturnTimeSamples return_time_samples(const Network& net, double R, const State& x0, std::int64_t n,
                                      std::int64_t budget_jumps, std::uint64_t seed, int threads = 1);
// log-log slope of the empirical survival over S in [s_min, s_max]
TailFit tail_slope(const ReturnTimeSamples& s, double s_min, double s_max, int boot, std::uint64_t seed);
// mean of min(tau, T) with censored samples counted at T
double truncated_mean(const ReturnTimeSamples& s, double T);

// ---- rates ----

struct PowerPhi {
    double C = 1, gamma = 1;  // phi(s) = C s^gamma
};
double H_phi(double u, const PowerPhi& phi);
double H_phi_inverse(double t, const PowerPhi& phi);

struct CouplingEstimate {
    double t;
    double p;       // fraction not coupled by t
    double stderr_;
};
std::vector<CouplingEstimate> tv_coupling_estimate(const Network& net, const State& x, const State& y,
                                                   const std::vector<double>& ts, std::int64_t n, std::uint64_t seed,
                                                   std::int64_t max_jumps = 10000000);

// ---- classification ----

enum class Stability { positive_recurrent, null_recurrent, transient, inconclusive };
const char* stability_name(Stability s);

struct ClassifyConfig {
    State x0{100, 0};
    double R = 50;
    std::int64_t n = 4000;
    std::int64_t budget_jumps = 1000000;
    std::uint64_t seed = 0;
    double transient_censored = 0.05;
    double null_slope_floor = -1.5;
    double null_mean_growth = 0.20;
    double tail_s_min = 0.0;  // 0 means 20/n
    double tail_s_max = 0.05;
    int bootstrap = 200;
    int threads = 1;
};

struct Classification {
    Stability verdict = Stability::inconclusive;
    ReturnTimeSamples samples;
    TailFit tail;
    std::vector<double> truncated_means;  // at 4,8,16,32,64 times the median
    double mean_growth = 0;
    double mean_norm_censored = 0;
    std::string evidence;
};
Classification classify_stability(const Network& net, const ClassifyConfig& cfg);

}  // namespace crnlab
