#pragma once

#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crnlab/scaling.hpp"
#include "crnlab/ssa.hpp"

namespace crnlab {

struct ExponentTable {
    double delta0 = 0, eps = 0;
    double delta0p = 0, delta0pp = 0, delta1p = 0, delta1pp = 0, delta2p = 0;
    double delta3p = 0, delta3pp = 0, delta4 = 0, delta4pp = 0, delta4p = 0, delta4star = 0;
    Variant variant = Variant::crn0;

    double delta1() const { return delta1p - 5; }          // V1 exponent in x1 on T12 traces
    double delta2() const { return delta2p - 6; }          // V2 degree
    double delta3() const { return delta3p + delta3pp - 6; }
};

ExponentTable derive_exponents(double delta0, double eps, Variant v, int c_star);

// Knobs for select_parameters. Fractions are of the largest value a margin allows.
struct TuningTargets {
    double m4_fraction = 0.6;   // of the T34 bound on m4
    int k4 = 14;                // first index of the T4 series
    double c4 = 0.15;           // T4 transition slope, in units of m4
    double h2_fraction = 0.05;  // of the T23 bound on h2
    double eta2 = 1.9;
    double t12_safety = 4.0;    // required ratio of the two sides of the T12 inequality
    int n2_max = 200;
    double h0p_fraction = 0.5;  // of the T01 bound on h0'
    double h0_ratio = 1.0;      // h0 = h0_ratio * m0(2)
    double ch_fraction = 0.5;
};

struct LyapunovParams {
    ExponentTable exps;
    RegionParams region;
    double h0 = 0, h0p = 0, h1 = 0, h2 = 0, h3 = 0, h4 = 1;
    std::vector<double> m0_levels;  // index = level 0..ceil(b0)
    double m1 = 0, m2 = 0, m3 = 0, m4 = 0, m4star = 0;
    double eta2star = 1.9;
    int n2 = 0;
    double Ch = 0.5;
    double gamma = 1.0;  // phi(v) = Ch v^gamma
    // T4 shape
    int k4 = 14;
    double c4 = 0.15;
    std::map<std::string, double> margins;

    void validate() const;
};

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& iface, const std::string& what)
        : std::runtime_error(what), interface_name(iface) {}
    std::string interface_name;
};

LyapunovParams select_parameters(double delta0, double eps, Variant v, const RegionParams& region,
                                 const TuningTargets& t = {});

// Global drift exponent: worst ratio of rate exponent to value exponent, capped at 1.
double global_drift_exponent(const ExponentTable& e);
double phi(double v, const LyapunovParams& p);

// A piece is an open region plus the T2 sector index (0 next to T23).
struct Piece {
    RegionId region;
    int sector = 0;
    bool operator==(const Piece& o) const { return region == o.region && sector == o.sector; }
    bool operator!=(const Piece& o) const { return !(*this == o); }
};

struct Evaluation {
    double value;
    Piece piece;
    double rate;
};

class PiecewiseLyapunov {
public:
    explicit PiecewiseLyapunov(LyapunovParams p);

    const LyapunovParams& params() const { return p_; }

    Piece piece_at(const Point& x) const;
    // Closed form of one piece, continued to any point of the open quadrant.
    double piece_value(const Piece& pc, const Point& x) const;
    Point piece_gradient(const Piece& pc, const Point& x) const;
    double rate_h(const Piece& pc, const Point& x) const;

    double value(const Point& x) const { return piece_value(piece_at(x), x); }
    double operator()(const State& s) const { return value({double(s[0]), double(s[1])}); }
    Evaluation evaluate(const State& s) const;

    // sector of the ray x2/x1 = r, clamped to [0, n2]
    int sector_of(double r) const;
    double sector_ratio(int j) const { return rho_[j]; }  // upper ratio of sector j
    double series(double x1) const;                       // T4 sum over k4..x1, linear between integers

    void write_surface_csv(std::ostream& os, std::int64_t x1_max, std::int64_t x2_max, std::int64_t stride) const;

private:
    double Q(double r) const;
    double dQ(double r) const;
    LyapunovParams p_;
    double K_ = 1;
    std::vector<double> rho_;   // rho_[j] = tan(theta_j), j = 0..n2+1, decreasing
    std::vector<double> qcum_;  // Q at rho_[j]
    std::vector<double> G_;     // series partial sums
};

double P_poly(double r);
double P_prime(double r);

// Lifted pieces on (x1, x2, chi); homogeneous of degree delta4+1.
double alt_piece_value(RegionId region, const Point& x, double chi, const LyapunovParams& p);

void write_params(std::ostream& os, const LyapunovParams& p);
LyapunovParams read_params(std::istream& is);

}  // namespace crnlab
