#pragma once

#include <array>
#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "crnlab/network.hpp"

namespace crnlab {

using Point = std::array<double, 2>;

struct ScalingVector {
    Point w;
    ScalingVector(double w1, double w2);  // normalizes; rejects negative or zero input
    static ScalingVector diagonal() { return {1.0, 1.0}; }
};

Point scale(const ScalingVector& w, double l, const Point& x);

struct ToricCoordinates {
    double theta = 1.0;
    Point w{0.0, 0.0};
    int c_star = 0;
    bool degenerate = false;
};
ToricCoordinates toric_coordinates(const Point& z, int c_star);
Point from_toric(const ToricCoordinates& tc);

struct RegionParams {
    double b0 = 20, b1 = 10, b2 = 50, rho = 200;
    void validate() const;
};

enum class RegionId { T0, T0prime, T1, T2, T3, T4, T00, T01, T12, T23, T34, T4star };
const char* region_name(RegionId r);
bool is_interface(RegionId r);

// Tag of a lattice point, interfaces included (half-open lattice convention).
RegionId classify_region(const RegionParams& p, const State& x);
// Open region whose closed-form piece is used at a real point; never an interface.
RegionId piece_region(const RegionParams& p, const Point& x);

struct ExposedSet {
    std::set<int> lifted;  // argmax over (r,i) with c^r_i != 0 of <w, c_in - e_i>
    std::set<int> plain;   // argmax of <w, c_in>
    double lifted_value = 0, plain_value = 0;
};
ExposedSet exposed_reactions(const Network& net, const ScalingVector& w);

using PointFn = std::function<double(const Point&)>;
double homogeneity_check(const PointFn& f, const ScalingVector& w, double delta, const std::vector<Point>& samples,
                         const std::vector<double>& l_values);

void write_region_map_csv(std::ostream& os, const RegionParams& p, std::int64_t x1_max, std::int64_t x2_max);

}  // namespace crnlab
