#pragma once

#include <ostream>
#include <stdexcept>
#include <vector>

#include "crnlab/network.hpp"

namespace crnlab {

struct OdeSample {
    double t;
    Concentration x;
};
using OdePath = std::vector<OdeSample>;

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double last_t) : std::runtime_error(what), last_time(last_t) {}
    double last_time;
};

std::vector<double> ode_rhs(const Network& net, const Concentration& x);

// Adaptive Dormand-Prince 5(4). Values in (-tol, 0) are clipped to 0.
OdePath integrate(const Network& net, const Concentration& x0, double t_end, double tol);

// Linear interpolation of a path at time t.
Concentration path_at(const OdePath& path, double t);

struct GridPoint {
    Concentration x;
    std::vector<double> f;
};
std::vector<GridPoint> vector_field_grid(const Network& net, double x1_lo, double x1_hi, double x2_lo,
                                         double x2_hi, int n);

// Rate constants kappa * v^(1 - |c_in|); counts divided by v follow the ODE as v grows.
Network volume_scaled(const Network& net, double v);

void write_path_csv(std::ostream& os, const OdePath& path);
void write_grid_csv(std::ostream& os, const std::vector<GridPoint>& grid);

}  // namespace crnlab
