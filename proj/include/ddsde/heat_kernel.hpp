#pragma once

#include <span>

#include "ddsde/grid.hpp"

// Heat kernel of the generator Delta (transition density of sqrt(2) W):
// g(t,x) = (4 pi t)^(-d/2) exp(-|x|^2/(4t)), variance 2t per coordinate.
namespace ddsde::heat {

double eval(double t, std::span<const double> x);
void grad(double t, std::span<const double> x, std::span<double> out);

// Max deviation over the grid of (g(t) (*) g(s))(x) - g(t+s, x), with (*) the
// module's discrete circular convolution. Kernels are centered at the domain
// midpoint.
double ck_convolve_check(double t, double s, const GridSpec& spec);

struct BoundPair {
  double lhs = 0.0;
  double rhs = 0.0;
};

// Space modulus of nabla^j g at fixed t:
//   lhs = |nabla^j g(t,x1) - nabla^j g(t,x2)|
//   rhs = |x1-x2|^beta t^(-j/2-beta) (g(4t,x1) + g(4t,x2))
// Property sweeps fit the smallest C with lhs <= C rhs.
BoundPair hoelder_space_bound(double t, std::span<const double> x1,
                              std::span<const double> x2, int j, double beta);

// Time modulus at fixed x:
//   lhs = |nabla^j g(t1,x) - nabla^j g(t2,x)|
//   rhs = |t2-t1|^(beta/2) sum_i t_i^(-(j+beta)/2) g(2 t_i, x)
BoundPair hoelder_time_bound(double t1, double t2, std::span<const double> x,
                             int j, double beta);

}  // namespace ddsde::heat
