#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ddsde/grid.hpp"

namespace ddsde {

// Initial law nu0. Gaussian mixture components are isotropic with a common
// per-coordinate variance each; a point mass is a zero-variance atom.
struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;
  double variance = 0.0;  // per coordinate
};

struct InitialDistribution {
  enum class Kind { point_mass, gaussian_mixture, grid };
  Kind kind = Kind::point_mass;
  int dim = 1;

  std::vector<double> x0;                    // point_mass
  std::vector<MixtureComponent> components;  // gaussian_mixture
  GridDensity density;                       // grid

  // L^q exponent with finite ||rho0||_q, when declared (inf allowed).
  std::optional<double> lq_exponent;

  bool has_atom() const;
  // Radius of the essential support around the origin (6 sigma for Gaussian
  // components); used by the domain sizing rule.
  double support_radius() const;

  static InitialDistribution point_mass(std::vector<double> x0);
  static InitialDistribution gaussian(std::vector<double> mean, double variance);
  static InitialDistribution mixture(std::vector<MixtureComponent> comps, int dim);
  static InitialDistribution uniform_box(int dim, std::span<const double> a,
                                         std::span<const double> b,
                                         const GridSpec& spec);
  static InitialDistribution from_grid(GridDensity density,
                                       std::optional<double> q = {});
};

// Density of X0 + sqrt(2) W_{t_smooth}: g(t_smooth,.) convolved with nu0,
// discretized at cell centers and normalized to exact unit mass. For atoms
// t_smooth must be positive. t_smooth = 0 with grid kind returns the stored
// density (resampled onto spec if needed by restriction).
GridDensity from_initial(const InitialDistribution& dist, const GridSpec& spec,
                         double t_smooth);

// M independent samples, one RNG stream per particle (see philox.hpp),
// returned as M * dim doubles, particle-major.
std::vector<double> sample_initial(const InitialDistribution& dist, int dim,
                                   std::uint64_t count, std::uint64_t seed);

}  // namespace ddsde
