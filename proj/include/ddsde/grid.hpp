#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ddsde {

inline constexpr double mass_tol = 1e-6;
inline constexpr double leak_tol = 1e-8;

// Uniform grid over a box, cell-centered values, per-axis power-of-two cell
// counts (FFT convolution). d in {1, 2}.
struct GridSpec {
  int dim = 1;
  std::array<double, 2> lower{};
  std::array<double, 2> upper{};
  std::array<std::uint64_t, 2> cells{};

  static GridSpec make(int dim, std::span<const double> lower,
                       std::span<const double> upper,
                       std::span<const std::uint64_t> cells);
  static GridSpec make1d(double lower, double upper, std::uint64_t cells);

  double dx(int axis) const { return (upper[axis] - lower[axis]) / static_cast<double>(cells[axis]); }
  double center(int axis, std::uint64_t i) const {
    return lower[axis] + (static_cast<double>(i) + 0.5) * dx(axis);
  }
  double half_width(int axis) const { return 0.5 * (upper[axis] - lower[axis]); }
  std::uint64_t size() const { return dim == 1 ? cells[0] : cells[0] * cells[1]; }
  double cell_volume() const { return dim == 1 ? dx(0) : dx(0) * dx(1); }
  bool operator==(const GridSpec&) const = default;
};

// Nonnegative density values at cell centers. Mass is the midpoint quadrature
// (value sum times cell volume), cached at construction.
class GridDensity {
public:
  GridDensity() = default;
  static GridDensity from_values(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  const std::vector<double>& values() const { return values_; }
  double mass() const { return mass_; }
  double value(std::uint64_t flat) const { return values_[flat]; }

  // Mass in the outermost cell ring.
  double boundary_mass() const;
  void check_unit_mass(double tol = mass_tol) const;

  // Multilinear interpolation of cell-center values; 0 outside the domain.
  double interpolate(std::span<const double> x) const;

private:
  GridSpec spec_{};
  std::vector<double> values_;
  double mass_ = 0.0;
};

struct ConvolveStats {
  double clipped_mass = 0.0;  // negative mass removed by clipping
};

// g(t, .) (*) a by circular FFT convolution; discrete kernel normalized to
// exact unit mass. Requires >= 4 cells per sqrt(2t) and <= leak_tol mass
// within 6 sqrt(2t) of the boundary.
GridDensity gaussian_convolve(const GridDensity& a, double t,
                              ConvolveStats* stats = nullptr);

// Anisotropic flavor: per-axis kernel times (variance 2 t_axis).
GridDensity gaussian_convolve_aniso(const GridDensity& a,
                                    std::span<const double> t_axis,
                                    ConvolveStats* stats = nullptr);

// Pushforward of a dx under x -> x + h * shift(x), by conservative linear
// (cloud-in-cell) redistribution. shift is sampled at cell centers.
// Exact mass preservation; zero shift is a bitwise identity.
using ShiftField = std::function<void(std::span<const double> x, std::span<double> out)>;
GridDensity drift_pushforward(const GridDensity& a, const ShiftField& shift, double h);

// Same with the velocity field precomputed at cell centers (size n * dim,
// axis-major per cell).
GridDensity drift_pushforward(const GridDensity& a,
                              std::span<const double> velocity, double h);

// Signed-field core used by residual computations: no nonnegativity or mass
// checks, returns raw redeposited values.
std::vector<double> pushforward_values(const GridSpec& spec,
                                       std::span<const double> values,
                                       std::span<const double> velocity,
                                       double h, double* wrapped_mass = nullptr);

// Circular FFT convolution of arbitrary sampled kernels (kernel given at
// wrapped offsets, same layout as values); scaled by cell volume.
std::vector<double> circular_convolve(const GridSpec& spec,
                                      std::span<const double> values,
                                      std::span<const double> kernel);

double l1_distance(const GridDensity& a, const GridDensity& b);
// L^q quadrature norm, q in (1, inf]; q = inf returns the max cell value.
double lq_norm(const GridDensity& a, double q);

// Block cell-averaging onto a coarser grid with the same bounds.
GridDensity restrict_to(const GridDensity& fine, const GridSpec& coarse);

// As restrict_to, but accepts equal specs (identity) and picks the finer one.
double l1_on_common_grid(const GridDensity& a, const GridDensity& b);

// Binary format DDG1: magic "DDG1", u64 dim, per axis {f64 lower, f64 upper,
// u64 cells}, then row-major f64 values, all little-endian.
void save_grid(const GridDensity& g, const std::string& path);
GridDensity load_grid(const std::string& path);
// CSV: one row per cell, coordinates then value.
void save_grid_csv(const GridDensity& g, const std::string& path);

double kahan_sum(std::span<const double> v);

}  // namespace ddsde
