#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddsde/drift.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/initial.hpp"

namespace ddsde {

// Fitted constant for a pointwise bound, swept across N. valid (pass) when
// every per-N constant is finite and max/median <= threshold.
struct BoundCertificate {
  std::string claim;
  double constant = 0.0;        // max over the sweep
  double stability_ratio = 1.0; // max / median across the sweep
  double threshold = 1.5;
  bool pass = false;
  std::vector<std::uint64_t> sweep_n;
  std::vector<double> per_n;
  std::array<double, 2> t_window{};
  std::array<double, 2> x_window{};
};

// Distance-vs-parameter curve with a log-log least-squares slope. monotone
// means no point rises more than 10% over its predecessor.
struct ConvergenceCurve {
  std::vector<double> abscissa;
  std::vector<double> ordinate;
  double slope = 0.0;
  double tolerance = 0.0;
  bool monotone = false;
  bool pass = false;  // monotone and terminal ordinate <= tolerance
};

// max over per-N constants, stability = max/median, pass per the threshold.
BoundCertificate combine_sweep(std::string claim,
                               std::span<const std::uint64_t> n_values,
                               std::span<const double> constants,
                               double threshold = 1.5);

// Windowed sup of density / (g(lambda t) smoothing of the initial), the
// ratio taken only on cells where the denominator is >= 1e-12.
double domination_ratio(const GridDensity& density,
                        const InitialDistribution& initial, double t,
                        double lambda);

// domination_ratio per N, combined; densities share one grid.
BoundCertificate fit_domination(
    const std::vector<std::pair<std::uint64_t, GridDensity>>& densities,
    const InitialDistribution& initial, double t, double lambda = 4.0,
    double threshold = 1.5);

enum class HoelderKind { space, time };

// Empirical modulus constant over a strided lattice subsample of the window:
//   space: sup |rho_t(y1) - rho_t(y2)| / (|y1 - y2|^beta t^{-(d+beta)/2})
//   time:  sup |rho_t1(y) - rho_t2(y)| / (|t1 - t2|^{beta/2} min(t)^{-(d+beta)/2})
// over snapshots inside t_window and cells inside x_window. d = 1 only.
double hoelder_constant(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    HoelderKind kind, double beta, std::array<double, 2> t_window,
    std::array<double, 2> x_window);

// Single-trajectory certificate (claim "hoelder_space" / "hoelder_time");
// sweep aggregation goes through combine_sweep.
BoundCertificate fit_hoelder(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    HoelderKind kind, double beta, std::array<double, 2> t_window,
    std::array<double, 2> x_window);

// Curve of L1(terminal density at N, reference), verdict = monotone within
// 10% and terminal <= tolerance. Refuses drifts without a declared
// Lipschitz-in-u constant. >= 4 sweep points.
ConvergenceCurve l1_convergence_study(
    const std::vector<std::pair<std::uint64_t, GridDensity>>& terminal_by_n,
    const GridDensity& reference, const DriftSpec& drift, double tolerance);

struct SmoothingCheck {
  bool pass = false;
  double observed = 0.0;  // sup norm at t, times t^{d/(2q)}
  double bound = 0.0;     // c_fit * Lq norm of the initial density
};

// ||rho_t||_inf * t^{d/(2q)} <= c_fit * ||rho_0||_q. The initial must be
// absolutely continuous (atoms -> not_applicable); its Lq norm is taken by
// grid quadrature on the density's grid.
SmoothingCheck smoothing_check(const GridDensity& density, double t,
                               const InitialDistribution& initial, double q,
                               double c_fit);

// CSV emission: certificates as "n,constant" rows, curves as
// "abscissa,ordinate" rows, series as "t,value" rows; %.17g throughout.
void write_certificate_csv(const BoundCertificate& cert,
                           const std::string& path);
void write_curve_csv(const ConvergenceCurve& curve, const std::string& path);
void write_series_csv(const std::vector<std::pair<double, double>>& series,
                      const std::string& path);

}  // namespace ddsde
