#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ddsde/drift.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/initial.hpp"
#include "ddsde/test_functions.hpp"

namespace ddsde {

// Explicit finite-volume scheme for d rho/dt = Lap rho - div(b(t,x,rho) rho):
// centered second differences for the diffusion, upwind fluxes on face
// velocities averaged from the cell-center drift, periodic wrap.
struct FpeConfig {
  GridSpec grid;
  double cfl = 0.45;
  double dt = 0.0;

  // dt = horizon / ceil(horizon / dt_max) with
  // dt_max = cfl * min(dx_min^2 / (2 dim), dx_min / sup|b|); the advective
  // cap is skipped for zero-bound drifts.
  static FpeConfig make(const GridSpec& grid, double horizon,
                        const DriftSpec& drift, double cfl = 0.45);
};

// March to each requested time (strictly increasing, hit exactly by splitting
// each gap into equal steps <= config.dt). Atom-bearing initials enter through
// heat smoothing at the first requested time; smooth initials may request 0.
std::vector<std::pair<double, GridDensity>> fpe_solve(
    const InitialDistribution& initial, const DriftSpec& drift,
    const FpeConfig& config, std::span<const double> snapshot_times);

// Per-probe |<rho_t, phi> - <rho_first, phi>
//            - int_first^t (<rho_s, Lap phi> + <rho_s, b(s,.,rho_s).grad phi>) ds|
// with the time integral by trapezoid over the stored snapshots up to t.
std::vector<double> weak_residual(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    const DriftSpec& drift, const TestFunctionSet& tests, double t);

// t -> L1 distance between the two runs at their common snapshot times.
// Accepts equal or 2^k-nested grids.
std::vector<std::pair<double, double>> uniqueness_separation(
    const std::vector<std::pair<double, GridDensity>>& run_a,
    const std::vector<std::pair<double, GridDensity>>& run_b);

}  // namespace ddsde
