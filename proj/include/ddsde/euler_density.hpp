#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ddsde/drift.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/initial.hpp"

namespace ddsde {

// Step lattice kh, k = 0..N, with the freeze map phi(s) = kh on [kh, (k+1)h).
struct TimeGrid {
  double T = 1.0;
  std::uint64_t N = 1;
  double h = 1.0;

  static TimeGrid make(double T, std::uint64_t N);
  double phi(double s) const;
  std::uint64_t phi_index(double s) const;
  // nearest step index for a lattice time; error if s is off-lattice
  std::uint64_t lattice_index(double s) const;
};

struct SchemeState {
  std::uint64_t k = 0;
  double t = 0.0;
  GridDensity density;
};

struct StepStats {
  double clipped_mass = 0.0;
};

// State at time h for any initial kind: atoms and mixtures enter through the
// exact heat smoothing of the first (driftless) step, grid data through one
// discrete diffusion step.
SchemeState state_after_first_step(const InitialDistribution& dist,
                                   const GridSpec& spec, const TimeGrid& time);

// Grid-kind initial data may also start at k = 0.
SchemeState state_from_density(GridDensity density, std::uint64_t k,
                               const TimeGrid& time);

// One step kh -> (k+1)h. k = 0 is pure diffusion; k >= 1 freezes the field
// x -> b(kh, x, rho(x)) over the step, then diffuses.
SchemeState step(const SchemeState& state, const DriftSpec& drift,
                 const TimeGrid& time, StepStats* stats = nullptr);

// Density at kh + dt for 0 < dt < h, same frozen field as step.
GridDensity interpolate_intermediate(const SchemeState& state,
                                     const DriftSpec& drift,
                                     const TimeGrid& time, double dt);

// Domain sizing rule: every axis needs half-width >= bound*T + 6 sqrt(2T) +
// support radius of the initial law.
void check_domain(const GridSpec& spec, const InitialDistribution& dist,
                  const DriftSpec& drift, const TimeGrid& time);

struct RunResult {
  std::vector<std::pair<double, GridDensity>> snapshots;
  std::vector<double> clipped_per_step;  // indexed by the step's start index k
};

// Full propagation with snapshots at the requested lattice times in (0, T].
RunResult run(const InitialDistribution& dist, const DriftSpec& drift,
              const GridSpec& spec, const TimeGrid& time,
              std::span<const double> snapshot_times);

// Sup-norm defect of the time-integrated representation of rho at lattice
// time t: free heat term from the earliest trajectory entry plus the
// per-interval gradient-kernel corrections, midpoint quadrature with
// sub_steps nodes per step. The trajectory must hold every lattice density
// in [h, t] (and t = 0 for grid starts).
double duhamel_residual(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    const DriftSpec& drift, const TimeGrid& time, double t,
    std::uint64_t sub_steps = 4);

}  // namespace ddsde
