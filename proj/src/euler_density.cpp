#include "ddsde/euler_density.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "ddsde/errors.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/parallel.hpp"

namespace ddsde {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

constexpr double lattice_tol = 1e-9;

// frozen field x -> b(kh, x, rho(x)) sampled at cell centers
std::vector<double> frozen_velocity(const GridDensity& rho, const DriftSpec& drift,
                                    double t_freeze) {
  const GridSpec& spec = rho.spec();
  std::uint64_t n = spec.size();
  std::vector<double> velocity(n * spec.dim);
  parallel_for_ranges(n, [&](std::size_t lo, std::size_t hi) {
    double x[2], v[2];
    for (std::size_t c = lo; c < hi; ++c) {
      if (spec.dim == 1) {
        x[0] = spec.center(0, c);
      } else {
        x[0] = spec.center(0, c / spec.cells[1]);
        x[1] = spec.center(1, c % spec.cells[1]);
      }
      drift.eval(t_freeze, std::span<const double>(x, spec.dim), rho.value(c),
                 std::span<double>(v, spec.dim));
      for (int ax = 0; ax < spec.dim; ++ax) velocity[c * spec.dim + ax] = v[ax];
    }
  });
  return velocity;
}

GridDensity advance(const GridDensity& rho, const DriftSpec& drift,
                    double t_freeze, bool with_drift, double dt,
                    StepStats* stats) {
  ConvolveStats cs;
  GridDensity out = [&] {
    if (!with_drift) return gaussian_convolve(rho, dt, &cs);
    std::vector<double> velocity = frozen_velocity(rho, drift, t_freeze);
    return gaussian_convolve(drift_pushforward(rho, velocity, dt), dt, &cs);
  }();
  if (stats) stats->clipped_mass = cs.clipped_mass;
  out.check_unit_mass();
  return out;
}

}  // namespace

TimeGrid TimeGrid::make(double T, std::uint64_t N) {
  require(std::isfinite(T) && T > 0.0, errc::invalid_argument, "horizon must be positive");
  require(N >= 1, errc::invalid_argument, "step count must be >= 1");
  TimeGrid g;
  g.N = N;
  g.h = T / static_cast<double>(N);
  g.T = g.h * static_cast<double>(N);
  return g;
}

std::uint64_t TimeGrid::phi_index(double s) const {
  require(s >= 0.0 && s <= T * (1.0 + lattice_tol), errc::domain_error,
          "time " + fmt(s) + " outside [0, " + fmt(T) + "]");
  auto k = static_cast<std::uint64_t>(std::floor(s / h));
  return std::min(k, N - 1);
}

double TimeGrid::phi(double s) const { return static_cast<double>(phi_index(s)) * h; }

std::uint64_t TimeGrid::lattice_index(double s) const {
  double r = s / h;
  auto k = static_cast<std::uint64_t>(std::llround(r));
  require(std::abs(r - static_cast<double>(k)) <= lattice_tol * std::max(1.0, r),
          errc::invalid_argument,
          "time " + fmt(s) + " is not a multiple of the step " + fmt(h));
  require(k <= N, errc::invalid_argument,
          "time " + fmt(s) + " beyond the horizon " + fmt(T));
  return k;
}

SchemeState state_after_first_step(const InitialDistribution& dist,
                                   const GridSpec& spec, const TimeGrid& time) {
  GridDensity first = dist.kind == InitialDistribution::Kind::grid
                          ? gaussian_convolve(from_initial(dist, spec, 0.0), time.h)
                          : from_initial(dist, spec, time.h);
  first.check_unit_mass();
  return {1, time.h, std::move(first)};
}

SchemeState state_from_density(GridDensity density, std::uint64_t k,
                               const TimeGrid& time) {
  require(k <= time.N, errc::invalid_argument, "step index beyond the horizon");
  density.check_unit_mass();
  double t = static_cast<double>(k) * time.h;
  return {k, t, std::move(density)};
}

SchemeState step(const SchemeState& state, const DriftSpec& drift,
                 const TimeGrid& time, StepStats* stats) {
  require(state.k < time.N, errc::invalid_argument,
          "cannot step past the horizon (k = " + std::to_string(state.k) + ")");
  GridDensity next = advance(state.density, drift, state.t, state.k >= 1, time.h, stats);
  return {state.k + 1, static_cast<double>(state.k + 1) * time.h, std::move(next)};
}

GridDensity interpolate_intermediate(const SchemeState& state,
                                     const DriftSpec& drift,
                                     const TimeGrid& time, double dt) {
  require(dt > 0.0 && dt < time.h, errc::domain_error,
          "intermediate offset " + fmt(dt) + " outside (0, " + fmt(time.h) + ")");
  require(state.k < time.N, errc::invalid_argument, "state is at the horizon");
  return advance(state.density, drift, state.t, state.k >= 1, dt, nullptr);
}

void check_domain(const GridSpec& spec, const InitialDistribution& dist,
                  const DriftSpec& drift, const TimeGrid& time) {
  double needed = drift.bound * time.T + 6.0 * std::sqrt(2.0 * time.T) +
                  dist.support_radius();
  for (int ax = 0; ax < spec.dim; ++ax) {
    require(spec.half_width(ax) >= needed - 1e-12, errc::domain_error,
            "domain half-width " + fmt(spec.half_width(ax)) + " on axis " +
                std::to_string(ax + 1) + " below the sizing rule " + fmt(needed) +
                " = bound*T + 6 sqrt(2T) + support radius");
  }
}

RunResult run(const InitialDistribution& dist, const DriftSpec& drift,
              const GridSpec& spec, const TimeGrid& time,
              std::span<const double> snapshot_times) {
  require(dist.dim == spec.dim && drift.dim == spec.dim, errc::invalid_argument,
          "dimension mismatch between initial law, drift, and grid");
  check_domain(spec, dist, drift, time);

  std::map<std::uint64_t, double> wanted;  // step index -> requested time
  for (double s : snapshot_times) {
    std::uint64_t k = time.lattice_index(s);
    require(k >= 1, errc::invalid_argument,
            "snapshot time " + fmt(s) + " must lie in (0, T]");
    wanted.emplace(k, s);
  }

  RunResult result;
  result.clipped_per_step.assign(time.N, 0.0);
  SchemeState state = state_after_first_step(dist, spec, time);
  if (auto it = wanted.find(1); it != wanted.end())
    result.snapshots.emplace_back(it->second, state.density);
  while (state.k < time.N) {
    StepStats stats;
    state = step(state, drift, time, &stats);
    result.clipped_per_step[state.k - 1] = stats.clipped_mass;
    if (auto it = wanted.find(state.k); it != wanted.end())
      result.snapshots.emplace_back(it->second, state.density);
    if (!wanted.empty() && state.k >= wanted.rbegin()->first) break;
  }
  return result;
}

double duhamel_residual(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    const DriftSpec& drift, const TimeGrid& time, double t,
    std::uint64_t sub_steps) {
  require(sub_steps >= 1, errc::invalid_argument, "sub_steps must be >= 1");
  require(!trajectory.empty(), errc::invalid_argument, "empty trajectory");
  std::uint64_t K = time.lattice_index(t);
  require(K >= 1, errc::invalid_argument, "residual time must be positive");

  std::map<std::uint64_t, const GridDensity*> at;
  for (const auto& [s, g] : trajectory) at[time.lattice_index(s)] = &g;
  for (std::uint64_t j = 1; j <= K; ++j)
    require(at.count(j), errc::invalid_argument,
            "trajectory is missing the density at step " + std::to_string(j));

  const GridDensity& rho_t = *at.at(K);
  const GridSpec& spec = rho_t.spec();
  std::uint64_t n = spec.size();

  // free heat term continued from the earliest entry by the semigroup
  std::uint64_t j0 = at.begin()->first;
  const GridDensity& first = *at.begin()->second;
  require(first.spec() == spec, errc::data_mismatch, "trajectory grids differ");
  double gap = (static_cast<double>(K) - static_cast<double>(j0)) * time.h;
  std::vector<double> defect(n);
  {
    GridDensity free_term = gap > 0.0 ? gaussian_convolve(first, gap) : first;
    for (std::uint64_t c = 0; c < n; ++c)
      defect[c] = rho_t.value(c) - free_term.value(c);
  }

  double tau_sub = time.h / static_cast<double>(sub_steps);
  std::vector<double> q(n), mu(n), kernel(n);
  for (std::uint64_t j = 1; j + 1 <= K; ++j) {
    const GridDensity& rho_j = *at.at(j);
    require(rho_j.spec() == spec, errc::data_mismatch, "trajectory grids differ");
    double tj = static_cast<double>(j) * time.h;
    std::vector<double> velocity = frozen_velocity(rho_j, drift, tj);
    double kernel_t = t - tj;

    for (int ax = 0; ax < spec.dim; ++ax) {
      // gradient kernel at wrapped lattice offsets
      for (std::uint64_t c = 0; c < n; ++c) {
        double off[2];
        if (spec.dim == 1) {
          double w = spec.upper[0] - spec.lower[0];
          double o = static_cast<double>(c) * spec.dx(0);
          off[0] = o > 0.5 * w ? o - w : o;
        } else {
          std::uint64_t ci = c / spec.cells[1], cj = c % spec.cells[1];
          double w0 = spec.upper[0] - spec.lower[0];
          double w1 = spec.upper[1] - spec.lower[1];
          double o0 = static_cast<double>(ci) * spec.dx(0);
          double o1 = static_cast<double>(cj) * spec.dx(1);
          off[0] = o0 > 0.5 * w0 ? o0 - w0 : o0;
          off[1] = o1 > 0.5 * w1 ? o1 - w1 : o1;
        }
        double gvec[2];
        heat::grad(kernel_t, std::span<const double>(off, spec.dim),
                   std::span<double>(gvec, spec.dim));
        kernel[c] = gvec[ax];
      }

      for (std::uint64_t c = 0; c < n; ++c)
        q[c] = velocity[c * spec.dim + ax] * rho_j.value(c);

      for (std::uint64_t m = 0; m < sub_steps; ++m) {
        double delta = (static_cast<double>(m) + 0.5) * tau_sub;
        double wrapped = 0.0;
        mu = pushforward_values(spec, q, velocity, delta, &wrapped);
        require(wrapped <= 1e-8, errc::domain_error,
                "drift moved weight across the boundary inside the residual quadrature");
        std::vector<double> corr = circular_convolve(spec, mu, kernel);
        for (std::uint64_t c = 0; c < n; ++c) defect[c] += tau_sub * corr[c];
      }
    }
  }

  double sup = 0.0;
  for (double v : defect) sup = std::max(sup, std::abs(v));
  return sup;
}

}  // namespace ddsde
