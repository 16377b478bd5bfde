#include "ddsde/fpe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "ddsde/errors.hpp"
#include "ddsde/parallel.hpp"

namespace ddsde {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double stable_dt(const GridSpec& grid, const DriftSpec& drift, double cfl) {
  double dx_min = grid.dx(0);
  for (int a = 1; a < grid.dim; ++a) dx_min = std::min(dx_min, grid.dx(a));
  double cap = dx_min * dx_min / (2.0 * static_cast<double>(grid.dim));
  if (drift.bound > 0.0) cap = std::min(cap, dx_min / drift.bound);
  return cfl * cap;
}

// Cell-center drift at time t; u clamped to >= 0 against -1e-12 level noise.
void cell_velocity(const GridSpec& grid, const DriftSpec& drift, double t,
                   std::span<const double> rho, std::vector<double>& out) {
  int dim = grid.dim;
  std::uint64_t n = grid.size();
  out.resize(n * static_cast<std::size_t>(dim));
  parallel_for_ranges(n, [&](std::size_t lo, std::size_t hi) {
    std::array<double, 2> x{};
    for (std::size_t c = lo; c < hi; ++c) {
      if (dim == 1) {
        x[0] = grid.center(0, c);
      } else {
        x[0] = grid.center(0, c / grid.cells[1]);
        x[1] = grid.center(1, c % grid.cells[1]);
      }
      drift.eval(t, std::span<const double>(x.data(), dim),
                 std::max(rho[c], 0.0),
                 std::span<double>(&out[c * dim], dim));
    }
  });
}

// One explicit step from time t. Face fluxes are upwinded on the average of
// the two adjacent cell velocities; diffusion is the centered 3-point stencil.
void fpe_step(const GridSpec& grid, const DriftSpec& drift, double t, double dt,
              std::vector<double>& rho, std::vector<double>& scratch,
              std::vector<double>& velocity, std::vector<double>& flux) {
  int dim = grid.dim;
  std::uint64_t n = grid.size();
  cell_velocity(grid, drift, t, rho, velocity);
  flux.resize(n * static_cast<std::size_t>(dim));

  std::uint64_t n1 = dim == 2 ? grid.cells[1] : 1;
  auto upwind = [](double v, double left, double right) {
    return v >= 0.0 ? v * left : v * right;
  };
  parallel_for_ranges(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      if (dim == 1) {
        std::size_t r = c + 1 == n ? 0 : c + 1;
        double v = 0.5 * (velocity[c] + velocity[r]);
        flux[c] = upwind(v, rho[c], rho[r]);
      } else {
        std::uint64_t i0 = c / n1, i1 = c % n1;
        std::size_t r0 = (i0 + 1 == grid.cells[0] ? 0 : i0 + 1) * n1 + i1;
        std::size_t r1 = i0 * n1 + (i1 + 1 == n1 ? 0 : i1 + 1);
        double v0 = 0.5 * (velocity[c * 2] + velocity[r0 * 2]);
        double v1 = 0.5 * (velocity[c * 2 + 1] + velocity[r1 * 2 + 1]);
        flux[c * 2] = upwind(v0, rho[c], rho[r0]);
        flux[c * 2 + 1] = upwind(v1, rho[c], rho[r1]);
      }
    }
  });

  scratch.resize(n);
  parallel_for_ranges(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      if (dim == 1) {
        std::size_t l = c == 0 ? n - 1 : c - 1;
        std::size_t r = c + 1 == n ? 0 : c + 1;
        double dx = grid.dx(0);
        double diff = (rho[r] - 2.0 * rho[c] + rho[l]) / (dx * dx);
        double adv = (flux[c] - flux[l]) / dx;
        scratch[c] = rho[c] + dt * (diff - adv);
      } else {
        std::uint64_t i0 = c / n1, i1 = c % n1;
        std::size_t l0 = (i0 == 0 ? grid.cells[0] - 1 : i0 - 1) * n1 + i1;
        std::size_t r0 = (i0 + 1 == grid.cells[0] ? 0 : i0 + 1) * n1 + i1;
        std::size_t l1 = i0 * n1 + (i1 == 0 ? n1 - 1 : i1 - 1);
        std::size_t r1 = i0 * n1 + (i1 + 1 == n1 ? 0 : i1 + 1);
        double dx0 = grid.dx(0), dx1 = grid.dx(1);
        double diff = (rho[r0] - 2.0 * rho[c] + rho[l0]) / (dx0 * dx0) +
                      (rho[r1] - 2.0 * rho[c] + rho[l1]) / (dx1 * dx1);
        double adv = (flux[c * 2] - flux[l0 * 2]) / dx0 +
                     (flux[c * 2 + 1] - flux[l1 * 2 + 1]) / dx1;
        scratch[c] = rho[c] + dt * (diff - adv);
      }
    }
  });
  rho.swap(scratch);

  double lowest = 0.0;
  for (double v : rho) lowest = std::min(lowest, v);
  require(lowest >= -1e-12, errc::internal_error,
          "scheme failure: cell value " + fmt(lowest) +
              " fell below -1e-12 at t = " + fmt(t + dt));
}

GridDensity materialize(const GridSpec& grid, const std::vector<double>& rho) {
  std::vector<double> v(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) v[i] = std::max(rho[i], 0.0);
  return GridDensity::from_values(grid, std::move(v));
}

}  // namespace

FpeConfig FpeConfig::make(const GridSpec& grid, double horizon,
                          const DriftSpec& drift, double cfl) {
  require(std::isfinite(horizon) && horizon > 0.0, errc::invalid_argument,
          "horizon must be positive, got " + fmt(horizon));
  require(std::isfinite(cfl) && cfl > 0.0 && cfl <= 1.0, errc::invalid_argument,
          "cfl must lie in (0, 1], got " + fmt(cfl));
  require(drift.dim == grid.dim, errc::invalid_argument,
          "drift dim " + std::to_string(drift.dim) + " != grid dim " +
              std::to_string(grid.dim));
  FpeConfig config;
  config.grid = grid;
  config.cfl = cfl;
  double cap = stable_dt(grid, drift, cfl);
  double steps = std::ceil(horizon / cap * (1.0 - 1e-12));
  config.dt = horizon / steps;
  return config;
}

std::vector<std::pair<double, GridDensity>> fpe_solve(
    const InitialDistribution& initial, const DriftSpec& drift,
    const FpeConfig& config, std::span<const double> snapshot_times) {
  const GridSpec& grid = config.grid;
  require(initial.dim == grid.dim && drift.dim == grid.dim,
          errc::invalid_argument, "initial/drift/grid dims disagree");
  require(!snapshot_times.empty(), errc::invalid_argument,
          "need at least one snapshot time");
  std::vector<double> times(snapshot_times.begin(), snapshot_times.end());
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]) && times[i] >= 0.0, errc::invalid_argument,
            "snapshot times must be finite and >= 0");
    require(i == 0 || times[i] > times[i - 1], errc::invalid_argument,
            "snapshot times must be strictly increasing");
  }
  double cap = stable_dt(grid, drift, config.cfl);
  require(config.dt > 0.0 && config.dt <= cap * (1.0 + 1e-9),
          errc::invalid_argument,
          "time step " + fmt(config.dt) + " violates the stability bound " +
              fmt(cap) + " for drift '" + drift.name + "'");

  std::vector<std::pair<double, GridDensity>> out;
  double t = 0.0;
  std::size_t next = 0;
  GridDensity start;
  if (initial.has_atom()) {
    require(times.front() > 0.0, errc::invalid_argument,
            "atom-bearing initials need a positive first snapshot time to "
            "enter through heat smoothing");
    t = times.front();
    start = from_initial(initial, grid, t);
    out.emplace_back(t, start);
    next = 1;
  } else {
    start = from_initial(initial, grid, 0.0);
    if (times.front() == 0.0) {
      out.emplace_back(0.0, start);
      next = 1;
    }
  }

  std::vector<double> rho = start.values();
  std::vector<double> scratch, velocity, flux;
  for (; next < times.size(); ++next) {
    double target = times[next];
    double gap = target - t;
    auto steps =
        static_cast<std::uint64_t>(std::ceil(gap / config.dt * (1.0 - 1e-12)));
    double sub = gap / static_cast<double>(steps);
    for (std::uint64_t k = 0; k < steps; ++k)
      fpe_step(grid, drift, t + static_cast<double>(k) * sub, sub, rho, scratch,
               velocity, flux);
    t = target;
    out.emplace_back(t, materialize(grid, rho));
  }
  return out;
}

std::vector<double> weak_residual(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    const DriftSpec& drift, const TestFunctionSet& tests, double t) {
  require(trajectory.size() >= 2, errc::invalid_argument,
          "need at least two snapshots for the time quadrature");
  const GridSpec& grid = trajectory.front().second.spec();
  for (std::size_t j = 1; j < trajectory.size(); ++j) {
    require(trajectory[j].second.spec() == grid, errc::data_mismatch,
            "trajectory densities live on different grids");
    require(trajectory[j].first > trajectory[j - 1].first,
            errc::invalid_argument, "trajectory times must increase");
  }
  require(drift.dim == grid.dim, errc::invalid_argument,
          "drift dim does not match the trajectory grid");
  check_vanishing(tests, grid);

  std::size_t it = trajectory.size();
  for (std::size_t j = 0; j < trajectory.size(); ++j)
    if (std::abs(trajectory[j].first - t) <= 1e-9 * std::max(1.0, std::abs(t)))
      it = j;
  require(it < trajectory.size(), errc::invalid_argument,
          "no snapshot at the requested time " + fmt(t));
  require(it >= 1, errc::invalid_argument,
          "requested time is the first snapshot; nothing to integrate");

  int dim = grid.dim;
  std::uint64_t n = grid.size();
  std::size_t nf = tests.functions.size();
  // Probe tables: per function, laplacian and gradient at every cell center.
  std::vector<std::vector<double>> lap(nf), grad(nf), val(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    lap[f].resize(n);
    val[f].resize(n);
    grad[f].resize(n * static_cast<std::size_t>(dim));
    const TestFunction& phi = tests.functions[f];
    parallel_for_ranges(n, [&](std::size_t lo, std::size_t hi) {
      std::array<double, 2> x{};
      for (std::size_t c = lo; c < hi; ++c) {
        if (dim == 1) {
          x[0] = grid.center(0, c);
        } else {
          x[0] = grid.center(0, c / grid.cells[1]);
          x[1] = grid.center(1, c % grid.cells[1]);
        }
        std::span<const double> xs(x.data(), dim);
        val[f][c] = phi.value(xs);
        lap[f][c] = phi.laplacian(xs);
        phi.gradient(xs, std::span<double>(&grad[f][c * dim], dim));
      }
    });
  }

  double vol = grid.cell_volume();
  std::vector<double> velocity;
  // integrand[f][j] = <rho_j, Lap phi_f + b . grad phi_f>
  std::vector<std::vector<double>> integrand(nf,
                                             std::vector<double>(it + 1, 0.0));
  for (std::size_t j = 0; j <= it; ++j) {
    const GridDensity& rho = trajectory[j].second;
    cell_velocity(grid, drift, trajectory[j].first, rho.values(), velocity);
    for (std::size_t f = 0; f < nf; ++f) {
      double sum = 0.0, comp = 0.0;
      for (std::uint64_t c = 0; c < n; ++c) {
        double dot = 0.0;
        for (int a = 0; a < dim; ++a)
          dot += velocity[c * dim + a] * grad[f][c * dim + a];
        double term = rho.value(c) * (lap[f][c] + dot) - comp;
        double s = sum + term;
        comp = (s - sum) - term;
        sum = s;
      }
      integrand[f][j] = sum * vol;
    }
  }

  std::vector<double> out(nf, 0.0);
  for (std::size_t f = 0; f < nf; ++f) {
    double lhs = 0.0, first = 0.0;
    for (std::uint64_t c = 0; c < n; ++c) {
      lhs += trajectory[it].second.value(c) * val[f][c];
      first += trajectory.front().second.value(c) * val[f][c];
    }
    double integral = 0.0;
    for (std::size_t j = 0; j + 1 <= it; ++j)
      integral += 0.5 * (trajectory[j + 1].first - trajectory[j].first) *
                  (integrand[f][j] + integrand[f][j + 1]);
    out[f] = std::abs(lhs * vol - first * vol - integral);
  }
  return out;
}

std::vector<std::pair<double, double>> uniqueness_separation(
    const std::vector<std::pair<double, GridDensity>>& run_a,
    const std::vector<std::pair<double, GridDensity>>& run_b) {
  require(!run_a.empty() && run_a.size() == run_b.size(), errc::data_mismatch,
          "runs disagree on snapshot count: " + std::to_string(run_a.size()) +
              " vs " + std::to_string(run_b.size()));
  std::vector<std::pair<double, double>> out;
  out.reserve(run_a.size());
  for (std::size_t j = 0; j < run_a.size(); ++j) {
    double ta = run_a[j].first, tb = run_b[j].first;
    require(std::abs(ta - tb) <= 1e-9 * std::max(1.0, std::abs(ta)),
            errc::data_mismatch,
            "runs disagree on snapshot time " + fmt(ta) + " vs " + fmt(tb));
    out.emplace_back(ta, l1_on_common_grid(run_a[j].second, run_b[j].second));
  }
  return out;
}

}  // namespace ddsde
