#include "ddsde/initial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddsde/errors.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/parallel.hpp"
#include "ddsde/philox.hpp"

namespace ddsde {

bool InitialDistribution::has_atom() const {
  switch (kind) {
    case Kind::point_mass: return true;
    case Kind::gaussian_mixture:
      return std::any_of(components.begin(), components.end(),
                         [](const MixtureComponent& c) { return c.variance == 0.0; });
    case Kind::grid: return false;
  }
  return false;
}

double InitialDistribution::support_radius() const {
  double r = 0.0;
  switch (kind) {
    case Kind::point_mass:
      for (double v : x0) r = std::max(r, std::abs(v));
      break;
    case Kind::gaussian_mixture:
      for (const auto& c : components) {
        double m = 0.0;
        for (double v : c.mean) m = std::max(m, std::abs(v));
        r = std::max(r, m + 6.0 * std::sqrt(c.variance));
      }
      break;
    case Kind::grid: {
      const GridSpec& s = density.spec();
      for (std::uint64_t f = 0; f < s.size(); ++f) {
        if (density.value(f) <= 0.0) continue;
        if (s.dim == 1) {
          r = std::max(r, std::abs(s.center(0, f)));
        } else {
          r = std::max(r, std::abs(s.center(0, f / s.cells[1])));
          r = std::max(r, std::abs(s.center(1, f % s.cells[1])));
        }
      }
      break;
    }
  }
  return r;
}

InitialDistribution InitialDistribution::point_mass(std::vector<double> x0) {
  require(!x0.empty() && x0.size() <= 3, errc::invalid_argument,
          "point mass dimension must be 1..3");
  InitialDistribution d;
  d.kind = Kind::point_mass;
  d.dim = static_cast<int>(x0.size());
  d.x0 = std::move(x0);
  return d;
}

InitialDistribution InitialDistribution::gaussian(std::vector<double> mean,
                                                  double variance) {
  require(variance >= 0.0, errc::invalid_argument, "variance must be >= 0");
  MixtureComponent c;
  c.weight = 1.0;
  c.variance = variance;
  int dim = static_cast<int>(mean.size());
  c.mean = std::move(mean);
  return mixture({std::move(c)}, dim);
}

InitialDistribution InitialDistribution::mixture(
    std::vector<MixtureComponent> comps, int dim) {
  require(dim >= 1 && dim <= 3, errc::invalid_argument, "dimension must be 1..3");
  require(!comps.empty(), errc::invalid_argument, "mixture needs >= 1 component");
  double wsum = 0.0;
  for (const auto& c : comps) {
    require(c.weight >= 0.0, errc::invalid_argument, "weights must be >= 0");
    require(c.variance >= 0.0, errc::invalid_argument, "variances must be >= 0");
    require(c.mean.size() == static_cast<std::size_t>(dim), errc::invalid_argument,
            "component mean dimension mismatch");
    wsum += c.weight;
  }
  require(std::abs(wsum - 1.0) <= 1e-9, errc::invalid_argument,
          "mixture weights sum to " + std::to_string(wsum) + ", expected 1");
  for (auto& c : comps) c.weight /= wsum;
  InitialDistribution d;
  d.kind = Kind::gaussian_mixture;
  d.dim = dim;
  d.components = std::move(comps);
  return d;
}

InitialDistribution InitialDistribution::uniform_box(int dim,
                                                     std::span<const double> a,
                                                     std::span<const double> b,
                                                     const GridSpec& spec) {
  require(dim == spec.dim, errc::invalid_argument, "dimension mismatch");
  require(a.size() == static_cast<std::size_t>(dim) &&
              b.size() == static_cast<std::size_t>(dim),
          errc::invalid_argument, "box bounds must have length dim");
  double box_vol = 1.0;
  for (int ax = 0; ax < dim; ++ax) {
    require(b[ax] > a[ax], errc::invalid_argument, "box upper must exceed lower");
    require(a[ax] >= spec.lower[ax] && b[ax] <= spec.upper[ax],
            errc::invalid_argument, "box must lie inside the grid domain");
    box_vol *= b[ax] - a[ax];
  }
  auto axis_fraction = [&](int ax, std::uint64_t i) {
    double lo = spec.lower[ax] + static_cast<double>(i) * spec.dx(ax);
    double hi = lo + spec.dx(ax);
    double overlap = std::min(hi, b[ax]) - std::max(lo, a[ax]);
    return overlap > 0.0 ? overlap / spec.dx(ax) : 0.0;
  };
  std::vector<double> values(spec.size());
  for (std::uint64_t f = 0; f < spec.size(); ++f) {
    double frac = dim == 1 ? axis_fraction(0, f)
                           : axis_fraction(0, f / spec.cells[1]) *
                                 axis_fraction(1, f % spec.cells[1]);
    values[f] = frac / box_vol;
  }
  return from_grid(GridDensity::from_values(spec, std::move(values)));
}

InitialDistribution InitialDistribution::from_grid(GridDensity density,
                                                   std::optional<double> q) {
  require(std::abs(density.mass() - 1.0) <= 1e-8, errc::invalid_argument,
          "grid initial data must have unit mass within 1e-8, got " +
              std::to_string(density.mass()));
  InitialDistribution d;
  d.kind = Kind::grid;
  d.dim = density.spec().dim;
  d.density = std::move(density);
  d.lq_exponent = q;
  return d;
}

namespace {

GridDensity normalized(GridSpec spec, std::vector<double> values) {
  double mass = kahan_sum(values) * spec.cell_volume();
  require(mass > 0.0, errc::internal_error, "discretized initial law has no mass");
  for (double& v : values) v /= mass;
  return GridDensity::from_values(spec, std::move(values));
}

void check_component_resolution(const GridSpec& spec, double tau) {
  double sigma = std::sqrt(2.0 * tau);
  for (int a = 0; a < spec.dim; ++a) {
    require(spec.dx(a) <= sigma / 4.0, errc::resolution_error,
            "axis " + std::to_string(a) + ": cell width " + std::to_string(spec.dx(a)) +
                " cannot resolve a Gaussian of std " + std::to_string(sigma));
  }
}

}  // namespace

GridDensity from_initial(const InitialDistribution& dist, const GridSpec& spec,
                         double t_smooth) {
  require(t_smooth >= 0.0 && std::isfinite(t_smooth), errc::invalid_argument,
          "t_smooth must be finite and >= 0");
  require(dist.dim == spec.dim, errc::invalid_argument,
          "initial law dimension " + std::to_string(dist.dim) +
              " != grid dimension " + std::to_string(spec.dim));
  require(!(dist.has_atom() && t_smooth == 0.0), errc::domain_error,
          "an atom has no grid density; use t_smooth > 0");

  if (dist.kind == InitialDistribution::Kind::grid) {
    GridDensity base = dist.density;
    if (!(base.spec() == spec)) {
      require(base.spec().cells[0] >= spec.cells[0], errc::data_mismatch,
              "stored initial density is coarser than the requested grid");
      base = restrict_to(base, spec);
    }
    if (t_smooth == 0.0) return base;
    return gaussian_convolve(base, t_smooth);
  }

  std::vector<MixtureComponent> comps;
  if (dist.kind == InitialDistribution::Kind::point_mass) {
    MixtureComponent c;
    c.weight = 1.0;
    c.mean = dist.x0;
    c.variance = 0.0;
    comps.push_back(std::move(c));
  } else {
    comps = dist.components;
  }
  // Component of per-coordinate variance v smoothed by time t is
  // g(v/2 + t, . - mean).
  std::vector<double> taus(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    taus[c] = 0.5 * comps[c].variance + t_smooth;
    check_component_resolution(spec, taus[c]);
    for (int a = 0; a < spec.dim; ++a) {
      require(comps[c].mean[a] > spec.lower[a] && comps[c].mean[a] < spec.upper[a],
              errc::domain_error, "component mean lies outside the grid domain");
    }
  }
  std::vector<double> values(spec.size(), 0.0);
  parallel_for_ranges(spec.size(), [&](std::size_t lo, std::size_t hi) {
    double rel[2];
    for (std::size_t f = lo; f < hi; ++f) {
      double acc = 0.0;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        if (spec.dim == 1) {
          rel[0] = spec.center(0, f) - comps[c].mean[0];
        } else {
          rel[0] = spec.center(0, f / spec.cells[1]) - comps[c].mean[0];
          rel[1] = spec.center(1, f % spec.cells[1]) - comps[c].mean[1];
        }
        acc += comps[c].weight *
               heat::eval(taus[c], std::span<const double>(rel, spec.dim));
      }
      values[f] = acc;
    }
  });
  return normalized(spec, std::move(values));
}

std::vector<double> sample_initial(const InitialDistribution& dist, int dim,
                                   std::uint64_t count, std::uint64_t seed) {
  require(dim == dist.dim, errc::invalid_argument, "dimension mismatch");
  require(dim >= 1 && dim <= 3, errc::invalid_argument, "particle dimension must be 1..3");
  std::vector<double> pos(count * static_cast<std::uint64_t>(dim));

  if (dist.kind == InitialDistribution::Kind::point_mass) {
    parallel_for(count, [&](std::size_t i) {
      for (int a = 0; a < dim; ++a) pos[i * dim + a] = dist.x0[a];
    });
    return pos;
  }

  if (dist.kind == InitialDistribution::Kind::gaussian_mixture) {
    std::vector<double> cum(dist.components.size());
    double acc = 0.0;
    for (std::size_t c = 0; c < cum.size(); ++c) {
      acc += dist.components[c].weight;
      cum[c] = acc;
    }
    parallel_for(count, [&](std::size_t i) {
      rng::Stream st{seed, i};
      double u = st.uniforms(rng::purpose::init_component, 0)[0];
      std::size_t c = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
      if (c >= cum.size()) c = cum.size() - 1;
      const MixtureComponent& comp = dist.components[c];
      auto z = st.normals(rng::purpose::init_normal, 0);
      double sd = std::sqrt(comp.variance);
      for (int a = 0; a < dim; ++a) pos[i * dim + a] = comp.mean[a] + sd * z[a];
    });
    return pos;
  }

  // Grid kind: exact sampling of the piecewise-constant density. Pick the
  // cell from the cumulative cell masses, then place uniformly inside it.
  const GridSpec& spec = dist.density.spec();
  std::vector<double> cum(spec.size());
  double acc = 0.0;
  for (std::uint64_t f = 0; f < spec.size(); ++f) {
    acc += dist.density.value(f);
    cum[f] = acc;
  }
  double total = acc;
  require(total > 0.0, errc::domain_error, "initial density has no mass");
  parallel_for(count, [&](std::size_t i) {
    rng::Stream st{seed, i};
    auto u = st.uniforms(rng::purpose::init_component, 0);
    double target = u[0] * total;
    std::uint64_t f =
        std::lower_bound(cum.begin(), cum.end(), target) - cum.begin();
    if (f >= spec.size()) f = spec.size() - 1;
    if (spec.dim == 1) {
      pos[i] = spec.lower[0] + (static_cast<double>(f) + u[1]) * spec.dx(0);
    } else {
      std::uint64_t ci = f / spec.cells[1], cj = f % spec.cells[1];
      pos[i * 2] = spec.lower[0] + (static_cast<double>(ci) + u[1]) * spec.dx(0);
      pos[i * 2 + 1] = spec.lower[1] + (static_cast<double>(cj) + u[2]) * spec.dx(1);
    }
  });
  return pos;
}

}  // namespace ddsde
