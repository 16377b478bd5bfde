#include "ddsde/particles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ddsde/errors.hpp"
#include "ddsde/parallel.hpp"
#include "ddsde/philox.hpp"

namespace ddsde {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

constexpr char particle_magic[4] = {'D', 'D', 'P', '1'};

void check_ensemble(const ParticleEnsemble& e) {
  require(e.dim >= 1 && e.dim <= 3, errc::invalid_argument,
          "ensemble dimension must be 1..3");
  require(e.M >= 1, errc::invalid_argument, "ensemble must hold particles");
  require(e.positions.size() == e.M * static_cast<std::uint64_t>(e.dim),
          errc::invalid_argument, "ensemble position buffer size mismatch");
}

bool feedback_free(const DriftSpec& drift) {
  return drift.lipschitz_u.has_value() && *drift.lipschitz_u == 0.0;
}

}  // namespace

ParticleEnsemble init_ensemble(const InitialDistribution& dist, int dim,
                               std::uint64_t M, std::uint64_t seed) {
  require(dist.dim == dim, errc::invalid_argument,
          "initial law dimension mismatch");
  ParticleEnsemble e;
  e.dim = dim;
  e.M = M;
  e.k = 0;
  e.seed = seed;
  e.positions = sample_initial(dist, dim, M, seed);
  return e;
}

ParticleEnsemble advance(const ParticleEnsemble& e, const DriftSpec& drift,
                         const GridDensity* density, double h) {
  check_ensemble(e);
  require(drift.dim == e.dim, errc::invalid_argument, "drift dimension mismatch");
  require(h > 0.0 && std::isfinite(h), errc::invalid_argument,
          "step must be positive");
  bool use_drift = e.k >= 1;
  if (use_drift && !density)
    require(feedback_free(drift), errc::invalid_argument,
            "drift '" + drift.name +
                "' needs a density source (declares dependence on u)");
  if (density)
    require(density->spec().dim == e.dim, errc::invalid_argument,
            "feedback grid dimension mismatch");

  ParticleEnsemble out;
  out.dim = e.dim;
  out.M = e.M;
  out.k = e.k + 1;
  out.seed = e.seed;
  out.positions.resize(e.positions.size());
  const double t = static_cast<double>(e.k) * h;
  const double root = std::sqrt(2.0 * h);
  const int dim = e.dim;

  parallel_for_ranges(e.M, [&](std::size_t lo, std::size_t hi) {
    double b[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = lo; i < hi; ++i) {
      std::span<const double> x(e.positions.data() + i * dim, dim);
      double u = 0.0;
      if (use_drift) {
        if (density) u = density->interpolate(x);
        drift.eval(t, x, u, std::span<double>(b, dim));
      }
      rng::Stream st{e.seed, i};
      auto z = st.normals(rng::purpose::increment, e.k);
      for (int ax = 0; ax < dim; ++ax) {
        double next = x[ax] + (use_drift ? h * b[ax] : 0.0) + root * z[ax];
        if (!std::isfinite(next)) {
          std::ostringstream ss;
          ss << "particle " << i << " left the finite range at step " << e.k
             << ": x=(";
          for (int a = 0; a < dim; ++a) ss << (a ? ", " : "") << x[a];
          ss << "), u=" << u << ", b[" << ax << "]=" << b[ax];
          fail(errc::domain_error, ss.str());
        }
        out.positions[i * dim + ax] = next;
      }
    }
  });
  return out;
}

std::vector<double> kde_bandwidth(const ParticleEnsemble& e, const KdeSpec& spec) {
  check_ensemble(e);
  require(e.M >= 2, errc::invalid_argument, "kde needs at least two particles");
  std::vector<double> sigma(e.dim);
  if (spec.rule == KdeSpec::Rule::fixed) {
    require(spec.sigma_b > 0.0 && std::isfinite(spec.sigma_b),
            errc::invalid_argument, "fixed bandwidth must be positive");
    std::fill(sigma.begin(), sigma.end(), spec.sigma_b);
    return sigma;
  }
  const int dim = e.dim;
  for (int ax = 0; ax < dim; ++ax) {
    double mean = 0.0, c = 0.0;
    for (std::uint64_t i = 0; i < e.M; ++i) {
      double y = e.positions[i * dim + ax] - c;
      double s = mean + y;
      c = (s - mean) - y;
      mean = s;
    }
    mean /= static_cast<double>(e.M);
    double ss = 0.0;
    c = 0.0;
    for (std::uint64_t i = 0; i < e.M; ++i) {
      double d = e.positions[i * dim + ax] - mean;
      double y = d * d - c;
      double s = ss + y;
      c = (s - ss) - y;
      ss = s;
    }
    double sd = std::sqrt(ss / static_cast<double>(e.M - 1));
    double bw = 1.06 * sd *
                std::pow(static_cast<double>(e.M), -1.0 / (dim + 4.0));
    require(bw > 0.0 && std::isfinite(bw), errc::invalid_argument,
            "degenerate bandwidth on axis " + std::to_string(ax + 1) +
                " (sample spread " + fmt(sd) + ")");
    sigma[ax] = bw;
  }
  return sigma;
}

std::vector<double> kde_evaluate(const ParticleEnsemble& e, const KdeSpec& spec,
                                 std::span<const double> queries) {
  check_ensemble(e);
  require(e.M >= 2, errc::invalid_argument, "kde needs at least two particles");
  const int dim = e.dim;
  require(queries.size() % dim == 0, errc::invalid_argument,
          "query buffer size must be a multiple of dim");
  std::vector<double> sigma = kde_bandwidth(e, spec);
  double norm = 1.0;
  std::vector<double> inv2(dim);
  for (int ax = 0; ax < dim; ++ax) {
    norm /= sigma[ax] * std::sqrt(2.0 * std::numbers::pi);
    inv2[ax] = 1.0 / (2.0 * sigma[ax] * sigma[ax]);
  }
  std::size_t nq = queries.size() / dim;
  std::vector<double> out(nq);
  parallel_for_ranges(nq, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t q = lo; q < hi; ++q) {
      const double* y = queries.data() + q * dim;
      double sum = 0.0, c = 0.0;
      for (std::uint64_t i = 0; i < e.M; ++i) {
        double expo = 0.0;
        for (int ax = 0; ax < dim; ++ax) {
          double d = y[ax] - e.positions[i * dim + ax];
          expo += d * d * inv2[ax];
        }
        double v = std::exp(-expo) - c;
        double s = sum + v;
        c = (s - sum) - v;
        sum = s;
      }
      out[q] = norm * sum / static_cast<double>(e.M);
    }
  });
  return out;
}

GridDensity binned_kde(const ParticleEnsemble& e, const KdeSpec& spec,
                       const GridSpec& grid) {
  check_ensemble(e);
  require(e.dim == grid.dim, errc::invalid_argument, "kde grid dimension mismatch");
  std::vector<double> sigma = kde_bandwidth(e, spec);

  std::vector<double> counts(grid.size(), 0.0);
  double dropped = 0.0;
  const int dim = e.dim;
  const std::int64_t g0 = static_cast<std::int64_t>(grid.cells[0]);
  const std::int64_t g1 = dim == 2 ? static_cast<std::int64_t>(grid.cells[1]) : 1;
  for (std::uint64_t i = 0; i < e.M; ++i) {
    double s0 = (e.positions[i * dim] - grid.lower[0]) / grid.dx(0) - 0.5;
    std::int64_t i0 = static_cast<std::int64_t>(std::floor(s0));
    double w0 = s0 - static_cast<double>(i0);
    if (dim == 1) {
      if (i0 >= 0 && i0 < g0) counts[i0] += 1.0 - w0; else dropped += 1.0 - w0;
      if (i0 + 1 >= 0 && i0 + 1 < g0) counts[i0 + 1] += w0; else dropped += w0;
    } else {
      double s1 = (e.positions[i * dim + 1] - grid.lower[1]) / grid.dx(1) - 0.5;
      std::int64_t j0 = static_cast<std::int64_t>(std::floor(s1));
      double w1 = s1 - static_cast<double>(j0);
      const double w[4] = {(1 - w0) * (1 - w1), (1 - w0) * w1, w0 * (1 - w1),
                           w0 * w1};
      const std::int64_t ii[4] = {i0, i0, i0 + 1, i0 + 1};
      const std::int64_t jj[4] = {j0, j0 + 1, j0, j0 + 1};
      for (int c = 0; c < 4; ++c) {
        if (ii[c] >= 0 && ii[c] < g0 && jj[c] >= 0 && jj[c] < g1)
          counts[ii[c] * g1 + jj[c]] += w[c];
        else
          dropped += w[c];
      }
    }
  }
  require(dropped <= 1e-3 * static_cast<double>(e.M), errc::domain_error,
          "kde grid lost " + fmt(dropped) + " of " + std::to_string(e.M) +
              " particle weights past its boundary");

  double scale = 1.0 / (static_cast<double>(e.M) * grid.cell_volume());
  for (double& v : counts) v *= scale;
  GridDensity raw = GridDensity::from_values(grid, std::move(counts));
  double t_axis[2] = {0.5 * sigma[0] * sigma[0],
                      dim == 2 ? 0.5 * sigma[1] * sigma[1] : 0.0};
  GridDensity smooth =
      gaussian_convolve_aniso(raw, std::span<const double>(t_axis, dim), nullptr);
  // return exactly unit mass regardless of the (bounded) dropped weight
  std::vector<double> v(smooth.values().begin(), smooth.values().end());
  double mass = kahan_sum(v) * grid.cell_volume();
  for (double& w : v) w /= mass;
  return GridDensity::from_values(grid, std::move(v));
}

ParticleRunResult run_particles(const InitialDistribution& dist,
                                const DriftSpec& drift, int dim, std::uint64_t M,
                                std::uint64_t seed, const TimeGrid& time,
                                FeedbackMode mode, const KdeSpec& kde,
                                const GridSpec* kde_grid,
                                std::span<const GridDensity> feedback,
                                std::span<const double> snapshot_times) {
  require(drift.dim == dim, errc::invalid_argument, "drift dimension mismatch");
  bool needs_feedback = !feedback_free(drift) && time.N >= 2;
  if (needs_feedback) {
    if (mode == FeedbackMode::kde) {
      require(dim <= 2, errc::invalid_argument,
              "kde feedback needs dim <= 2; use a u-independent drift in dim 3");
      require(kde_grid != nullptr, errc::invalid_argument,
              "kde feedback needs a grid spec");
    } else {
      require(feedback.size() >= time.N - 1, errc::invalid_argument,
              "coupled mode needs the grid density at every step kh, k = 1..N-1");
    }
  }

  std::vector<std::uint64_t> wanted;
  for (double s : snapshot_times) wanted.push_back(time.lattice_index(s));

  ParticleRunResult result;
  ParticleEnsemble e = init_ensemble(dist, dim, M, seed);
  auto emit = [&](const ParticleEnsemble& cur) {
    for (std::size_t w = 0; w < wanted.size(); ++w)
      if (wanted[w] == cur.k)
        result.snapshots.emplace_back(snapshot_times[w], cur);
  };
  emit(e);
  for (std::uint64_t k = 0; k < time.N; ++k) {
    GridDensity own;
    const GridDensity* dens = nullptr;
    if (k >= 1 && needs_feedback) {
      if (mode == FeedbackMode::kde) {
        own = binned_kde(e, kde, *kde_grid);
        dens = &own;
      } else {
        dens = &feedback[k - 1];
      }
    }
    e = advance(e, drift, dens, time.h);
    emit(e);
  }
  return result;
}

double moment_increment_check(
    const std::vector<std::pair<double, ParticleEnsemble>>& trajectory,
    std::span<const std::pair<double, double>> pairs) {
  require(!pairs.empty(), errc::invalid_argument,
          "moment check needs at least one time pair");
  auto find = [&](double t) -> const ParticleEnsemble& {
    for (const auto& [s, ens] : trajectory)
      if (std::abs(s - t) <= 1e-9 * std::max(1.0, std::abs(t))) return ens;
    fail(errc::invalid_argument,
         "trajectory has no ensemble at time " + fmt(t));
  };
  double sup = 0.0;
  for (const auto& [s, t] : pairs) {
    require(s != t, errc::invalid_argument,
            "moment ratio undefined for coincident times");
    const ParticleEnsemble& a = find(s);
    const ParticleEnsemble& b = find(t);
    require(a.M == b.M && a.dim == b.dim, errc::data_mismatch,
            "ensembles differ in shape");
    double sum = 0.0, c = 0.0;
    const int dim = a.dim;
    for (std::uint64_t i = 0; i < a.M; ++i) {
      double r2 = 0.0;
      for (int ax = 0; ax < dim; ++ax) {
        double d = b.positions[i * dim + ax] - a.positions[i * dim + ax];
        r2 += d * d;
      }
      double v = r2 * r2 - c;
      double sm = sum + v;
      c = (sm - sum) - v;
      sum = sm;
    }
    double ratio = sum / static_cast<double>(a.M) / ((t - s) * (t - s));
    sup = std::max(sup, ratio);
  }
  return sup;
}

Expectation empirical_expectation(
    const ParticleEnsemble& e,
    const std::function<double(std::span<const double>)>& f, double f_bound) {
  check_ensemble(e);
  require(f_bound >= 0.0 && std::isfinite(f_bound), errc::invalid_argument,
          "test function needs a finite declared bound");
  std::vector<double> vals(e.M);
  const int dim = e.dim;
  parallel_for_ranges(e.M, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double v = f(std::span<const double>(e.positions.data() + i * dim, dim));
      require(std::isfinite(v) && std::abs(v) <= f_bound * (1.0 + 1e-12) + 1e-300,
              errc::domain_error,
              "test function exceeded its bound at particle " + std::to_string(i));
      vals[i] = v;
    }
  });
  double mean = kahan_sum(vals) / static_cast<double>(e.M);
  double ss = 0.0, c = 0.0;
  for (double v : vals) {
    double d = (v - mean) * (v - mean) - c;
    double s = ss + d;
    c = (s - ss) - d;
    ss = s;
  }
  double sd = e.M >= 2 ? std::sqrt(ss / static_cast<double>(e.M - 1)) : 0.0;
  Expectation out;
  out.value = mean;
  out.half_width = 3.0 * std::min(sd, f_bound) / std::sqrt(static_cast<double>(e.M));
  return out;
}

void save_particles(const ParticleEnsemble& e, const std::string& path) {
  check_ensemble(e);
  std::ofstream os(path, std::ios::binary);
  require(os.good(), errc::io_error, "cannot open '" + path + "' for writing");
  os.write(particle_magic, 4);
  std::uint64_t hdr[4] = {static_cast<std::uint64_t>(e.dim), e.M, e.k, e.seed};
  os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  os.write(reinterpret_cast<const char*>(e.positions.data()),
           static_cast<std::streamsize>(e.positions.size() * sizeof(double)));
  require(os.good(), errc::io_error, "write failed for '" + path + "'");
}

ParticleEnsemble load_particles(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), errc::io_error, "cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, particle_magic, 4) == 0, errc::io_error,
          "'" + path + "' is not a particle snapshot");
  std::uint64_t hdr[4];
  is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  require(is.good() && hdr[0] >= 1 && hdr[0] <= 3 && hdr[1] >= 1, errc::io_error,
          "'" + path + "' has a corrupt header");
  ParticleEnsemble e;
  e.dim = static_cast<int>(hdr[0]);
  e.M = hdr[1];
  e.k = hdr[2];
  e.seed = hdr[3];
  e.positions.resize(e.M * hdr[0]);
  is.read(reinterpret_cast<char*>(e.positions.data()),
          static_cast<std::streamsize>(e.positions.size() * sizeof(double)));
  require(is.good(), errc::io_error, "'" + path + "' ends before its positions");
  return e;
}

}  // namespace ddsde
