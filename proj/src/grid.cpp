#include "ddsde/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "ddsde/errors.hpp"
#include "ddsde/parallel.hpp"

namespace ddsde {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool power_of_two(std::uint64_t n) { return n >= 2 && std::has_single_bit(n); }

double gauss1(double t, double off) {
  return std::exp(-off * off / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t);
}

double wrapped_offset(std::uint64_t i, std::uint64_t n, double dx) {
  double off = static_cast<double>(i) * dx;
  double width = static_cast<double>(n) * dx;
  return off > 0.5 * width ? off - width : off;
}

// FFTW planning and execution share one lock; plans and aligned buffers are
// cached per grid size so repeated convolutions reuse identical code paths.
struct FftEntry {
  std::uint64_t n = 0, nc = 0;
  double* ra = nullptr;
  double* rk = nullptr;
  fftw_complex* ca = nullptr;
  fftw_complex* ck = nullptr;
  fftw_plan fwd_a{}, fwd_k{}, inv{};
};

std::mutex g_fft_mutex;
std::map<std::array<std::uint64_t, 3>, FftEntry>& fft_cache() {
  static std::map<std::array<std::uint64_t, 3>, FftEntry> cache;
  return cache;
}

FftEntry& fft_entry_locked(const GridSpec& spec) {
  std::array<std::uint64_t, 3> key{static_cast<std::uint64_t>(spec.dim),
                                   spec.cells[0],
                                   spec.dim == 2 ? spec.cells[1] : 0};
  auto it = fft_cache().find(key);
  if (it != fft_cache().end()) return it->second;

  FftEntry e;
  std::uint64_t n0 = spec.cells[0];
  std::uint64_t n1 = spec.dim == 2 ? spec.cells[1] : 1;
  e.n = n0 * n1;
  e.nc = spec.dim == 2 ? n0 * (n1 / 2 + 1) : n0 / 2 + 1;
  e.ra = fftw_alloc_real(e.n);
  e.rk = fftw_alloc_real(e.n);
  e.ca = fftw_alloc_complex(e.nc);
  e.ck = fftw_alloc_complex(e.nc);
  require(e.ra && e.rk && e.ca && e.ck, errc::internal_error, "fftw_alloc failed");
  if (spec.dim == 1) {
    e.fwd_a = fftw_plan_dft_r2c_1d(static_cast<int>(n0), e.ra, e.ca, FFTW_ESTIMATE);
    e.fwd_k = fftw_plan_dft_r2c_1d(static_cast<int>(n0), e.rk, e.ck, FFTW_ESTIMATE);
    e.inv = fftw_plan_dft_c2r_1d(static_cast<int>(n0), e.ca, e.ra, FFTW_ESTIMATE);
  } else {
    e.fwd_a = fftw_plan_dft_r2c_2d(static_cast<int>(n0), static_cast<int>(n1),
                                   e.ra, e.ca, FFTW_ESTIMATE);
    e.fwd_k = fftw_plan_dft_r2c_2d(static_cast<int>(n0), static_cast<int>(n1),
                                   e.rk, e.ck, FFTW_ESTIMATE);
    e.inv = fftw_plan_dft_c2r_2d(static_cast<int>(n0), static_cast<int>(n1),
                                 e.ca, e.ra, FFTW_ESTIMATE);
  }
  require(e.fwd_a && e.fwd_k && e.inv, errc::internal_error, "fftw planning failed");
  return fft_cache().emplace(key, e).first->second;
}

}  // namespace

double kahan_sum(std::span<const double> v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    double y = x - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

GridSpec GridSpec::make(int dim, std::span<const double> lower,
                        std::span<const double> upper,
                        std::span<const std::uint64_t> cells) {
  require(dim == 1 || dim == 2, errc::invalid_argument,
          "grid dimension must be 1 or 2, got " + std::to_string(dim));
  require(lower.size() == static_cast<std::size_t>(dim) &&
              upper.size() == static_cast<std::size_t>(dim) &&
              cells.size() == static_cast<std::size_t>(dim),
          errc::invalid_argument, "grid spec arrays must have length dim");
  GridSpec s;
  s.dim = dim;
  for (int a = 0; a < dim; ++a) {
    require(std::isfinite(lower[a]) && std::isfinite(upper[a]) && upper[a] > lower[a],
            errc::invalid_argument,
            "axis " + std::to_string(a) + ": need finite upper > lower");
    require(power_of_two(cells[a]), errc::invalid_argument,
            "axis " + std::to_string(a) + ": cell count " +
                std::to_string(cells[a]) + " is not a power of two >= 2");
    s.lower[a] = lower[a];
    s.upper[a] = upper[a];
    s.cells[a] = cells[a];
  }
  return s;
}

GridSpec GridSpec::make1d(double lower, double upper, std::uint64_t cells) {
  return make(1, std::span(&lower, 1), std::span(&upper, 1), std::span(&cells, 1));
}

GridDensity GridDensity::from_values(GridSpec spec, std::vector<double> values) {
  require(values.size() == spec.size(), errc::invalid_argument,
          "value count " + std::to_string(values.size()) + " != grid size " +
              std::to_string(spec.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]) && values[i] >= 0.0, errc::domain_error,
            "density value at flat index " + std::to_string(i) +
                " is negative or non-finite: " + fmt(values[i]));
  }
  GridDensity g;
  g.spec_ = spec;
  g.mass_ = kahan_sum(values) * spec.cell_volume();
  g.values_ = std::move(values);
  return g;
}

double GridDensity::boundary_mass() const {
  double sum = 0.0;
  if (spec_.dim == 1) {
    sum = values_.front() + values_.back();
  } else {
    std::uint64_t n0 = spec_.cells[0], n1 = spec_.cells[1];
    for (std::uint64_t j = 0; j < n1; ++j)
      sum += values_[j] + values_[(n0 - 1) * n1 + j];
    for (std::uint64_t i = 1; i + 1 < n0; ++i)
      sum += values_[i * n1] + values_[i * n1 + n1 - 1];
  }
  return sum * spec_.cell_volume();
}

void GridDensity::check_unit_mass(double tol) const {
  require(std::abs(mass_ - 1.0) <= tol, errc::domain_error,
          "density mass " + fmt(mass_) + " deviates from 1 beyond " + fmt(tol));
}

double GridDensity::interpolate(std::span<const double> x) const {
  require(x.size() == static_cast<std::size_t>(spec_.dim), errc::invalid_argument,
          "query dimension mismatch");
  double w[2] = {0.0, 0.0};
  double s[2] = {0.0, 0.0};
  std::int64_t i0[2] = {0, 0};
  for (int a = 0; a < spec_.dim; ++a) {
    if (x[a] < spec_.lower[a] || x[a] > spec_.upper[a]) return 0.0;
    s[a] = (x[a] - spec_.lower[a]) / spec_.dx(a) - 0.5;
    i0[a] = static_cast<std::int64_t>(std::floor(s[a]));
    w[a] = s[a] - static_cast<double>(i0[a]);
    std::int64_t last = static_cast<std::int64_t>(spec_.cells[a]) - 2;
    if (i0[a] < 0) { i0[a] = 0; w[a] = 0.0; }
    if (i0[a] > last) { i0[a] = last; w[a] = 1.0; }
  }
  if (spec_.dim == 1) {
    return values_[i0[0]] * (1.0 - w[0]) + values_[i0[0] + 1] * w[0];
  }
  std::uint64_t n1 = spec_.cells[1];
  auto v = [&](std::int64_t i, std::int64_t j) {
    return values_[static_cast<std::uint64_t>(i) * n1 + static_cast<std::uint64_t>(j)];
  };
  return (1.0 - w[0]) * ((1.0 - w[1]) * v(i0[0], i0[1]) + w[1] * v(i0[0], i0[1] + 1)) +
         w[0] * ((1.0 - w[1]) * v(i0[0] + 1, i0[1]) + w[1] * v(i0[0] + 1, i0[1] + 1));
}

std::vector<double> circular_convolve(const GridSpec& spec,
                                      std::span<const double> values,
                                      std::span<const double> kernel) {
  require(values.size() == spec.size() && kernel.size() == spec.size(),
          errc::invalid_argument, "convolution input size mismatch");
  std::lock_guard<std::mutex> lock(g_fft_mutex);
  FftEntry& e = fft_entry_locked(spec);
  std::memcpy(e.ra, values.data(), e.n * sizeof(double));
  std::memcpy(e.rk, kernel.data(), e.n * sizeof(double));
  fftw_execute(e.fwd_a);
  fftw_execute(e.fwd_k);
  for (std::uint64_t i = 0; i < e.nc; ++i) {
    double ar = e.ca[i][0], ai = e.ca[i][1];
    double kr = e.ck[i][0], ki = e.ck[i][1];
    e.ca[i][0] = ar * kr - ai * ki;
    e.ca[i][1] = ar * ki + ai * kr;
  }
  fftw_execute(e.inv);
  double scale = spec.cell_volume() / static_cast<double>(e.n);
  std::vector<double> out(e.n);
  for (std::uint64_t i = 0; i < e.n; ++i) out[i] = e.ra[i] * scale;
  return out;
}

namespace {

void check_kernel_resolution(const GridSpec& spec, std::span<const double> t_axis) {
  for (int a = 0; a < spec.dim; ++a) {
    double t = t_axis[a];
    require(t > 0.0 && std::isfinite(t), errc::domain_error,
            "kernel time must be positive, got " + fmt(t));
    double sigma = std::sqrt(2.0 * t);
    if (spec.dx(a) > sigma / 4.0) {
      double width = spec.upper[a] - spec.lower[a];
      std::uint64_t need = std::bit_ceil(
          static_cast<std::uint64_t>(std::ceil(width / (sigma / 4.0))));
      fail(errc::resolution_error,
           "axis " + std::to_string(a) + ": cell width " + fmt(spec.dx(a)) +
               " exceeds sqrt(2t)/4 = " + fmt(sigma / 4.0) + "; need >= " +
               std::to_string(need) + " cells");
    }
  }
}

void check_padding(const GridDensity& a, std::span<const double> t_axis) {
  const GridSpec& spec = a.spec();
  std::uint64_t band[2] = {0, 0};
  for (int ax = 0; ax < spec.dim; ++ax) {
    double pad = 6.0 * std::sqrt(2.0 * t_axis[ax]);
    band[ax] = static_cast<std::uint64_t>(std::ceil(pad / spec.dx(ax)));
    require(2 * band[ax] < spec.cells[ax], errc::resolution_error,
            "axis " + std::to_string(ax) + ": domain too narrow for 6 sigma = " +
                fmt(pad) + " of padding");
  }
  double band_mass = 0.0;
  if (spec.dim == 1) {
    std::uint64_t n = spec.cells[0];
    for (std::uint64_t i = 0; i < band[0]; ++i)
      band_mass += a.value(i) + a.value(n - 1 - i);
  } else {
    std::uint64_t n0 = spec.cells[0], n1 = spec.cells[1];
    for (std::uint64_t i = 0; i < n0; ++i)
      for (std::uint64_t j = 0; j < n1; ++j)
        if (i < band[0] || i >= n0 - band[0] || j < band[1] || j >= n1 - band[1])
          band_mass += a.value(i * n1 + j);
  }
  band_mass *= spec.cell_volume();
  require(band_mass <= leak_tol, errc::resolution_error,
          "mass " + fmt(band_mass) + " within the 6 sigma padding band exceeds " +
              fmt(leak_tol) + "; enlarge the domain");
}

}  // namespace

GridDensity gaussian_convolve_aniso(const GridDensity& a,
                                    std::span<const double> t_axis,
                                    ConvolveStats* stats) {
  const GridSpec& spec = a.spec();
  require(t_axis.size() == static_cast<std::size_t>(spec.dim),
          errc::invalid_argument, "one kernel time per axis required");
  check_kernel_resolution(spec, t_axis);
  check_padding(a, t_axis);

  std::uint64_t n = spec.size();
  std::vector<double> kernel(n);
  if (spec.dim == 1) {
    for (std::uint64_t i = 0; i < n; ++i)
      kernel[i] = gauss1(t_axis[0], wrapped_offset(i, spec.cells[0], spec.dx(0)));
  } else {
    std::uint64_t n0 = spec.cells[0], n1 = spec.cells[1];
    std::vector<double> k0(n0), k1(n1);
    for (std::uint64_t i = 0; i < n0; ++i)
      k0[i] = gauss1(t_axis[0], wrapped_offset(i, n0, spec.dx(0)));
    for (std::uint64_t j = 0; j < n1; ++j)
      k1[j] = gauss1(t_axis[1], wrapped_offset(j, n1, spec.dx(1)));
    for (std::uint64_t i = 0; i < n0; ++i)
      for (std::uint64_t j = 0; j < n1; ++j) kernel[i * n1 + j] = k0[i] * k1[j];
  }
  double ksum = kahan_sum(kernel) * spec.cell_volume();
  for (double& k : kernel) k /= ksum;

  std::vector<double> out = circular_convolve(spec, a.values(), kernel);

  double clipped = 0.0;
  for (double& v : out) {
    if (v < 0.0) {
      clipped -= v;
      v = 0.0;
    }
  }
  clipped *= spec.cell_volume();
  if (stats) stats->clipped_mass = clipped;
  double new_mass = kahan_sum(out) * spec.cell_volume();
  require(new_mass > 0.0, errc::internal_error, "convolution lost all mass");
  double scale = a.mass() / new_mass;
  for (double& v : out) v *= scale;
  return GridDensity::from_values(spec, std::move(out));
}

GridDensity gaussian_convolve(const GridDensity& a, double t, ConvolveStats* stats) {
  double ts[2] = {t, t};
  return gaussian_convolve_aniso(a, std::span(ts, a.spec().dim), stats);
}

std::vector<double> pushforward_values(const GridSpec& spec,
                                       std::span<const double> values,
                                       std::span<const double> velocity,
                                       double h, double* wrapped_mass) {
  std::uint64_t n = spec.size();
  require(values.size() == n, errc::invalid_argument, "value size mismatch");
  require(velocity.size() == n * static_cast<std::uint64_t>(spec.dim),
          errc::invalid_argument, "velocity size mismatch");
  std::vector<double> out(n, 0.0);
  double wrapped = 0.0;
  const double inv_dx[2] = {1.0 / spec.dx(0), spec.dim == 2 ? 1.0 / spec.dx(1) : 0.0};
  const std::int64_t g0 = static_cast<std::int64_t>(spec.cells[0]);
  const std::int64_t g1 = spec.dim == 2 ? static_cast<std::int64_t>(spec.cells[1]) : 1;

  auto wrap = [](std::int64_t i, std::int64_t g, bool& wrapped_flag) {
    if (i >= 0 && i < g) return i;
    wrapped_flag = true;
    std::int64_t m = i % g;
    return m < 0 ? m + g : m;
  };

  if (spec.dim == 1) {
    for (std::int64_t c = 0; c < g0; ++c) {
      double m = values[c];
      if (m == 0.0) continue;
      double s = static_cast<double>(c) + h * velocity[c] * inv_dx[0];
      std::int64_t i0 = static_cast<std::int64_t>(std::floor(s));
      double w = s - static_cast<double>(i0);
      bool wf = false;
      out[wrap(i0, g0, wf)] += m * (1.0 - w);
      out[wrap(i0 + 1, g0, wf)] += m * w;
      if (wf) wrapped += std::abs(m);
    }
  } else {
    for (std::int64_t ci = 0; ci < g0; ++ci) {
      for (std::int64_t cj = 0; cj < g1; ++cj) {
        std::uint64_t c = static_cast<std::uint64_t>(ci) * g1 + cj;
        double m = values[c];
        if (m == 0.0) continue;
        double s0 = static_cast<double>(ci) + h * velocity[2 * c] * inv_dx[0];
        double s1 = static_cast<double>(cj) + h * velocity[2 * c + 1] * inv_dx[1];
        std::int64_t i0 = static_cast<std::int64_t>(std::floor(s0));
        std::int64_t j0 = static_cast<std::int64_t>(std::floor(s1));
        double w0 = s0 - static_cast<double>(i0);
        double w1 = s1 - static_cast<double>(j0);
        bool wf = false;
        std::int64_t ia = wrap(i0, g0, wf), ib = wrap(i0 + 1, g0, wf);
        std::int64_t ja = wrap(j0, g1, wf), jb = wrap(j0 + 1, g1, wf);
        out[ia * g1 + ja] += m * (1.0 - w0) * (1.0 - w1);
        out[ia * g1 + jb] += m * (1.0 - w0) * w1;
        out[ib * g1 + ja] += m * w0 * (1.0 - w1);
        out[ib * g1 + jb] += m * w0 * w1;
        if (wf) wrapped += std::abs(m);
      }
    }
  }
  if (wrapped_mass) *wrapped_mass = wrapped * spec.cell_volume();
  return out;
}

GridDensity drift_pushforward(const GridDensity& a,
                              std::span<const double> velocity, double h) {
  const GridSpec& spec = a.spec();
  require(h >= 0.0 && std::isfinite(h), errc::invalid_argument,
          "step h must be finite and >= 0");
  std::uint64_t n = spec.size();
  require(velocity.size() == n * static_cast<std::uint64_t>(spec.dim),
          errc::invalid_argument, "velocity size mismatch");

  double max_disp[2] = {0.0, 0.0};
  for (std::uint64_t c = 0; c < n; ++c) {
    for (int ax = 0; ax < spec.dim; ++ax) {
      double d = std::abs(h * velocity[c * spec.dim + ax]);
      require(std::isfinite(d), errc::domain_error,
              "non-finite displacement at flat cell " + std::to_string(c));
      if (d > max_disp[ax]) max_disp[ax] = d;
    }
  }
  constexpr double safety_fraction = 0.25;
  for (int ax = 0; ax < spec.dim; ++ax) {
    require(max_disp[ax] <= safety_fraction * spec.half_width(ax),
            errc::domain_error,
            "axis " + std::to_string(ax) + ": displacement " + fmt(max_disp[ax]) +
                " exceeds " + fmt(safety_fraction) + " of the domain half-width");
  }
  if (h == 0.0 || (max_disp[0] == 0.0 && max_disp[1] == 0.0)) {
    return GridDensity::from_values(spec, std::vector<double>(a.values()));
  }

  double wrapped = 0.0;
  std::vector<double> out = pushforward_values(spec, a.values(), velocity, h, &wrapped);
  require(wrapped <= leak_tol, errc::domain_error,
          "drift map pushed mass " + fmt(wrapped) +
              " across the domain boundary (leak tolerance " + fmt(leak_tol) + ")");
  return GridDensity::from_values(spec, std::move(out));
}

GridDensity drift_pushforward(const GridDensity& a, const ShiftField& shift, double h) {
  const GridSpec& spec = a.spec();
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
      shift(std::span<const double>(x, spec.dim), std::span<double>(v, spec.dim));
      for (int ax = 0; ax < spec.dim; ++ax) velocity[c * spec.dim + ax] = v[ax];
    }
  });
  return drift_pushforward(a, velocity, h);
}

double l1_distance(const GridDensity& a, const GridDensity& b) {
  require(a.spec() == b.spec(), errc::data_mismatch,
          "l1_distance requires identical grid specs");
  std::vector<double> diff(a.values().size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = std::abs(a.values()[i] - b.values()[i]);
  return kahan_sum(diff) * a.spec().cell_volume();
}

double lq_norm(const GridDensity& a, double q) {
  require(q > 1.0, errc::domain_error, "lq_norm requires q > 1");
  if (std::isinf(q)) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, v);
    return m;
  }
  std::vector<double> powed(a.values().size());
  for (std::size_t i = 0; i < powed.size(); ++i)
    powed[i] = std::pow(a.values()[i], q);
  return std::pow(kahan_sum(powed) * a.spec().cell_volume(), 1.0 / q);
}

GridDensity restrict_to(const GridDensity& fine, const GridSpec& coarse) {
  const GridSpec& fs = fine.spec();
  require(fs.dim == coarse.dim, errc::data_mismatch, "dimension mismatch");
  std::uint64_t ratio[2] = {1, 1};
  for (int a = 0; a < fs.dim; ++a) {
    require(fs.lower[a] == coarse.lower[a] && fs.upper[a] == coarse.upper[a],
            errc::data_mismatch, "restriction requires identical bounds");
    require(fs.cells[a] % coarse.cells[a] == 0, errc::data_mismatch,
            "fine cell count must be a multiple of the coarse count");
    ratio[a] = fs.cells[a] / coarse.cells[a];
  }
  std::vector<double> out(coarse.size(), 0.0);
  if (fs.dim == 1) {
    for (std::uint64_t c = 0; c < coarse.cells[0]; ++c) {
      double s = 0.0;
      for (std::uint64_t k = 0; k < ratio[0]; ++k)
        s += fine.value(c * ratio[0] + k);
      out[c] = s / static_cast<double>(ratio[0]);
    }
  } else {
    std::uint64_t fn1 = fs.cells[1];
    for (std::uint64_t ci = 0; ci < coarse.cells[0]; ++ci)
      for (std::uint64_t cj = 0; cj < coarse.cells[1]; ++cj) {
        double s = 0.0;
        for (std::uint64_t ki = 0; ki < ratio[0]; ++ki)
          for (std::uint64_t kj = 0; kj < ratio[1]; ++kj)
            s += fine.value((ci * ratio[0] + ki) * fn1 + cj * ratio[1] + kj);
        out[ci * coarse.cells[1] + cj] =
            s / static_cast<double>(ratio[0] * ratio[1]);
      }
  }
  return GridDensity::from_values(coarse, std::move(out));
}

double l1_on_common_grid(const GridDensity& a, const GridDensity& b) {
  if (a.spec() == b.spec()) return l1_distance(a, b);
  const GridSpec& sa = a.spec();
  const GridSpec& sb = b.spec();
  require(sa.dim == sb.dim, errc::data_mismatch, "dimension mismatch");
  bool a_finer = sa.cells[0] >= sb.cells[0];
  const GridDensity& fine = a_finer ? a : b;
  const GridDensity& coarse = a_finer ? b : a;
  return l1_distance(restrict_to(fine, coarse.spec()), coarse);
}

namespace {

constexpr char grid_magic[4] = {'D', 'D', 'G', '1'};

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_raw(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

void save_grid(const GridDensity& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_error, "cannot open " + path + " for writing");
  out.write(grid_magic, 4);
  write_raw(out, static_cast<std::uint64_t>(g.spec().dim));
  for (int a = 0; a < g.spec().dim; ++a) {
    write_raw(out, g.spec().lower[a]);
    write_raw(out, g.spec().upper[a]);
    write_raw(out, g.spec().cells[a]);
  }
  out.write(reinterpret_cast<const char*>(g.values().data()),
            static_cast<std::streamsize>(g.values().size() * sizeof(double)));
  require(out.good(), errc::io_error, "write failed for " + path);
}

GridDensity load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  require(in.good() && std::memcmp(magic, grid_magic, 4) == 0, errc::io_error,
          path + ": bad magic, not a DDG1 grid file");
  std::uint64_t dim;
  read_raw(in, dim);
  require(dim == 1 || dim == 2, errc::io_error,
          path + ": unsupported dimension " + std::to_string(dim));
  std::vector<double> lower(dim), upper(dim);
  std::vector<std::uint64_t> cells(dim);
  for (std::uint64_t a = 0; a < dim; ++a) {
    read_raw(in, lower[a]);
    read_raw(in, upper[a]);
    read_raw(in, cells[a]);
  }
  require(in.good(), errc::io_error, path + ": truncated header");
  GridSpec spec = GridSpec::make(static_cast<int>(dim), lower, upper, cells);
  std::vector<double> values(spec.size());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  require(in.good(), errc::io_error, path + ": truncated values");
  return GridDensity::from_values(spec, std::move(values));
}

void save_grid_csv(const GridDensity& g, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), errc::io_error, "cannot open " + path + " for writing");
  const GridSpec& spec = g.spec();
  if (spec.dim == 1) {
    out << "x,value\n";
    for (std::uint64_t i = 0; i < spec.cells[0]; ++i)
      out << fmt(spec.center(0, i)) << ',' << fmt(g.value(i)) << '\n';
  } else {
    out << "x0,x1,value\n";
    for (std::uint64_t i = 0; i < spec.cells[0]; ++i)
      for (std::uint64_t j = 0; j < spec.cells[1]; ++j)
        out << fmt(spec.center(0, i)) << ',' << fmt(spec.center(1, j)) << ','
            << fmt(g.value(i * spec.cells[1] + j)) << '\n';
  }
  require(out.good(), errc::io_error, "write failed for " + path);
}

}  // namespace ddsde
