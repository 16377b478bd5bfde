#include "ddsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ddsde/errors.hpp"
#include "ddsde/parallel.hpp"

namespace ddsde {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct WindowedRatio {
  double ratio = 0.0;
  double x_lo = 0.0;
  double x_hi = 0.0;
};

WindowedRatio windowed_ratio(const GridDensity& density,
                             const GridDensity& dominator) {
  const GridSpec& spec = density.spec();
  WindowedRatio out;
  bool any = false;
  for (std::uint64_t c = 0; c < spec.size(); ++c) {
    if (dominator.value(c) < 1e-12) continue;
    double x = spec.center(0, spec.dim == 1 ? c : c / spec.cells[1]);
    if (!any) {
      out.x_lo = x;
      any = true;
    }
    out.x_hi = x;
    out.ratio = std::max(out.ratio, density.value(c) / dominator.value(c));
  }
  require(any, errc::domain_error,
          "dominating density is below 1e-12 on the whole grid; no window to "
          "certify");
  return out;
}

}  // namespace

BoundCertificate combine_sweep(std::string claim,
                               std::span<const std::uint64_t> n_values,
                               std::span<const double> constants,
                               double threshold) {
  require(!constants.empty() && n_values.size() == constants.size(),
          errc::invalid_argument,
          "sweep needs matching nonempty N and constant lists");
  BoundCertificate cert;
  cert.claim = std::move(claim);
  cert.threshold = threshold;
  cert.sweep_n.assign(n_values.begin(), n_values.end());
  cert.per_n.assign(constants.begin(), constants.end());
  bool finite = true;
  for (double c : cert.per_n) finite = finite && std::isfinite(c) && c >= 0.0;
  require(finite, errc::domain_error,
          "sweep constants must be finite and nonnegative");
  std::vector<double> sorted = cert.per_n;
  std::sort(sorted.begin(), sorted.end());
  double median = sorted.size() % 2 == 1
                      ? sorted[sorted.size() / 2]
                      : 0.5 * (sorted[sorted.size() / 2 - 1] +
                               sorted[sorted.size() / 2]);
  cert.constant = sorted.back();
  cert.stability_ratio =
      median > 0.0 ? cert.constant / median
                   : (cert.constant == 0.0
                          ? 1.0
                          : std::numeric_limits<double>::infinity());
  cert.pass = cert.stability_ratio <= threshold;
  return cert;
}

double domination_ratio(const GridDensity& density,
                        const InitialDistribution& initial, double t,
                        double lambda) {
  require(std::isfinite(t) && t > 0.0, errc::invalid_argument,
          "domination time must be positive");
  require(std::isfinite(lambda) && lambda >= 1.0, errc::invalid_argument,
          "lambda must be >= 1, got " + fmt(lambda));
  GridDensity dominator = from_initial(initial, density.spec(), lambda * t);
  return windowed_ratio(density, dominator).ratio;
}

BoundCertificate fit_domination(
    const std::vector<std::pair<std::uint64_t, GridDensity>>& densities,
    const InitialDistribution& initial, double t, double lambda,
    double threshold) {
  require(!densities.empty(), errc::invalid_argument,
          "domination sweep needs at least one density");
  require(std::isfinite(t) && t > 0.0, errc::invalid_argument,
          "domination time must be positive");
  require(std::isfinite(lambda) && lambda >= 1.0, errc::invalid_argument,
          "lambda must be >= 1, got " + fmt(lambda));
  const GridSpec& spec = densities.front().second.spec();
  std::vector<std::uint64_t> ns;
  std::vector<double> ratios;
  GridDensity dominator = from_initial(initial, spec, lambda * t);
  WindowedRatio last{};
  for (std::size_t i = 0; i < densities.size(); ++i) {
    require(densities[i].second.spec() == spec, errc::data_mismatch,
            "domination sweep densities live on different grids");
    require(i == 0 || densities[i].first > densities[i - 1].first,
            errc::invalid_argument, "sweep N values must be increasing");
    last = windowed_ratio(densities[i].second, dominator);
    ns.push_back(densities[i].first);
    ratios.push_back(last.ratio);
  }
  BoundCertificate cert = combine_sweep("domination", ns, ratios, threshold);
  cert.t_window = {t, t};
  cert.x_window = {last.x_lo, last.x_hi};
  return cert;
}

double hoelder_constant(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    HoelderKind kind, double beta, std::array<double, 2> t_window,
    std::array<double, 2> x_window) {
  require(beta > 0.0 && beta < 1.0, errc::invalid_argument,
          "beta must lie in (0, 1), got " + fmt(beta));
  require(!trajectory.empty(), errc::invalid_argument, "empty trajectory");
  const GridSpec& spec = trajectory.front().second.spec();
  require(spec.dim == 1, errc::invalid_argument,
          "hoelder fit is one-dimensional");
  require(t_window[0] > 0.0 && t_window[0] < t_window[1],
          errc::invalid_argument, "time window must satisfy 0 < lo < hi");
  require(x_window[0] < x_window[1] && x_window[0] >= spec.lower[0] &&
              x_window[1] <= spec.upper[0],
          errc::domain_error,
          "spatial window [" + fmt(x_window[0]) + ", " + fmt(x_window[1]) +
              "] leaves the grid [" + fmt(spec.lower[0]) + ", " +
              fmt(spec.upper[0]) + "]");

  std::vector<std::size_t> snaps;
  for (std::size_t j = 0; j < trajectory.size(); ++j) {
    double tj = trajectory[j].first;
    require(trajectory[j].second.spec() == spec, errc::data_mismatch,
            "trajectory densities live on different grids");
    if (tj >= t_window[0] - 1e-9 && tj <= t_window[1] + 1e-9)
      snaps.push_back(j);
  }
  require(snaps.size() >= (kind == HoelderKind::time ? 2u : 1u),
          errc::invalid_argument,
          "time window holds " + std::to_string(snaps.size()) +
              " snapshots; need more");

  std::vector<std::uint64_t> cells;
  for (std::uint64_t c = 0; c < spec.cells[0]; ++c) {
    double x = spec.center(0, c);
    if (x >= x_window[0] && x <= x_window[1]) cells.push_back(c);
  }
  require(cells.size() >= 2, errc::domain_error,
          "spatial window covers fewer than two cells");

  double exponent = -(1.0 + beta) / 2.0;  // d = 1
  if (kind == HoelderKind::space) {
    std::size_t stride = std::max<std::size_t>(1, (cells.size() + 127) / 128);
    std::vector<std::uint64_t> pts;
    for (std::size_t i = 0; i < cells.size(); i += stride)
      pts.push_back(cells[i]);
    std::vector<double> best(snaps.size(), 0.0);
    parallel_for_ranges(snaps.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t s = lo; s < hi; ++s) {
        const auto& [t, rho] = trajectory[snaps[s]];
        double scale = std::pow(t, exponent);
        double m = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
          for (std::size_t j = i + 1; j < pts.size(); ++j) {
            double dy = spec.center(0, pts[j]) - spec.center(0, pts[i]);
            double num = std::abs(rho.value(pts[j]) - rho.value(pts[i]));
            m = std::max(m, num / (std::pow(dy, beta) * scale));
          }
        best[s] = m;
      }
    });
    double c = 0.0;
    for (double b : best) c = std::max(c, b);
    return c;
  }

  std::size_t stride_c = std::max<std::size_t>(1, (cells.size() + 255) / 256);
  std::vector<std::uint64_t> pts;
  for (std::size_t i = 0; i < cells.size(); i += stride_c)
    pts.push_back(cells[i]);
  std::size_t stride_t = std::max<std::size_t>(1, (snaps.size() + 95) / 96);
  std::vector<std::size_t> times;
  for (std::size_t i = 0; i < snaps.size(); i += stride_t)
    times.push_back(snaps[i]);
  if (times.back() != snaps.back()) times.push_back(snaps.back());
  require(times.size() >= 2, errc::invalid_argument,
          "time window holds fewer than two strided snapshots");
  std::vector<double> best(pts.size(), 0.0);
  parallel_for_ranges(pts.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      std::uint64_t cell = pts[p];
      double m = 0.0;
      for (std::size_t i = 0; i < times.size(); ++i)
        for (std::size_t j = i + 1; j < times.size(); ++j) {
          double t1 = trajectory[times[i]].first;
          double t2 = trajectory[times[j]].first;
          double num = std::abs(trajectory[times[j]].second.value(cell) -
                                trajectory[times[i]].second.value(cell));
          double den =
              std::pow(t2 - t1, beta / 2.0) * std::pow(t1, exponent);
          m = std::max(m, num / den);
        }
      best[p] = m;
    }
  });
  double c = 0.0;
  for (double b : best) c = std::max(c, b);
  return c;
}

BoundCertificate fit_hoelder(
    const std::vector<std::pair<double, GridDensity>>& trajectory,
    HoelderKind kind, double beta, std::array<double, 2> t_window,
    std::array<double, 2> x_window) {
  BoundCertificate cert;
  cert.claim = kind == HoelderKind::space ? "hoelder_space" : "hoelder_time";
  cert.constant = hoelder_constant(trajectory, kind, beta, t_window, x_window);
  cert.stability_ratio = 1.0;
  cert.t_window = t_window;
  cert.x_window = x_window;
  cert.pass = std::isfinite(cert.constant);
  return cert;
}

ConvergenceCurve l1_convergence_study(
    const std::vector<std::pair<std::uint64_t, GridDensity>>& terminal_by_n,
    const GridDensity& reference, const DriftSpec& drift, double tolerance) {
  require(drift.lipschitz_u.has_value(), errc::not_applicable,
          "drift '" + drift.name +
              "' declares no Lipschitz-in-u constant; the L1 study covers "
              "Lipschitz drifts only");
  require(terminal_by_n.size() >= 4, errc::invalid_argument,
          "convergence curve needs at least 4 points, got " +
              std::to_string(terminal_by_n.size()));
  ConvergenceCurve curve;
  curve.tolerance = tolerance;
  for (std::size_t i = 0; i < terminal_by_n.size(); ++i) {
    require(i == 0 || terminal_by_n[i].first > terminal_by_n[i - 1].first,
            errc::invalid_argument, "sweep N values must be increasing");
    curve.abscissa.push_back(static_cast<double>(terminal_by_n[i].first));
    curve.ordinate.push_back(
        l1_on_common_grid(terminal_by_n[i].second, reference));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  auto n = static_cast<double>(curve.abscissa.size());
  for (std::size_t i = 0; i < curve.abscissa.size(); ++i) {
    double x = std::log(curve.abscissa[i]);
    double y = std::log(std::max(curve.ordinate[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  curve.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  curve.monotone = true;
  for (std::size_t i = 1; i < curve.ordinate.size(); ++i)
    if (curve.ordinate[i] > 1.1 * curve.ordinate[i - 1] + 1e-15)
      curve.monotone = false;
  curve.pass = curve.monotone && curve.ordinate.back() <= tolerance;
  return curve;
}

SmoothingCheck smoothing_check(const GridDensity& density, double t,
                               const InitialDistribution& initial, double q,
                               double c_fit) {
  require(std::isfinite(t) && t > 0.0, errc::invalid_argument,
          "time must be positive");
  require(std::isfinite(c_fit) && c_fit > 0.0, errc::invalid_argument,
          "calibration constant must be positive");
  require(q > static_cast<double>(density.spec().dim), errc::invalid_argument,
          "q must exceed the dimension, got " + fmt(q));
  require(!initial.has_atom(), errc::not_applicable,
          "initial carries an atom; the smoothing bound needs density "
          "initial data");
  double norm0;
  if (initial.kind == InitialDistribution::Kind::grid)
    norm0 = lq_norm(initial.density, q);
  else
    norm0 = lq_norm(from_initial(initial, density.spec(), 0.0), q);
  SmoothingCheck check;
  double exponent = static_cast<double>(density.spec().dim) / (2.0 * q);
  check.observed = lq_norm(density, std::numeric_limits<double>::infinity()) *
                   std::pow(t, exponent);
  check.bound = c_fit * norm0;
  check.pass = check.observed <= check.bound;
  return check;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), errc::io_error, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void write_certificate_csv(const BoundCertificate& cert,
                           const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "n,constant\n";
  if (cert.per_n.empty()) {
    out << 0 << "," << fmt(cert.constant) << "\n";
  } else {
    for (std::size_t i = 0; i < cert.per_n.size(); ++i)
      out << cert.sweep_n[i] << "," << fmt(cert.per_n[i]) << "\n";
  }
  require(out.good(), errc::io_error, "write failed on '" + path + "'");
}

void write_curve_csv(const ConvergenceCurve& curve, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "abscissa,ordinate\n";
  for (std::size_t i = 0; i < curve.abscissa.size(); ++i)
    out << fmt(curve.abscissa[i]) << "," << fmt(curve.ordinate[i]) << "\n";
  require(out.good(), errc::io_error, "write failed on '" + path + "'");
}

void write_series_csv(const std::vector<std::pair<double, double>>& series,
                      const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "t,value\n";
  for (const auto& [t, v] : series)
    out << fmt(t) << "," << fmt(v) << "\n";
  require(out.good(), errc::io_error, "write failed on '" + path + "'");
}

}  // namespace ddsde
