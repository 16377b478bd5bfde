#include "ddsde/heat_kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ddsde/errors.hpp"

namespace ddsde::heat {

namespace {

void check_point(double t, std::size_t d) {
  require(t > 0.0 && std::isfinite(t), errc::domain_error,
          "kernel time must be positive, got " + std::to_string(t));
  require(d == 1 || d == 2, errc::domain_error,
          "kernel dimension must be 1 or 2, got " + std::to_string(d));
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

double eval(double t, std::span<const double> x) {
  check_point(t, x.size());
  double pref = std::pow(4.0 * std::numbers::pi * t, -0.5 * static_cast<double>(x.size()));
  return pref * std::exp(-norm2(x) / (4.0 * t));
}

void grad(double t, std::span<const double> x, std::span<double> out) {
  check_point(t, x.size());
  require(out.size() == x.size(), errc::invalid_argument, "gradient output size mismatch");
  double g = eval(t, x);
  for (std::size_t a = 0; a < x.size(); ++a) out[a] = -x[a] / (2.0 * t) * g;
}

double ck_convolve_check(double t, double s, const GridSpec& spec) {
  require(t > 0.0 && std::isfinite(t), errc::domain_error,
          "t must be positive, got " + std::to_string(t));
  require(s > 0.0 && std::isfinite(s), errc::domain_error,
          "s must be positive, got " + std::to_string(s));
  double sigma_min = std::sqrt(2.0 * std::min(t, s));
  double sigma_sum = std::sqrt(2.0 * (t + s));
  for (int a = 0; a < spec.dim; ++a) {
    require(spec.dx(a) <= sigma_min / 8.0, errc::resolution_error,
            "axis " + std::to_string(a) + ": cell width " + std::to_string(spec.dx(a)) +
                " exceeds sqrt(2 min(t,s))/8 = " + std::to_string(sigma_min / 8.0));
    require(spec.half_width(a) >= 6.0 * sigma_sum, errc::resolution_error,
            "axis " + std::to_string(a) + ": half-width " +
                std::to_string(spec.half_width(a)) + " below the 6 sigma padding " +
                std::to_string(6.0 * sigma_sum));
  }

  std::uint64_t n = spec.size();
  std::vector<double> a_vals(n), kernel(n), target(n);
  double c[2] = {0.5 * (spec.lower[0] + spec.upper[0]),
                 spec.dim == 2 ? 0.5 * (spec.lower[1] + spec.upper[1]) : 0.0};
  auto offsets = [&](std::uint64_t flat, double* off, double* rel) {
    if (spec.dim == 1) {
      rel[0] = spec.center(0, flat) - c[0];
      double o = static_cast<double>(flat) * spec.dx(0);
      double w = spec.upper[0] - spec.lower[0];
      off[0] = o > 0.5 * w ? o - w : o;
    } else {
      std::uint64_t i = flat / spec.cells[1], j = flat % spec.cells[1];
      rel[0] = spec.center(0, i) - c[0];
      rel[1] = spec.center(1, j) - c[1];
      double o0 = static_cast<double>(i) * spec.dx(0);
      double w0 = spec.upper[0] - spec.lower[0];
      off[0] = o0 > 0.5 * w0 ? o0 - w0 : o0;
      double o1 = static_cast<double>(j) * spec.dx(1);
      double w1 = spec.upper[1] - spec.lower[1];
      off[1] = o1 > 0.5 * w1 ? o1 - w1 : o1;
    }
  };
  for (std::uint64_t f = 0; f < n; ++f) {
    double off[2], rel[2];
    offsets(f, off, rel);
    std::span<const double> offs(off, spec.dim), rels(rel, spec.dim);
    a_vals[f] = eval(t, rels);
    kernel[f] = eval(s, offs);
    target[f] = eval(t + s, rels);
  }
  std::vector<double> conv = circular_convolve(spec, a_vals, kernel);
  double dev = 0.0;
  for (std::uint64_t f = 0; f < n; ++f)
    dev = std::max(dev, std::abs(conv[f] - target[f]));
  return dev;
}

namespace {

void check_hoelder_params(int j, double beta, std::size_t d) {
  require(j == 0 || j == 1, errc::domain_error,
          "derivative order must be 0 or 1, got " + std::to_string(j));
  require(beta > 0.0 && beta < 1.0, errc::domain_error,
          "beta must be in (0,1), got " + std::to_string(beta));
  require(d == 1 || d == 2, errc::domain_error, "dimension must be 1 or 2");
}

double deriv_diff(double ta, std::span<const double> xa, double tb,
                  std::span<const double> xb, int j) {
  if (j == 0) return std::abs(eval(ta, xa) - eval(tb, xb));
  double ga[2], gb[2];
  grad(ta, xa, std::span<double>(ga, xa.size()));
  grad(tb, xb, std::span<double>(gb, xb.size()));
  double s = 0.0;
  for (std::size_t a = 0; a < xa.size(); ++a) s += (ga[a] - gb[a]) * (ga[a] - gb[a]);
  return std::sqrt(s);
}

}  // namespace

BoundPair hoelder_space_bound(double t, std::span<const double> x1,
                              std::span<const double> x2, int j, double beta) {
  require(x1.size() == x2.size(), errc::invalid_argument, "point dimension mismatch");
  check_hoelder_params(j, beta, x1.size());
  require(t > 0.0 && std::isfinite(t), errc::domain_error, "t must be positive");
  double dist2 = 0.0;
  for (std::size_t a = 0; a < x1.size(); ++a)
    dist2 += (x1[a] - x2[a]) * (x1[a] - x2[a]);
  double dist = std::sqrt(dist2);
  BoundPair p;
  p.lhs = deriv_diff(t, x1, t, x2, j);
  p.rhs = std::pow(dist, beta) * std::pow(t, -0.5 * j - beta) *
          (eval(4.0 * t, x1) + eval(4.0 * t, x2));
  return p;
}

BoundPair hoelder_time_bound(double t1, double t2, std::span<const double> x,
                             int j, double beta) {
  check_hoelder_params(j, beta, x.size());
  require(t1 > 0.0 && t2 > t1 && std::isfinite(t2), errc::domain_error,
          "need 0 < t1 < t2");
  BoundPair p;
  p.lhs = deriv_diff(t1, x, t2, x, j);
  p.rhs = std::pow(t2 - t1, 0.5 * beta) *
          (std::pow(t1, -0.5 * (j + beta)) * eval(2.0 * t1, x) +
           std::pow(t2, -0.5 * (j + beta)) * eval(2.0 * t2, x));
  return p;
}

}  // namespace ddsde::heat
