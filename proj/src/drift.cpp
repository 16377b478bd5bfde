#include "ddsde/drift.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <sstream>

#include "ddsde/errors.hpp"
#include "ddsde/expr.hpp"
#include "ddsde/philox.hpp"

namespace ddsde {

void DriftSpec::probe(double t, std::span<const double> x, double u,
                      std::span<double> out) const {
  require(static_cast<int>(x.size()) == dim && out.size() == x.size(),
          errc::invalid_argument, "drift argument dimension mismatch");
  double uc = std::clamp(u, 0.0, u_cap);
  evaluator(t, x, uc, out);
}

void DriftSpec::eval(double t, std::span<const double> x, double u,
                     std::span<double> out) const {
  probe(t, x, u, out);
  double n2 = 0.0;
  for (double v : out) n2 += v * v;
  require(std::sqrt(n2) <= bound * (1.0 + 1e-9) + 1e-12, errc::domain_error,
          "drift '" + name + "' exceeded its declared bound mid-run; "
          "run validate_bounded on this drift");
}

namespace {

std::string format_input(double t, std::span<const double> x, double u) {
  std::ostringstream ss;
  ss << "t=" << t << ", x=(";
  for (std::size_t a = 0; a < x.size(); ++a) ss << (a ? ", " : "") << x[a];
  ss << "), u=" << u;
  return ss.str();
}

struct SweepPoint {
  double t;
  double x[3];
  double u;
  double u2;
};

SweepPoint sweep_point(std::uint64_t i, int dim, const SweepRanges& r) {
  rng::Stream st{0, 0};
  auto a = st.uniforms(rng::purpose::sweep, i, 0);
  auto b = st.uniforms(rng::purpose::sweep, i, 1);
  SweepPoint p{};
  p.t = a[0] * r.t_max;
  p.u = a[1] * r.u_max;
  p.u2 = a[2] * r.u_max;
  for (int ax = 0; ax < dim; ++ax) p.x[ax] = r.x_lo + b[ax] * (r.x_hi - r.x_lo);
  return p;
}

}  // namespace

ValidationReport validate_bounded(const DriftSpec& spec, std::size_t sample_count,
                                  const SweepRanges& ranges) {
  require(sample_count >= 1, errc::invalid_argument, "sample_count must be >= 1");
  ValidationReport rep;
  rep.pass = true;
  double out[3];
  for (std::uint64_t i = 0; i < sample_count; ++i) {
    SweepPoint p = sweep_point(i, spec.dim, ranges);
    std::span<const double> x(p.x, spec.dim);
    std::span<double> o(out, spec.dim);
    try {
      spec.probe(p.t, x, p.u, o);
    } catch (const std::exception& e) {
      rep.pass = false;
      rep.detail = "evaluator threw at " + format_input(p.t, x, p.u) + ": " + e.what();
      return rep;
    }
    double n2 = 0.0;
    for (int ax = 0; ax < spec.dim; ++ax) n2 += out[ax] * out[ax];
    double norm = std::sqrt(n2);
    if (!std::isfinite(norm)) {
      rep.pass = false;
      rep.detail = "non-finite output at " + format_input(p.t, x, p.u);
      return rep;
    }
    if (norm > rep.observed) {
      rep.observed = norm;
      rep.detail = "max |b| = " + std::to_string(norm) + " at " + format_input(p.t, x, p.u);
    }
  }
  if (rep.observed > spec.bound * (1.0 + 1e-12) + 1e-300) {
    rep.pass = false;
    rep.detail = "declared bound " + std::to_string(spec.bound) + " violated: " + rep.detail;
  }
  return rep;
}

ValidationReport validate_lipschitz_u(const DriftSpec& spec,
                                      std::size_t sample_count,
                                      const SweepRanges& ranges) {
  require(sample_count >= 1, errc::invalid_argument, "sample_count must be >= 1");
  require(spec.lipschitz_u.has_value(), errc::not_applicable,
          "drift '" + spec.name + "' declares no Lipschitz-in-u constant");
  ValidationReport rep;
  rep.pass = true;
  double o1[3], o2[3];
  double delta = 1e-3 * ranges.u_max;
  for (std::uint64_t i = 0; i < sample_count; ++i) {
    SweepPoint p = sweep_point(i, spec.dim, ranges);
    std::span<const double> x(p.x, spec.dim);
    for (int local = 0; local < 2; ++local) {
      double ua = p.u;
      double ub = local ? std::min(p.u + delta, ranges.u_max) : p.u2;
      if (std::abs(ub - ua) < 1e-12) continue;
      try {
        spec.probe(p.t, x, ua, std::span<double>(o1, spec.dim));
        spec.probe(p.t, x, ub, std::span<double>(o2, spec.dim));
      } catch (const std::exception& e) {
        rep.pass = false;
        rep.detail = "evaluator threw at " + format_input(p.t, x, ua) + ": " + e.what();
        return rep;
      }
      double d2 = 0.0;
      for (int ax = 0; ax < spec.dim; ++ax) d2 += (o1[ax] - o2[ax]) * (o1[ax] - o2[ax]);
      double ratio = std::sqrt(d2) / std::abs(ub - ua);
      if (!std::isfinite(ratio)) {
        rep.pass = false;
        rep.detail = "non-finite output near " + format_input(p.t, x, ua);
        return rep;
      }
      if (ratio > rep.observed) {
        rep.observed = ratio;
        rep.detail = "max ratio " + std::to_string(ratio) + " between u=" +
                     std::to_string(ua) + " and u=" + std::to_string(ub) + " at " +
                     format_input(p.t, x, ua);
      }
    }
  }
  if (rep.observed > *spec.lipschitz_u * (1.0 + 1e-9) + 1e-300) {
    rep.pass = false;
    rep.detail = "declared Lipschitz constant " + std::to_string(*spec.lipschitz_u) +
                 " violated: " + rep.detail;
  }
  return rep;
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void check_params(const std::string& name, const std::map<std::string, double>& params,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    (void)value;
    bool ok = std::any_of(allowed.begin(), allowed.end(),
                          [&](const char* a) { return key == a; });
    require(ok, errc::config_error,
            "drift '" + name + "' does not take parameter '" + key + "'");
  }
}

}  // namespace

std::vector<std::string> catalog_names() {
  return {"zero", "constant", "tanh_density", "saturated_linear", "time_ramp",
          "indicator"};
}

DriftSpec catalog(const std::string& name, int dim,
                  const std::map<std::string, double>& params) {
  require(dim >= 1 && dim <= 3, errc::invalid_argument, "drift dimension must be 1..3");
  DriftSpec s;
  s.name = name;
  s.dim = dim;
  s.u_cap = param_or(params, "u_cap", 1e6);
  require(s.u_cap > 0.0, errc::config_error, "u_cap must be positive");

  auto zero_tail = [dim](std::span<double> out, double first) {
    out[0] = first;
    for (int a = 1; a < dim; ++a) out[a] = 0.0;
  };

  if (name == "zero") {
    check_params(name, params, {"u_cap"});
    s.bound = 0.0;
    s.lipschitz_u = 0.0;
    s.evaluator = [zero_tail](double, std::span<const double>, double,
                              std::span<double> out) { zero_tail(out, 0.0); };
    return s;
  }
  if (name == "constant") {
    check_params(name, params, {"c", "u_cap"});
    double c = param_or(params, "c", 1.0);
    s.bound = std::abs(c);
    s.lipschitz_u = 0.0;
    s.evaluator = [c, zero_tail](double, std::span<const double>, double,
                                 std::span<double> out) { zero_tail(out, c); };
    return s;
  }
  if (name == "tanh_density") {
    check_params(name, params, {"c", "u_cap"});
    double c = param_or(params, "c", 1.0);
    s.bound = std::abs(c);
    s.lipschitz_u = std::abs(c);
    s.evaluator = [c, zero_tail](double, std::span<const double>, double u,
                                 std::span<double> out) {
      zero_tail(out, c * std::tanh(u));
    };
    return s;
  }
  if (name == "saturated_linear") {
    check_params(name, params, {"c", "u_max", "u_cap"});
    double c = param_or(params, "c", 1.0);
    double u_max = param_or(params, "u_max", 1.0);
    require(u_max > 0.0, errc::config_error, "saturated_linear needs u_max > 0");
    s.bound = std::abs(c) * u_max;
    s.lipschitz_u = std::abs(c);
    s.evaluator = [c, u_max, zero_tail](double, std::span<const double>, double u,
                                        std::span<double> out) {
      zero_tail(out, c * std::min(u, u_max));
    };
    return s;
  }
  if (name == "time_ramp") {
    check_params(name, params, {"c", "T", "u_cap"});
    double c = param_or(params, "c", 1.0);
    double horizon = param_or(params, "T", 1.0);
    require(horizon > 0.0, errc::config_error, "time_ramp needs T > 0");
    s.bound = std::abs(c) * horizon;
    s.lipschitz_u = std::abs(c) * horizon;
    s.evaluator = [c, zero_tail](double t, std::span<const double>, double u,
                                 std::span<double> out) {
      zero_tail(out, c * t * std::tanh(u));
    };
    return s;
  }
  if (name == "indicator") {
    check_params(name, params, {"c", "u_cap"});
    double c = param_or(params, "c", 1.0);
    s.bound = std::abs(c);
    s.lipschitz_u = std::abs(c);
    s.x_continuous = false;  // measurable in x only; study paths, not acceptance
    s.evaluator = [c, zero_tail](double, std::span<const double> x, double u,
                                 std::span<double> out) {
      zero_tail(out, x[0] > 0.0 ? c * std::tanh(u) : 0.0);
    };
    return s;
  }

  std::string names;
  for (const auto& n : catalog_names()) names += (names.empty() ? "" : ", ") + n;
  fail(errc::config_error, "unknown drift '" + name + "'; catalog: " + names);
}

DriftSpec drift_from_expressions(const std::vector<std::string>& exprs, int dim,
                                 double bound, std::optional<double> lipschitz_u,
                                 bool x_continuous, double u_cap) {
  require(dim >= 1 && dim <= 3, errc::invalid_argument, "drift dimension must be 1..3");
  require(!exprs.empty() && exprs.size() <= static_cast<std::size_t>(dim),
          errc::config_error, "need 1.." + std::to_string(dim) + " expressions");
  require(bound >= 0.0 && std::isfinite(bound), errc::config_error,
          "expression drifts must declare a finite bound");
  auto compiled = std::make_shared<std::vector<Expr>>();
  for (const auto& e : exprs) compiled->push_back(Expr::parse(e));
  DriftSpec s;
  s.name = "expr";
  s.dim = dim;
  s.bound = bound;
  s.lipschitz_u = lipschitz_u;
  s.x_continuous = x_continuous;
  s.u_cap = u_cap;
  s.evaluator = [compiled](double t, std::span<const double> x, double u,
                           std::span<double> out) {
    double vars[5] = {t, x[0], x.size() > 1 ? x[1] : 0.0,
                      x.size() > 2 ? x[2] : 0.0, u};
    for (std::size_t a = 0; a < out.size(); ++a)
      out[a] = a < compiled->size() ? (*compiled)[a].eval(vars) : 0.0;
  };
  return s;
}

}  // namespace ddsde
