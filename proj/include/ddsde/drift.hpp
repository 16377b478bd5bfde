#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddsde {

// The vector field b(t, x, u) with its declared hypotheses. u is the density
// value at x and is clamped to [0, u_cap] before evaluation.
struct DriftSpec {
  std::string name;
  int dim = 1;
  double bound = 0.0;                  // declared sup norm
  std::optional<double> lipschitz_u;   // declared Lipschitz constant in u
  bool continuity_declared = true;     // continuous in (t,u) locally unif. in x
  bool x_continuous = true;            // false for merely measurable-in-x drifts
  double u_cap = 1e6;
  std::function<void(double, std::span<const double>, double, std::span<double>)>
      evaluator;

  // probe: clamp u and evaluate, no hypothesis check (validators use this).
  void probe(double t, std::span<const double> x, double u,
             std::span<double> out) const;
  // eval: probe + hard check against the declared bound (engines use this).
  void eval(double t, std::span<const double> x, double u,
            std::span<double> out) const;
};

struct SweepRanges {
  double t_max = 1.0;
  double x_lo = -16.0;
  double x_hi = 16.0;
  double u_max = 4.0;
};

struct ValidationReport {
  bool pass = false;
  double observed = 0.0;  // max |b|, or max difference ratio
  std::string detail;     // names the extremal or violating input
};

// Quasi-random sweep over (t, x, u); doubling sample_count extends the same
// deterministic sequence (prefix property).
ValidationReport validate_bounded(const DriftSpec& spec, std::size_t sample_count,
                                  const SweepRanges& ranges = {});
// Paired-evaluation sweep for the declared Lipschitz-in-u constant. Probes
// both independent u pairs and nearby pairs (u, u + delta).
ValidationReport validate_lipschitz_u(const DriftSpec& spec,
                                      std::size_t sample_count,
                                      const SweepRanges& ranges = {});

std::vector<std::string> catalog_names();
DriftSpec catalog(const std::string& name, int dim = 1,
                  const std::map<std::string, double>& params = {});

// Drift from one expression per component over (t, x1..x3, u); missing
// trailing components are zero. The bound must be declared by the caller.
DriftSpec drift_from_expressions(const std::vector<std::string>& exprs, int dim,
                                 double bound, std::optional<double> lipschitz_u,
                                 bool x_continuous = true, double u_cap = 1e6);

}  // namespace ddsde
