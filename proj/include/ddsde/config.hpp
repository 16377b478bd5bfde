#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddsde/drift.hpp"
#include "ddsde/euler_density.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/initial.hpp"

namespace ddsde {

// Config text format: named top-level tables, `key = value` lines, values are
// strings, integers, reals, booleans, or flat arrays of one scalar kind.
// Comments run from '#' to end of line.
struct TomlValue {
  enum class Kind { boolean, integer, real, string, array };
  Kind kind = Kind::integer;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<TomlValue> items;

  static TomlValue boolean(bool v);
  static TomlValue integer(std::int64_t v);
  static TomlValue real(double v);
  static TomlValue string(std::string v);
  static TomlValue array(std::vector<TomlValue> v);
  bool operator==(const TomlValue& o) const;
};

struct TomlTable {
  std::vector<std::pair<std::string, TomlValue>> entries;
  const TomlValue* find(const std::string& key) const;
};

struct TomlDoc {
  std::vector<std::pair<std::string, TomlTable>> tables;
  const TomlTable* find(const std::string& name) const;
};

TomlDoc parse_toml(const std::string& text);
std::string serialize_toml(const TomlDoc& doc);

// Declarative experiment description; engines materialize the runtime
// objects on demand. Equality is field-wise, which makes the round-trip
// invariant parse(serialize(c)) == c checkable.
struct DriftConfig {
  std::string name = "zero";  // catalog name, or "expression"
  std::map<std::string, double> params;
  std::vector<std::string> exprs;
  std::optional<double> bound;
  std::optional<double> lipschitz_u;
  bool operator==(const DriftConfig&) const = default;
};

struct InitialConfig {
  std::string kind = "point_mass";  // point_mass | gaussian | uniform | grid
  std::vector<double> mean;
  double variance = 1.0;
  std::vector<double> a, b;  // uniform box corners
  std::string file;          // grid kind: density file path
  std::optional<double> q;   // declared L^q exponent
  bool operator==(const InitialConfig&) const = default;
};

struct GridConfig {
  int dim = 1;
  std::vector<double> lower, upper;
  std::vector<std::uint64_t> cells;
  bool operator==(const GridConfig&) const = default;
};

struct TimeConfig {
  double horizon = 1.0;
  std::vector<std::uint64_t> steps;  // one entry = single run, more = N sweep
  bool operator==(const TimeConfig&) const = default;
};

struct ParticleConfig {
  std::uint64_t count = 0;
  std::uint64_t seed = 1;
  std::string mode = "kde";  // kde | coupled
  std::optional<double> bandwidth;
  bool operator==(const ParticleConfig&) const = default;
};

struct FpeSettings {
  std::optional<double> dx;  // reference spacing; absent = the main grid's
  double cfl = 0.45;
  std::uint64_t snapshot_every = 1;
  bool operator==(const FpeSettings&) const = default;
};

struct DiagnosticsConfig {
  std::vector<std::string> run;
  double lambda = 4.0;
  double beta = 0.5;
  std::array<double, 2> t_window{0.0, 0.0};  // {0,0} = default [T/4, T]
  std::array<double, 2> x_window{0.0, 0.0};  // {0,0} = default grid core
  double q = 2.0;
  double c_fit = 1.0;
  bool operator==(const DiagnosticsConfig&) const = default;
};

struct ToleranceConfig {
  double exactness = 1e-6;
  double l1_terminal = 1e-2;
  double stability = 1.5;
  double compare_l1 = 1e-2;
  double compare_sup = 1e-3;
  double weak_residual = 5e-3;
  bool operator==(const ToleranceConfig&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string out_dir = "runs/experiment";
  std::vector<std::string> engines{"density"};
  DriftConfig drift;
  InitialConfig initial;
  GridConfig grid;
  TimeConfig time;
  ParticleConfig particles;
  FpeSettings fpe;
  std::vector<double> snapshot_times;
  DiagnosticsConfig diagnostics;
  ToleranceConfig tolerances;
  bool operator==(const ExperimentConfig&) const = default;

  DriftSpec make_drift() const;
  GridSpec make_grid() const;
  GridSpec make_fpe_grid() const;
  TimeGrid make_time(std::uint64_t n) const;
  // base_dir resolves a relative initial.file
  InitialDistribution make_initial(const std::string& base_dir) const;
  std::array<double, 2> hoelder_t_window() const;
  std::array<double, 2> hoelder_x_window() const;
};

// Parse and validate; all field-level problems are reported in one
// config_error, prefixed "[section].key".
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);
void validate_config(const ExperimentConfig& config);

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t config_hash(const ExperimentConfig& config);

inline constexpr const char* kToolVersion = "ddsde 0.1.0";

}  // namespace ddsde
