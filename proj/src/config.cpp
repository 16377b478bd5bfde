#include "ddsde/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "ddsde/errors.hpp"

namespace ddsde {

TomlValue TomlValue::boolean(bool v) {
  TomlValue out;
  out.kind = Kind::boolean;
  out.b = v;
  return out;
}

TomlValue TomlValue::integer(std::int64_t v) {
  TomlValue out;
  out.kind = Kind::integer;
  out.i = v;
  return out;
}

TomlValue TomlValue::real(double v) {
  TomlValue out;
  out.kind = Kind::real;
  out.d = v;
  return out;
}

TomlValue TomlValue::string(std::string v) {
  TomlValue out;
  out.kind = Kind::string;
  out.s = std::move(v);
  return out;
}

TomlValue TomlValue::array(std::vector<TomlValue> v) {
  TomlValue out;
  out.kind = Kind::array;
  out.items = std::move(v);
  return out;
}

bool TomlValue::operator==(const TomlValue& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::boolean:
      return b == o.b;
    case Kind::integer:
      return i == o.i;
    case Kind::real:
      return d == o.d;
    case Kind::string:
      return s == o.s;
    case Kind::array:
      return items == o.items;
  }
  return false;
}

const TomlValue* TomlTable::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

const TomlTable* TomlDoc::find(const std::string& name) const {
  for (const auto& [n, t] : tables)
    if (n == name) return &t;
  return nullptr;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  fail(errc::config_error,
       "config parse: line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line, std::size_t lineno) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (in_string) {
      if (ch == '\\') {
        ++i;
        continue;
      }
      if (ch == '"') in_string = false;
    } else if (ch == '"') {
      in_string = true;
    } else if (ch == '#') {
      return line.substr(0, i);
    }
  }
  if (in_string) parse_fail(lineno, "unterminated string");
  return line;
}

bool valid_key(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_')
      return false;
  return true;
}

bool valid_table_name(const std::string& s) {
  if (s.empty() || s.front() == '.' || s.back() == '.') return false;
  for (char ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '.')
      return false;
  return true;
}

bool integer_literal(const std::string& s) {
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

// decimal with optional fraction and exponent; strtod's hex and inf/nan
// spellings stay out of the config language
bool real_literal(const std::string& s) {
  std::size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  std::size_t digits = 0;
  for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i)
    ++digits;
  if (i < s.size() && s[i] == '.')
    for (++i; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]));
         ++i)
      ++digits;
  if (digits == 0) return false;
  if (i == s.size()) return true;
  if (s[i] != 'e' && s[i] != 'E') return false;
  ++i;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

TomlValue parse_scalar(const std::string& raw, std::size_t lineno) {
  std::string tok = trim(raw);
  if (tok.empty()) parse_fail(lineno, "empty value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"')
      parse_fail(lineno, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
      char ch = tok[i];
      if (ch == '\\') {
        if (i + 2 >= tok.size()) parse_fail(lineno, "dangling escape");
        char e = tok[++i];
        if (e == '"' || e == '\\')
          out.push_back(e);
        else if (e == 'n')
          out.push_back('\n');
        else if (e == 't')
          out.push_back('\t');
        else
          parse_fail(lineno, std::string("unknown escape '\\") + e + "'");
      } else if (ch == '"') {
        parse_fail(lineno, "stray quote inside string");
      } else {
        out.push_back(ch);
      }
    }
    return TomlValue::string(std::move(out));
  }
  if (tok == "true") return TomlValue::boolean(true);
  if (tok == "false") return TomlValue::boolean(false);
  if (integer_literal(tok)) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(tok.c_str(), &end, 10);
    if (errno == ERANGE || end != tok.c_str() + tok.size())
      parse_fail(lineno, "integer '" + tok + "' out of range");
    return TomlValue::integer(v);
  }
  char* end = nullptr;
  double d = std::strtod(tok.c_str(), &end);
  if (!real_literal(tok) || end != tok.c_str() + tok.size() ||
      !std::isfinite(d))
    parse_fail(lineno, "cannot parse value '" + tok + "'");
  return TomlValue::real(d);
}

TomlValue parse_value(const std::string& raw, std::size_t lineno) {
  std::string tok = trim(raw);
  if (tok.empty()) parse_fail(lineno, "empty value");
  if (tok.front() != '[') return parse_scalar(tok, lineno);
  if (tok.back() != ']') parse_fail(lineno, "array must close on the same line");
  std::string inner = trim(tok.substr(1, tok.size() - 2));
  std::vector<TomlValue> items;
  if (!inner.empty()) {
    bool in_string = false;
    std::string cur;
    for (std::size_t i = 0; i < inner.size(); ++i) {
      char ch = inner[i];
      if (in_string) {
        cur.push_back(ch);
        if (ch == '\\' && i + 1 < inner.size()) cur.push_back(inner[++i]);
        else if (ch == '"')
          in_string = false;
      } else if (ch == '"') {
        cur.push_back(ch);
        in_string = true;
      } else if (ch == '[') {
        parse_fail(lineno, "nested arrays are not supported");
      } else if (ch == ',') {
        items.push_back(parse_scalar(cur, lineno));
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    items.push_back(parse_scalar(cur, lineno));
  }
  return TomlValue::array(std::move(items));
}

std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (s.find_first_of(".eE") == std::string::npos &&
      s.find_first_of("0123456789") != std::string::npos)
    s += ".0";
  return s;
}

std::string serialize_value(const TomlValue& v) {
  switch (v.kind) {
    case TomlValue::Kind::boolean:
      return v.b ? "true" : "false";
    case TomlValue::Kind::integer:
      return std::to_string(v.i);
    case TomlValue::Kind::real:
      return fmt_double(v.d);
    case TomlValue::Kind::string: {
      std::string out = "\"";
      for (char ch : v.s) {
        if (ch == '"' || ch == '\\') out.push_back('\\');
        if (ch == '\n') {
          out += "\\n";
          continue;
        }
        out.push_back(ch);
      }
      return out + "\"";
    }
    case TomlValue::Kind::array: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        out += serialize_value(v.items[i]);
      }
      return out + "]";
    }
  }
  return {};
}

}  // namespace

TomlDoc parse_toml(const std::string& text) {
  TomlDoc doc;
  TomlTable* current = nullptr;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw, lineno));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(lineno, "unclosed table header");
      std::string name = trim(line.substr(1, line.size() - 2));
      if (!valid_table_name(name))
        parse_fail(lineno, "bad table name '" + name + "'");
      if (doc.find(name)) parse_fail(lineno, "duplicate table [" + name + "]");
      doc.tables.emplace_back(name, TomlTable{});
      current = &doc.tables.back().second;
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      parse_fail(lineno, "expected 'key = value' or '[table]'");
    std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) parse_fail(lineno, "bad key '" + key + "'");
    if (!current) parse_fail(lineno, "key '" + key + "' outside any table");
    if (current->find(key)) parse_fail(lineno, "duplicate key '" + key + "'");
    current->entries.emplace_back(key, parse_value(line.substr(eq + 1), lineno));
  }
  return doc;
}

std::string serialize_toml(const TomlDoc& doc) {
  std::string out;
  for (std::size_t t = 0; t < doc.tables.size(); ++t) {
    if (t) out += "\n";
    out += "[" + doc.tables[t].first + "]\n";
    for (const auto& [k, v] : doc.tables[t].second.entries)
      out += k + " = " + serialize_value(v) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- mapping

namespace {

struct Collect {
  std::vector<std::string> errors;
  void add(std::string msg) { errors.push_back(std::move(msg)); }
  void check_done(const std::string& context) {
    if (errors.empty()) return;
    std::string msg = context + ":";
    for (const std::string& e : errors) msg += "\n  - " + e;
    fail(errc::config_error, msg);
  }
};

class Sect {
 public:
  Sect(const TomlDoc& doc, std::string name, Collect& c)
      : name_(std::move(name)), c_(&c), table_(doc.find(name_)) {}

  bool present() const { return table_ != nullptr; }
  bool has(const std::string& key) const {
    return table_ && table_->find(key);
  }

  std::optional<std::string> str(const std::string& key) {
    const TomlValue* v = take(key);
    if (!v) return {};
    if (v->kind != TomlValue::Kind::string) {
      bad(key, "expected a string");
      return {};
    }
    return v->s;
  }

  std::optional<double> real(const std::string& key) {
    const TomlValue* v = take(key);
    if (!v) return {};
    if (v->kind == TomlValue::Kind::real) return v->d;
    if (v->kind == TomlValue::Kind::integer)
      return static_cast<double>(v->i);
    bad(key, "expected a number");
    return {};
  }

  std::optional<std::uint64_t> uinteger(const std::string& key) {
    const TomlValue* v = take(key);
    if (!v) return {};
    if (v->kind != TomlValue::Kind::integer || v->i < 0) {
      bad(key, "expected a nonnegative integer");
      return {};
    }
    return static_cast<std::uint64_t>(v->i);
  }

  std::optional<std::vector<double>> reals(const std::string& key) {
    const TomlValue* v = take(key);
    if (!v) return {};
    if (v->kind != TomlValue::Kind::array) {
      bad(key, "expected an array of numbers");
      return {};
    }
    std::vector<double> out;
    for (const TomlValue& it : v->items) {
      if (it.kind == TomlValue::Kind::real)
        out.push_back(it.d);
      else if (it.kind == TomlValue::Kind::integer)
        out.push_back(static_cast<double>(it.i));
      else {
        bad(key, "expected an array of numbers");
        return {};
      }
    }
    return out;
  }

  std::optional<std::vector<std::uint64_t>> uints(const std::string& key) {
    const TomlValue* v = take(key);
    if (!v) return {};
    std::vector<const TomlValue*> items;
    if (v->kind == TomlValue::Kind::integer)
      items.push_back(v);
    else if (v->kind == TomlValue::Kind::array)
      for (const TomlValue& it : v->items) items.push_back(&it);
    else {
      bad(key, "expected an integer or integer array");
      return {};
    }
    std::vector<std::uint64_t> out;
    for (const TomlValue* it : items) {
      if (it->kind != TomlValue::Kind::integer || it->i < 0) {
        bad(key, "expected nonnegative integers");
        return {};
      }
      out.push_back(static_cast<std::uint64_t>(it->i));
    }
    return out;
  }

  std::optional<std::vector<std::string>> strs(const std::string& key) {
    const TomlValue* v = take(key);
    if (!v) return {};
    if (v->kind != TomlValue::Kind::array) {
      bad(key, "expected an array of strings");
      return {};
    }
    std::vector<std::string> out;
    for (const TomlValue& it : v->items) {
      if (it.kind != TomlValue::Kind::string) {
        bad(key, "expected an array of strings");
        return {};
      }
      out.push_back(it.s);
    }
    return out;
  }

  void reject(const std::string& key, const std::string& why) {
    if (has(key)) bad(key, why);
    take(key);
  }

  void finish() {
    if (!table_) return;
    for (const auto& [k, v] : table_->entries)
      if (!used_.count(k)) bad(k, "unknown key");
  }

 private:
  const TomlValue* take(const std::string& key) {
    used_.insert(key);
    return table_ ? table_->find(key) : nullptr;
  }
  void bad(const std::string& key, const std::string& why) {
    c_->add("[" + name_ + "]." + key + ": " + why);
  }
  std::string name_;
  Collect* c_;
  const TomlTable* table_;
  std::set<std::string> used_;
};

const std::set<std::string>& known_tables() {
  static const std::set<std::string> k{
      "experiment", "drift",     "drift.params", "initial",
      "grid",       "time",      "particles",    "fpe",
      "snapshots",  "diagnostics", "tolerances"};
  return k;
}

const std::vector<std::string>& known_diagnostics() {
  static const std::vector<std::string> k{
      "exactness",    "domination", "hoelder_space", "hoelder_time",
      "l1_convergence", "smoothing", "weak_form"};
  return k;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

bool power_of_two(std::uint64_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  TomlDoc doc = parse_toml(text);
  Collect c;
  ExperimentConfig cfg;

  for (const auto& [name, table] : doc.tables)
    if (!known_tables().count(name)) c.add("[" + name + "]: unknown table");

  {
    Sect s(doc, "experiment", c);
    if (auto v = s.str("name")) cfg.name = *v;
    if (auto v = s.str("out_dir")) cfg.out_dir = *v;
    if (auto v = s.strs("engines")) cfg.engines = *v;
    s.finish();
  }
  if (cfg.engines == std::vector<std::string>{"all"})
    cfg.engines = {"density", "particles", "fpe"};

  {
    Sect s(doc, "drift", c);
    if (auto v = s.str("name")) cfg.drift.name = *v;
    if (auto v = s.strs("expr")) cfg.drift.exprs = *v;
    if (auto v = s.real("bound")) cfg.drift.bound = *v;
    if (auto v = s.real("lipschitz_u")) cfg.drift.lipschitz_u = *v;
    s.finish();
  }
  if (const TomlTable* params = doc.find("drift.params")) {
    Sect s(doc, "drift.params", c);
    for (const auto& [k, v] : params->entries)
      if (auto d = s.real(k)) cfg.drift.params[k] = *d;
    s.finish();
  }

  {
    Sect s(doc, "initial", c);
    std::string kind = s.str("kind").value_or("point_mass");
    cfg.initial.kind = kind;
    auto only = [&](const std::string& key, const std::string& kinds,
                    bool applies) {
      if (!applies) s.reject(key, "only applies to kind " + kinds);
    };
    only("mean", "point_mass/gaussian",
         kind == "point_mass" || kind == "gaussian");
    only("variance", "gaussian", kind == "gaussian");
    only("a", "uniform", kind == "uniform");
    only("b", "uniform", kind == "uniform");
    only("file", "grid", kind == "grid");
    only("q", "grid", kind == "grid");
    if (auto v = s.reals("mean")) cfg.initial.mean = *v;
    if (auto v = s.real("variance")) cfg.initial.variance = *v;
    if (auto v = s.reals("a")) cfg.initial.a = *v;
    if (auto v = s.reals("b")) cfg.initial.b = *v;
    if (auto v = s.str("file")) cfg.initial.file = *v;
    if (auto v = s.real("q")) cfg.initial.q = *v;
    s.finish();
  }

  {
    Sect s(doc, "grid", c);
    if (auto v = s.uinteger("dim")) cfg.grid.dim = static_cast<int>(*v);
    if (auto v = s.reals("lower")) cfg.grid.lower = *v;
    if (auto v = s.reals("upper")) cfg.grid.upper = *v;
    if (auto v = s.uints("cells")) cfg.grid.cells = *v;
    s.finish();
  }

  {
    Sect s(doc, "time", c);
    if (auto v = s.real("horizon")) cfg.time.horizon = *v;
    if (auto v = s.uints("steps")) cfg.time.steps = *v;
    s.finish();
  }

  {
    Sect s(doc, "particles", c);
    if (auto v = s.uinteger("count")) cfg.particles.count = *v;
    if (auto v = s.uinteger("seed")) cfg.particles.seed = *v;
    if (auto v = s.str("mode")) cfg.particles.mode = *v;
    if (auto v = s.real("bandwidth")) cfg.particles.bandwidth = *v;
    s.finish();
  }

  {
    Sect s(doc, "fpe", c);
    if (auto v = s.real("dx")) cfg.fpe.dx = *v;
    if (auto v = s.real("cfl")) cfg.fpe.cfl = *v;
    if (auto v = s.uinteger("snapshot_every")) cfg.fpe.snapshot_every = *v;
    s.finish();
  }

  {
    Sect s(doc, "snapshots", c);
    if (auto v = s.reals("times")) cfg.snapshot_times = *v;
    s.finish();
  }
  if (cfg.snapshot_times.empty())
    cfg.snapshot_times = {cfg.time.horizon};

  {
    Sect s(doc, "diagnostics", c);
    if (auto v = s.strs("run")) cfg.diagnostics.run = *v;
    if (auto v = s.real("lambda")) cfg.diagnostics.lambda = *v;
    if (auto v = s.real("beta")) cfg.diagnostics.beta = *v;
    if (auto v = s.reals("t_window")) {
      if (v->size() == 2)
        cfg.diagnostics.t_window = {(*v)[0], (*v)[1]};
      else
        c.add("[diagnostics].t_window: expected two numbers");
    }
    if (auto v = s.reals("x_window")) {
      if (v->size() == 2)
        cfg.diagnostics.x_window = {(*v)[0], (*v)[1]};
      else
        c.add("[diagnostics].x_window: expected two numbers");
    }
    if (auto v = s.real("q")) cfg.diagnostics.q = *v;
    if (auto v = s.real("c_fit")) cfg.diagnostics.c_fit = *v;
    s.finish();
  }

  {
    Sect s(doc, "tolerances", c);
    if (auto v = s.real("exactness")) cfg.tolerances.exactness = *v;
    if (auto v = s.real("l1_terminal")) cfg.tolerances.l1_terminal = *v;
    if (auto v = s.real("stability")) cfg.tolerances.stability = *v;
    if (auto v = s.real("compare_l1")) cfg.tolerances.compare_l1 = *v;
    if (auto v = s.real("compare_sup")) cfg.tolerances.compare_sup = *v;
    if (auto v = s.real("weak_residual")) cfg.tolerances.weak_residual = *v;
    s.finish();
  }

  c.check_done("config rejected");
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
  Collect c;
  const double T = cfg.time.horizon;

  if (cfg.name.empty()) c.add("[experiment].name: must not be empty");
  for (char ch : cfg.name)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' &&
        ch != '-' && ch != '.') {
      c.add("[experiment].name: only letters, digits, '_', '-', '.' allowed");
      break;
    }
  if (cfg.out_dir.empty()) c.add("[experiment].out_dir: must not be empty");

  std::set<std::string> engines;
  if (cfg.engines.empty())
    c.add("[experiment].engines: need at least one of density, particles, fpe");
  for (const std::string& e : cfg.engines) {
    if (e != "density" && e != "particles" && e != "fpe")
      c.add("[experiment].engines: unknown engine '" + e +
            "' (density, particles, fpe, or all)");
    else if (!engines.insert(e).second)
      c.add("[experiment].engines: engine '" + e + "' listed twice");
  }

  // ---- grid
  if (cfg.grid.dim < 1 || cfg.grid.dim > 2)
    c.add("[grid].dim: engines run in dimension 1 or 2, got " +
          std::to_string(cfg.grid.dim));
  std::size_t d = static_cast<std::size_t>(std::max(cfg.grid.dim, 1));
  if (cfg.grid.lower.size() != d)
    c.add("[grid].lower: expected " + std::to_string(d) + " entries");
  if (cfg.grid.upper.size() != d)
    c.add("[grid].upper: expected " + std::to_string(d) + " entries");
  if (cfg.grid.cells.size() != d)
    c.add("[grid].cells: expected " + std::to_string(d) + " entries");
  bool grid_ok = cfg.grid.lower.size() == d && cfg.grid.upper.size() == d &&
                 cfg.grid.cells.size() == d;
  if (grid_ok)
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(cfg.grid.lower[i]) ||
          !std::isfinite(cfg.grid.upper[i]) ||
          cfg.grid.lower[i] >= cfg.grid.upper[i]) {
        c.add("[grid]: axis " + std::to_string(i) + " needs lower < upper");
        grid_ok = false;
      }
      if (cfg.grid.cells[i] < 8 || !power_of_two(cfg.grid.cells[i])) {
        c.add("[grid].cells: axis " + std::to_string(i) +
              " needs a power of two >= 8 (nested restriction), got " +
              std::to_string(cfg.grid.cells[i]));
        grid_ok = false;
      }
    }

  // ---- drift
  DriftSpec drift;
  bool drift_ok = false;
  std::vector<std::string> names = catalog_names();
  bool in_catalog =
      std::find(names.begin(), names.end(), cfg.drift.name) != names.end();
  if (cfg.drift.name == "expression") {
    if (cfg.drift.exprs.empty())
      c.add("[drift].expr: expression drift needs at least one component");
    if (!cfg.drift.bound)
      c.add("[drift].bound: expression drift must declare its sup bound");
    else if (!(*cfg.drift.bound > 0.0) || !std::isfinite(*cfg.drift.bound))
      c.add("[drift].bound: must be a positive finite number");
    if (cfg.drift.lipschitz_u &&
        (!(*cfg.drift.lipschitz_u >= 0.0) ||
         !std::isfinite(*cfg.drift.lipschitz_u)))
      c.add("[drift].lipschitz_u: must be a nonnegative finite number");
    if (!cfg.drift.params.empty())
      c.add("[drift.params]: expression drifts take no catalog parameters");
    if (c.errors.empty()) {
      try {
        drift = cfg.make_drift();
        drift_ok = true;
      } catch (const Error& e) {
        c.add(std::string("[drift].expr: ") + e.what());
      }
    }
  } else if (!in_catalog) {
    c.add("[drift].name: unknown drift '" + cfg.drift.name +
          "'; catalog: " + join(names) + ", or expression");
  } else {
    if (!cfg.drift.exprs.empty())
      c.add("[drift].expr: only applies to name = \"expression\"");
    if (cfg.drift.bound)
      c.add("[drift].bound: only applies to name = \"expression\"");
    if (cfg.drift.lipschitz_u)
      c.add("[drift].lipschitz_u: only applies to name = \"expression\"");
    try {
      drift = cfg.make_drift();
      drift_ok = true;
    } catch (const Error& e) {
      c.add(std::string("[drift.params]: ") + e.what());
    }
  }

  // ---- initial
  const std::string& ik = cfg.initial.kind;
  if (ik == "point_mass" || ik == "gaussian") {
    if (cfg.initial.mean.size() != d)
      c.add("[initial].mean: expected " + std::to_string(d) + " entries");
    if (ik == "gaussian" &&
        (!(cfg.initial.variance > 0.0) || !std::isfinite(cfg.initial.variance)))
      c.add("[initial].variance: must be positive");
  } else if (ik == "uniform") {
    if (cfg.initial.a.size() != d || cfg.initial.b.size() != d)
      c.add("[initial]: uniform needs 'a' and 'b' with " + std::to_string(d) +
            " entries");
    else
      for (std::size_t i = 0; i < d; ++i)
        if (!(cfg.initial.a[i] < cfg.initial.b[i]))
          c.add("[initial]: axis " + std::to_string(i) + " needs a < b");
  } else if (ik == "grid") {
    if (cfg.initial.file.empty())
      c.add("[initial].file: grid initial data needs a density file");
    if (cfg.initial.q && !(*cfg.initial.q > 1.0))
      c.add("[initial].q: must exceed 1");
  } else {
    c.add("[initial].kind: unknown kind '" + ik +
          "' (point_mass, gaussian, uniform, grid)");
  }

  // ---- time
  if (!(T > 0.0) || !std::isfinite(T))
    c.add("[time].horizon: must be positive and finite");
  if (cfg.time.steps.empty())
    c.add("[time].steps: need at least one step count");
  for (std::size_t i = 0; i < cfg.time.steps.size(); ++i) {
    if (cfg.time.steps[i] < 1)
      c.add("[time].steps: step counts must be >= 1");
    if (i > 0 && cfg.time.steps[i] <= cfg.time.steps[i - 1])
      c.add("[time].steps: sweep must be strictly increasing");
  }

  // ---- particles
  bool want_particles = engines.count("particles") > 0;
  if (want_particles && cfg.particles.count < 2)
    c.add("[particles].count: particle engine needs at least 2 particles");
  if (cfg.particles.mode != "kde" && cfg.particles.mode != "coupled")
    c.add("[particles].mode: expected 'kde' or 'coupled', got '" +
          cfg.particles.mode + "'");
  if (want_particles && cfg.particles.mode == "coupled" &&
      !engines.count("density"))
    c.add("[particles].mode: coupled feedback needs the density engine too");
  if (cfg.particles.bandwidth &&
      (!(*cfg.particles.bandwidth > 0.0) ||
       !std::isfinite(*cfg.particles.bandwidth)))
    c.add("[particles].bandwidth: must be positive");

  // ---- fpe
  if (!(cfg.fpe.cfl > 0.0) || cfg.fpe.cfl > 1.0)
    c.add("[fpe].cfl: must lie in (0, 1]");
  if (cfg.fpe.snapshot_every < 1)
    c.add("[fpe].snapshot_every: must be >= 1");
  if (cfg.fpe.dx && grid_ok) {
    if (!(*cfg.fpe.dx > 0.0) || !std::isfinite(*cfg.fpe.dx))
      c.add("[fpe].dx: must be positive");
    else
      for (std::size_t i = 0; i < d; ++i) {
        double width = cfg.grid.upper[i] - cfg.grid.lower[i];
        double n = width / *cfg.fpe.dx;
        std::uint64_t ni = static_cast<std::uint64_t>(std::llround(n));
        if (std::abs(n - static_cast<double>(ni)) > 1e-9 * n ||
            !power_of_two(ni))
          c.add("[fpe].dx: axis " + std::to_string(i) +
                " width / dx must be a power of two, got " + fmt_double(n));
      }
  }

  // ---- snapshots
  if (cfg.snapshot_times.empty())
    c.add("[snapshots].times: need at least one snapshot");
  bool snaps_ok = !cfg.snapshot_times.empty();
  for (std::size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
    double t = cfg.snapshot_times[i];
    if (!std::isfinite(t) || t <= 0.0 || t > T + 1e-12) {
      c.add("[snapshots].times: " + fmt_double(t) +
            " must lie in (0, horizon]");
      snaps_ok = false;
    }
    if (i > 0 && t <= cfg.snapshot_times[i - 1]) {
      c.add("[snapshots].times: must be strictly increasing");
      snaps_ok = false;
    }
  }
  if (snaps_ok && std::abs(cfg.snapshot_times.back() - T) > 1e-12 * T)
    c.add("[snapshots].times: the last snapshot must sit at the horizon");
  if (snaps_ok)
    for (std::uint64_t n : cfg.time.steps)
      for (double t : cfg.snapshot_times) {
        double k = t * static_cast<double>(n) / T;
        if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
          c.add("[snapshots].times: " + fmt_double(t) +
                " is off the step lattice for N = " + std::to_string(n));
          break;
        }
      }

  // ---- diagnostics
  std::set<std::string> diag;
  for (const std::string& name : cfg.diagnostics.run) {
    if (std::find(known_diagnostics().begin(), known_diagnostics().end(),
                  name) == known_diagnostics().end())
      c.add("[diagnostics].run: unknown diagnostic '" + name +
            "'; known: " + join(known_diagnostics()));
    else if (!diag.insert(name).second)
      c.add("[diagnostics].run: '" + name + "' listed twice");
  }
  auto needs_density = [&](const std::string& name) {
    if (diag.count(name) && !engines.count("density"))
      c.add("[diagnostics].run: '" + name + "' needs the density engine");
  };
  for (const char* name : {"exactness", "domination", "hoelder_space",
                           "hoelder_time", "l1_convergence", "smoothing",
                           "weak_form"})
    needs_density(name);
  if (diag.count("exactness") && cfg.drift.name != "zero")
    c.add("[diagnostics].run: exactness certifies the drift-free law; drift "
          "must be 'zero'");
  if (diag.count("l1_convergence")) {
    if (!engines.count("fpe"))
      c.add("[diagnostics].run: l1_convergence needs the fpe engine as "
            "reference");
    if (cfg.time.steps.size() < 4)
      c.add("[diagnostics].run: l1_convergence needs a sweep of at least 4 "
            "step counts");
    if (drift_ok && !drift.lipschitz_u.has_value())
      c.add("[diagnostics].run: l1_convergence covers drifts with a declared "
            "Lipschitz-in-u constant only");
  }
  if (diag.count("smoothing")) {
    if (ik == "point_mass")
      c.add("[diagnostics].run: smoothing needs density initial data, not a "
            "point mass");
    if (!(cfg.diagnostics.q > cfg.grid.dim))
      c.add("[diagnostics].q: must exceed the dimension");
    if (!(cfg.diagnostics.c_fit > 0.0))
      c.add("[diagnostics].c_fit: must be positive");
    if (snaps_ok) {
      std::size_t inside = 0;
      for (double t : cfg.snapshot_times)
        if (t >= T / 8.0 - 1e-12) ++inside;
      if (inside == 0)
        c.add("[snapshots].times: smoothing checks the window [T/8, T]; no "
              "snapshot falls inside");
    }
  }
  if (!(cfg.diagnostics.lambda >= 1.0) ||
      !std::isfinite(cfg.diagnostics.lambda))
    c.add("[diagnostics].lambda: must be >= 1");
  if (!(cfg.diagnostics.beta > 0.0 && cfg.diagnostics.beta < 1.0))
    c.add("[diagnostics].beta: must lie in (0, 1)");
  bool want_hoelder =
      diag.count("hoelder_space") || diag.count("hoelder_time");
  if (want_hoelder && cfg.grid.dim != 1)
    c.add("[diagnostics].run: hoelder fits are one-dimensional");
  if (want_hoelder && grid_ok && snaps_ok && T > 0.0) {
    std::array<double, 2> tw = cfg.hoelder_t_window();
    std::array<double, 2> xw = cfg.hoelder_x_window();
    if (!(tw[0] > 0.0 && tw[0] < tw[1] && tw[1] <= T + 1e-12))
      c.add("[diagnostics].t_window: needs 0 < lo < hi <= horizon");
    if (!(xw[0] < xw[1] && xw[0] >= cfg.grid.lower[0] &&
          xw[1] <= cfg.grid.upper[0]))
      c.add("[diagnostics].x_window: leaves the grid");
    std::size_t inside = 0;
    for (double t : cfg.snapshot_times)
      if (t >= tw[0] - 1e-12 && t <= tw[1] + 1e-12) ++inside;
    std::size_t need = diag.count("hoelder_time") ? 2 : 1;
    if (inside < need)
      c.add("[snapshots].times: hoelder window [" + fmt_double(tw[0]) + ", " +
            fmt_double(tw[1]) + "] holds " + std::to_string(inside) +
            " snapshots; need " + std::to_string(need));
  }
  if (diag.count("weak_form") && cfg.snapshot_times.size() < 2)
    c.add("[diagnostics].run: weak_form integrates over snapshots; need at "
          "least 2");

  // ---- tolerances
  auto pos_tol = [&](double v, const std::string& key) {
    if (!(v > 0.0) || !std::isfinite(v))
      c.add("[tolerances]." + key + ": must be positive");
  };
  pos_tol(cfg.tolerances.exactness, "exactness");
  pos_tol(cfg.tolerances.l1_terminal, "l1_terminal");
  pos_tol(cfg.tolerances.compare_l1, "compare_l1");
  pos_tol(cfg.tolerances.compare_sup, "compare_sup");
  pos_tol(cfg.tolerances.weak_residual, "weak_residual");
  if (!(cfg.tolerances.stability >= 1.0) ||
      !std::isfinite(cfg.tolerances.stability))
    c.add("[tolerances].stability: must be >= 1");

  c.check_done("config rejected");
}

// ---------------------------------------------------------------- serialize

std::string serialize_config(const ExperimentConfig& cfg) {
  TomlDoc doc;
  auto table = [&](const std::string& name) -> TomlTable& {
    doc.tables.emplace_back(name, TomlTable{});
    return doc.tables.back().second;
  };
  auto reals = [](std::span<const double> v) {
    std::vector<TomlValue> items;
    for (double x : v) items.push_back(TomlValue::real(x));
    return TomlValue::array(std::move(items));
  };
  auto uints = [](std::span<const std::uint64_t> v) {
    std::vector<TomlValue> items;
    for (std::uint64_t x : v)
      items.push_back(TomlValue::integer(static_cast<std::int64_t>(x)));
    return TomlValue::array(std::move(items));
  };
  auto strings = [](std::span<const std::string> v) {
    std::vector<TomlValue> items;
    for (const std::string& x : v) items.push_back(TomlValue::string(x));
    return TomlValue::array(std::move(items));
  };

  TomlTable& exp = table("experiment");
  exp.entries.emplace_back("name", TomlValue::string(cfg.name));
  exp.entries.emplace_back("out_dir", TomlValue::string(cfg.out_dir));
  exp.entries.emplace_back("engines", strings(cfg.engines));

  TomlTable& drift = table("drift");
  drift.entries.emplace_back("name", TomlValue::string(cfg.drift.name));
  if (!cfg.drift.exprs.empty())
    drift.entries.emplace_back("expr", strings(cfg.drift.exprs));
  if (cfg.drift.bound)
    drift.entries.emplace_back("bound", TomlValue::real(*cfg.drift.bound));
  if (cfg.drift.lipschitz_u)
    drift.entries.emplace_back("lipschitz_u",
                               TomlValue::real(*cfg.drift.lipschitz_u));
  if (!cfg.drift.params.empty()) {
    TomlTable& params = table("drift.params");
    for (const auto& [k, v] : cfg.drift.params)
      params.entries.emplace_back(k, TomlValue::real(v));
  }

  TomlTable& init = table("initial");
  init.entries.emplace_back("kind", TomlValue::string(cfg.initial.kind));
  if (cfg.initial.kind == "point_mass" || cfg.initial.kind == "gaussian")
    init.entries.emplace_back("mean", reals(cfg.initial.mean));
  if (cfg.initial.kind == "gaussian")
    init.entries.emplace_back("variance", TomlValue::real(cfg.initial.variance));
  if (cfg.initial.kind == "uniform") {
    init.entries.emplace_back("a", reals(cfg.initial.a));
    init.entries.emplace_back("b", reals(cfg.initial.b));
  }
  if (cfg.initial.kind == "grid") {
    init.entries.emplace_back("file", TomlValue::string(cfg.initial.file));
    if (cfg.initial.q)
      init.entries.emplace_back("q", TomlValue::real(*cfg.initial.q));
  }

  TomlTable& grid = table("grid");
  grid.entries.emplace_back("dim", TomlValue::integer(cfg.grid.dim));
  grid.entries.emplace_back("lower", reals(cfg.grid.lower));
  grid.entries.emplace_back("upper", reals(cfg.grid.upper));
  grid.entries.emplace_back("cells", uints(cfg.grid.cells));

  TomlTable& time = table("time");
  time.entries.emplace_back("horizon", TomlValue::real(cfg.time.horizon));
  time.entries.emplace_back("steps", uints(cfg.time.steps));

  TomlTable& particles = table("particles");
  particles.entries.emplace_back(
      "count", TomlValue::integer(static_cast<std::int64_t>(cfg.particles.count)));
  particles.entries.emplace_back(
      "seed", TomlValue::integer(static_cast<std::int64_t>(cfg.particles.seed)));
  particles.entries.emplace_back("mode", TomlValue::string(cfg.particles.mode));
  if (cfg.particles.bandwidth)
    particles.entries.emplace_back("bandwidth",
                                   TomlValue::real(*cfg.particles.bandwidth));

  TomlTable& fpe = table("fpe");
  if (cfg.fpe.dx) fpe.entries.emplace_back("dx", TomlValue::real(*cfg.fpe.dx));
  fpe.entries.emplace_back("cfl", TomlValue::real(cfg.fpe.cfl));
  fpe.entries.emplace_back(
      "snapshot_every",
      TomlValue::integer(static_cast<std::int64_t>(cfg.fpe.snapshot_every)));

  TomlTable& snaps = table("snapshots");
  snaps.entries.emplace_back("times", reals(cfg.snapshot_times));

  TomlTable& diag = table("diagnostics");
  diag.entries.emplace_back("run", strings(cfg.diagnostics.run));
  diag.entries.emplace_back("lambda", TomlValue::real(cfg.diagnostics.lambda));
  diag.entries.emplace_back("beta", TomlValue::real(cfg.diagnostics.beta));
  diag.entries.emplace_back("t_window", reals(cfg.diagnostics.t_window));
  diag.entries.emplace_back("x_window", reals(cfg.diagnostics.x_window));
  diag.entries.emplace_back("q", TomlValue::real(cfg.diagnostics.q));
  diag.entries.emplace_back("c_fit", TomlValue::real(cfg.diagnostics.c_fit));

  TomlTable& tol = table("tolerances");
  tol.entries.emplace_back("exactness", TomlValue::real(cfg.tolerances.exactness));
  tol.entries.emplace_back("l1_terminal",
                           TomlValue::real(cfg.tolerances.l1_terminal));
  tol.entries.emplace_back("stability", TomlValue::real(cfg.tolerances.stability));
  tol.entries.emplace_back("compare_l1",
                           TomlValue::real(cfg.tolerances.compare_l1));
  tol.entries.emplace_back("compare_sup",
                           TomlValue::real(cfg.tolerances.compare_sup));
  tol.entries.emplace_back("weak_residual",
                           TomlValue::real(cfg.tolerances.weak_residual));

  return serialize_toml(doc);
}

// ------------------------------------------------------------- materialize

DriftSpec ExperimentConfig::make_drift() const {
  if (drift.name == "expression")
    return drift_from_expressions(drift.exprs, grid.dim,
                                  drift.bound.value_or(1.0), drift.lipschitz_u);
  return catalog(drift.name, grid.dim, drift.params);
}

GridSpec ExperimentConfig::make_grid() const {
  if (grid.dim == 1)
    return GridSpec::make1d(grid.lower[0], grid.upper[0], grid.cells[0]);
  return GridSpec::make(grid.dim, grid.lower, grid.upper, grid.cells);
}

GridSpec ExperimentConfig::make_fpe_grid() const {
  if (!fpe.dx) return make_grid();
  std::vector<std::uint64_t> cells(grid.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    cells[i] = static_cast<std::uint64_t>(
        std::llround((grid.upper[i] - grid.lower[i]) / *fpe.dx));
  if (grid.dim == 1)
    return GridSpec::make1d(grid.lower[0], grid.upper[0], cells[0]);
  return GridSpec::make(grid.dim, grid.lower, grid.upper, cells);
}

TimeGrid ExperimentConfig::make_time(std::uint64_t n) const {
  return TimeGrid::make(time.horizon, n);
}

InitialDistribution ExperimentConfig::make_initial(
    const std::string& base_dir) const {
  if (initial.kind == "point_mass")
    return InitialDistribution::point_mass(initial.mean);
  if (initial.kind == "gaussian")
    return InitialDistribution::gaussian(initial.mean, initial.variance);
  if (initial.kind == "uniform")
    return InitialDistribution::uniform_box(grid.dim, initial.a, initial.b,
                                            make_grid());
  std::string path = initial.file;
  if (!path.empty() && path.front() != '/' && !base_dir.empty())
    path = base_dir + "/" + path;
  return InitialDistribution::from_grid(load_grid(path), initial.q);
}

std::array<double, 2> ExperimentConfig::hoelder_t_window() const {
  if (diagnostics.t_window[0] == 0.0 && diagnostics.t_window[1] == 0.0)
    return {time.horizon / 4.0, time.horizon};
  return diagnostics.t_window;
}

std::array<double, 2> ExperimentConfig::hoelder_x_window() const {
  if (diagnostics.x_window[0] == 0.0 && diagnostics.x_window[1] == 0.0) {
    double mid = (grid.lower[0] + grid.upper[0]) / 2.0;
    double quarter = (grid.upper[0] - grid.lower[0]) / 4.0;
    return {mid - quarter, mid + quarter};
  }
  return diagnostics.x_window;
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::string text = serialize_config(config);
  return fnv1a64(text.data(), text.size());
}

}  // namespace ddsde
