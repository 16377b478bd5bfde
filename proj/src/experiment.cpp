#include "ddsde/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ddsde/diagnostics.hpp"
#include "ddsde/errors.hpp"
#include "ddsde/euler_density.hpp"
#include "ddsde/fpe.hpp"
#include "ddsde/particles.hpp"
#include "ddsde/test_functions.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ddsde {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::uint64_t file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error,
          "cannot open artifact '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

std::string timestamp_utc() {
  std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// collects relative paths + checksums as files land in the run directory
struct ArtifactLog {
  fs::path base;
  json list = json::array();

  void add(const std::string& rel) {
    list.push_back({{"file", rel}, {"checksum", hex64(file_checksum(base / rel))}});
  }
};

struct SweepPoint {
  std::uint64_t n = 0;
  std::vector<std::pair<double, GridDensity>> trajectory;
  double clipped_max = 0.0;
  std::vector<std::string> files;
};

const char* claim_statement(const std::string& claim) {
  if (claim == "exactness")
    return "b = 0: the terminal law equals the exact heat flow of the "
           "initial law";
  if (claim == "domination")
    return "rho_N(T, y) <= C g(lambda T, y - x0) with C uniform across the "
           "N sweep";
  if (claim == "hoelder_space")
    return "|rho(t, y1) - rho(t, y2)| <= C |y1 - y2|^beta t^{-(1+beta)/2} "
           "with C uniform across the N sweep";
  if (claim == "hoelder_time")
    return "|rho(t2, y) - rho(t1, y)| <= C (t2 - t1)^{beta/2} "
           "t1^{-(1+beta)/2} with C uniform across the N sweep";
  if (claim == "l1_convergence")
    return "||rho_N(T) - rho_ref(T)||_1 decreases through the sweep and ends "
           "below tolerance";
  if (claim == "smoothing")
    return "||rho_t||_inf t^{d/(2q)} <= C ||rho_0||_q across [T/8, T]";
  if (claim == "weak_form")
    return "residual of the time-integrated weak identity across the probe "
           "set";
  return "";
}

json certificate_row(const BoundCertificate& cert) {
  return {{"claim", cert.claim},
          {"type", "certificate"},
          {"pass", cert.pass},
          {"value", cert.constant},
          {"stability", cert.stability_ratio},
          {"threshold", cert.threshold},
          {"per_n", cert.per_n},
          {"sweep_n", cert.sweep_n}};
}

json manifest_read(const std::string& dir) {
  fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream in(path);
  require(in.good(), errc::io_error,
          "missing manifest '" + path.string() + "'");
  json m;
  try {
    in >> m;
  } catch (const std::exception& e) {
    fail(errc::io_error,
         "corrupt manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

void verify_artifact(const std::string& dir, const json& manifest,
                     const std::string& rel) {
  for (const json& entry : manifest.at("artifacts")) {
    if (entry.at("file") != rel) continue;
    std::string want = entry.at("checksum");
    std::string got = hex64(file_checksum(fs::path(dir) / rel));
    require(got == want, errc::data_mismatch,
            "artifact '" + rel + "' checksum " + got +
                " does not match manifest " + want);
    return;
  }
  fail(errc::data_mismatch,
       "artifact '" + rel + "' is not listed in the manifest of '" + dir + "'");
}

// trajectory files of the preferred engine: density first, then fpe, then the
// particle KDE grids
const json* pick_run_entry(const json& manifest) {
  const json* best = nullptr;
  int best_rank = 99;
  for (const json& entry : manifest.at("runs")) {
    std::string engine = entry.at("engine");
    int rank = engine == "density" ? 0 : engine == "fpe" ? 1 : 2;
    if (rank < best_rank ||
        (rank == best_rank && best &&
         entry.value("n", 0u) > best->value("n", 0u))) {
      best = &entry;
      best_rank = rank;
    }
  }
  require(best != nullptr, errc::data_mismatch, "manifest lists no runs");
  return best;
}

std::vector<std::pair<double, GridDensity>> load_trajectory(
    const std::string& dir, const json& manifest, const json& entry) {
  std::vector<double> times = entry.at("snapshots").get<std::vector<double>>();
  std::vector<std::string> files =
      entry.at("files").get<std::vector<std::string>>();
  require(times.size() == files.size(), errc::data_mismatch,
          "manifest run entry: snapshot and file counts differ");
  std::vector<std::pair<double, GridDensity>> out;
  for (std::size_t i = 0; i < files.size(); ++i) {
    verify_artifact(dir, manifest, files[i]);
    out.emplace_back(times[i], load_grid((fs::path(dir) / files[i]).string()));
  }
  return out;
}

ExperimentConfig load_run_config(const std::string& dir, const json& manifest) {
  verify_artifact(dir, manifest, "config.toml");
  ExperimentConfig cfg =
      load_config((fs::path(dir) / "config.toml").string());
  std::string want = manifest.at("config_hash");
  require(hex64(config_hash(cfg)) == want, errc::data_mismatch,
          "config.toml hash does not match manifest " + want);
  return cfg;
}

// restriction onto the coarser of two 2^k-nested grids
std::pair<GridDensity, GridDensity> common_pair(const GridDensity& a,
                                                const GridDensity& b) {
  if (a.spec() == b.spec()) return {a, b};
  if (a.spec().size() > b.spec().size())
    return {restrict_to(a, b.spec()), b};
  return {a, restrict_to(b, a.spec())};
}

double sup_distance(const GridDensity& a, const GridDensity& b) {
  auto [ca, cb] = common_pair(a, b);
  double m = 0.0;
  for (std::uint64_t i = 0; i < ca.spec().size(); ++i)
    m = std::max(m, std::abs(ca.value(i) - cb.value(i)));
  return m;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& base_config,
                          const std::string& base_dir,
                          const RunOverrides& overrides) {
  ExperimentConfig config = base_config;
  if (!overrides.out_dir.empty()) config.out_dir = overrides.out_dir;
  if (overrides.seed) config.particles.seed = *overrides.seed;
  if (!overrides.density_source.empty())
    config.particles.mode = overrides.density_source;
  validate_config(config);

  const double T = config.time.horizon;
  GridSpec grid = config.make_grid();
  DriftSpec drift = config.make_drift();
  InitialDistribution init = config.make_initial(base_dir);
  std::set<std::string> engines(config.engines.begin(), config.engines.end());

  fs::path out(config.out_dir);
  fs::create_directories(out);
  ArtifactLog artifacts{out};

  json manifest;
  manifest["tool"] = kToolVersion;
  manifest["experiment"] = config.name;
  manifest["config_hash"] = hex64(config_hash(config));
  manifest["started"] = timestamp_utc();
  manifest["engines"] = config.engines;
  manifest["sweep"] = config.time.steps;
  manifest["snapshots"] = config.snapshot_times;

  {
    std::ofstream cf(out / "config.toml", std::ios::trunc | std::ios::binary);
    cf << serialize_config(config);
    require(cf.good(), errc::io_error, "cannot write config copy");
  }
  artifacts.add("config.toml");

  json runs = json::array();

  // ---- density engine: one run per sweep point
  std::vector<SweepPoint> sweep;
  if (engines.count("density")) {
    for (std::uint64_t n : config.time.steps) {
      TimeGrid tg = config.make_time(n);
      RunResult rr = run(init, drift, grid, tg, config.snapshot_times);
      SweepPoint point;
      point.n = n;
      point.trajectory = std::move(rr.snapshots);
      for (double c : rr.clipped_per_step)
        point.clipped_max = std::max(point.clipped_max, c);

      char sub[24];
      std::snprintf(sub, sizeof sub, "n_%04llu",
                    static_cast<unsigned long long>(n));
      fs::create_directories(out / sub);
      for (std::size_t j = 0; j < point.trajectory.size(); ++j) {
        char name[48];
        std::snprintf(name, sizeof name, "%s/density_%03zu.ddg", sub, j);
        save_grid(point.trajectory[j].second, (out / name).string());
        artifacts.add(name);
        point.files.push_back(name);
      }
      std::string csv = std::string(sub) + "/density_terminal.csv";
      save_grid_csv(point.trajectory.back().second, (out / csv).string());
      artifacts.add(csv);

      runs.push_back({{"engine", "density"},
                      {"n", n},
                      {"snapshots", config.snapshot_times},
                      {"files", point.files},
                      {"clipped_mass_max", point.clipped_max}});
      sweep.push_back(std::move(point));
    }
  }

  // ---- fpe engine: one reference solve on its own grid
  std::vector<std::pair<double, GridDensity>> fpe_traj;
  if (engines.count("fpe")) {
    GridSpec fgrid = config.make_fpe_grid();
    FpeConfig fcfg = FpeConfig::make(fgrid, T, drift, config.fpe.cfl);

    // cadence: every snapshot_every-th lattice time of the finest sweep N,
    // united with the configured snapshot times
    std::vector<double> times;
    std::uint64_t n_max = config.time.steps.back();
    double h = T / static_cast<double>(n_max);
    for (std::uint64_t k = config.fpe.snapshot_every; k <= n_max;
         k += config.fpe.snapshot_every)
      times.push_back(static_cast<double>(k) * h);
    for (double t : config.snapshot_times) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [](double a, double b) {
                              return std::abs(a - b) < 1e-12;
                            }),
                times.end());
    if (times.empty() || std::abs(times.back() - T) > 1e-12)
      times.push_back(T);

    fpe_traj = fpe_solve(init, drift, fcfg, times);

    // stability headroom of the actual sub-steps against the cfl = 1 cap
    double dt_hard = FpeConfig::make(fgrid, T, drift, 1.0).dt;
    double margin = 1.0;
    double prev = 0.0;
    for (double t : times) {
      double gap = t - prev;
      prev = t;
      if (gap <= 0.0) continue;
      auto steps = static_cast<std::uint64_t>(
          std::ceil(gap / fcfg.dt * (1.0 - 1e-12)));
      double sub = gap / static_cast<double>(std::max<std::uint64_t>(steps, 1));
      margin = std::min(margin, 1.0 - sub / dt_hard);
    }

    fs::create_directories(out / "fpe");
    std::vector<std::string> files;
    std::vector<double> file_times;
    for (double t : config.snapshot_times) {
      auto it = std::find_if(fpe_traj.begin(), fpe_traj.end(),
                             [&](const auto& p) {
                               return std::abs(p.first - t) < 1e-9;
                             });
      require(it != fpe_traj.end(), errc::internal_error,
              "fpe trajectory misses a configured snapshot");
      char name[48];
      std::snprintf(name, sizeof name, "fpe/fpe_%03zu.ddg", files.size());
      save_grid(it->second, (out / name).string());
      artifacts.add(name);
      files.push_back(name);
      file_times.push_back(t);
    }
    runs.push_back({{"engine", "fpe"},
                    {"n", config.time.steps.back()},
                    {"cells", fgrid.cells[0]},
                    {"dt", fcfg.dt},
                    {"cfl_margin_min", margin},
                    {"snapshots", file_times},
                    {"files", files}});
  }

  // ---- particle engine: one ensemble at the finest N
  if (engines.count("particles")) {
    std::uint64_t n = config.time.steps.back();
    TimeGrid tg = config.make_time(n);
    KdeSpec kde;
    if (config.particles.bandwidth) {
      kde.rule = KdeSpec::Rule::fixed;
      kde.sigma_b = *config.particles.bandwidth;
    }
    FeedbackMode mode = config.particles.mode == "coupled"
                            ? FeedbackMode::coupled
                            : FeedbackMode::kde;
    std::vector<GridDensity> feedback;
    if (mode == FeedbackMode::coupled) {
      std::vector<double> lattice;
      for (std::uint64_t k = 1; k + 1 <= n; ++k)
        lattice.push_back(static_cast<double>(k) * tg.h);
      if (!lattice.empty()) {
        RunResult rr = run(init, drift, grid, tg, lattice);
        for (auto& [t, g] : rr.snapshots) feedback.push_back(std::move(g));
      }
    }
    ParticleRunResult pr =
        run_particles(init, drift, grid.dim, config.particles.count,
                      config.particles.seed, tg, mode, kde, &grid, feedback,
                      config.snapshot_times);

    fs::create_directories(out / "particles");
    std::vector<std::string> files;
    for (std::size_t j = 0; j < pr.snapshots.size(); ++j) {
      char name[56];
      std::snprintf(name, sizeof name, "particles/particle_density_%03zu.ddg",
                    j);
      save_grid(binned_kde(pr.snapshots[j].second, kde, grid),
                (out / name).string());
      artifacts.add(name);
      files.push_back(name);
    }
    save_particles(pr.snapshots.back().second,
                   (out / "particles/particles_terminal.ddp").string());
    artifacts.add("particles/particles_terminal.ddp");
    runs.push_back({{"engine", "particles"},
                    {"n", n},
                    {"count", config.particles.count},
                    {"seed", config.particles.seed},
                    {"mode", config.particles.mode},
                    {"snapshots", config.snapshot_times},
                    {"files", files}});
  }

  // ---- diagnostics
  json claims = json::array();
  std::vector<std::string> failed;
  std::string summary;
  auto finish_claim = [&](json row) {
    std::string claim = row.at("claim");
    bool pass = row.at("pass");
    row["statement"] = claim_statement(claim);
    if (!pass) failed.push_back(claim);
    summary += std::string(pass ? "[PASS] " : "[FAIL] ") + claim + ": value " +
               fmt6(row.at("value").get<double>()) + " (threshold " +
               fmt6(row.at("threshold").get<double>()) + ")\n";
    claims.push_back(std::move(row));
  };
  std::set<std::string> diag(config.diagnostics.run.begin(),
                             config.diagnostics.run.end());
  const SweepPoint* finest = sweep.empty() ? nullptr : &sweep.back();

  if (diag.count("exactness")) {
    GridDensity heat = from_initial(init, grid, T);
    std::vector<double> errs;
    double worst = 0.0;
    for (const SweepPoint& p : sweep) {
      errs.push_back(l1_distance(p.trajectory.back().second, heat));
      worst = std::max(worst, errs.back());
    }
    ConvergenceCurve curve;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      curve.abscissa.push_back(static_cast<double>(sweep[i].n));
      curve.ordinate.push_back(errs[i]);
    }
    write_curve_csv(curve, (out / "exactness.csv").string());
    artifacts.add("exactness.csv");
    finish_claim({{"claim", "exactness"},
                  {"type", "curve"},
                  {"pass", worst <= config.tolerances.exactness},
                  {"value", worst},
                  {"threshold", config.tolerances.exactness},
                  {"per_n", errs}});
  }

  if (diag.count("domination")) {
    std::vector<std::pair<std::uint64_t, GridDensity>> terminals;
    for (const SweepPoint& p : sweep)
      terminals.emplace_back(p.n, p.trajectory.back().second);
    BoundCertificate cert =
        fit_domination(terminals, init, T, config.diagnostics.lambda,
                       config.tolerances.stability);
    write_certificate_csv(cert, (out / "domination.csv").string());
    artifacts.add("domination.csv");
    finish_claim(certificate_row(cert));
  }

  for (HoelderKind kind : {HoelderKind::space, HoelderKind::time}) {
    std::string name =
        kind == HoelderKind::space ? "hoelder_space" : "hoelder_time";
    if (!diag.count(name)) continue;
    std::vector<std::uint64_t> ns;
    std::vector<double> cs;
    for (const SweepPoint& p : sweep) {
      ns.push_back(p.n);
      cs.push_back(hoelder_constant(p.trajectory, kind,
                                    config.diagnostics.beta,
                                    config.hoelder_t_window(),
                                    config.hoelder_x_window()));
    }
    BoundCertificate cert =
        combine_sweep(name, ns, cs, config.tolerances.stability);
    cert.t_window = config.hoelder_t_window();
    cert.x_window = config.hoelder_x_window();
    write_certificate_csv(cert, (out / (name + ".csv")).string());
    artifacts.add(name + ".csv");
    finish_claim(certificate_row(cert));
  }

  if (diag.count("l1_convergence")) {
    auto ref = std::find_if(fpe_traj.begin(), fpe_traj.end(), [&](const auto& p) {
      return std::abs(p.first - T) < 1e-9;
    });
    require(ref != fpe_traj.end(), errc::internal_error,
            "fpe trajectory misses the horizon");
    std::vector<std::pair<std::uint64_t, GridDensity>> terminals;
    for (const SweepPoint& p : sweep)
      terminals.emplace_back(p.n, p.trajectory.back().second);
    ConvergenceCurve curve = l1_convergence_study(
        terminals, ref->second, drift, config.tolerances.l1_terminal);
    write_curve_csv(curve, (out / "l1_convergence.csv").string());
    artifacts.add("l1_convergence.csv");
    finish_claim({{"claim", "l1_convergence"},
                  {"type", "curve"},
                  {"pass", curve.pass},
                  {"value", curve.ordinate.back()},
                  {"threshold", curve.tolerance},
                  {"slope", curve.slope},
                  {"monotone", curve.monotone},
                  {"abscissa", curve.abscissa},
                  {"ordinate", curve.ordinate}});
  }

  if (diag.count("smoothing")) {
    std::vector<std::pair<double, double>> implied;
    bool pass = true;
    double worst = 0.0;
    for (const auto& [t, g] : finest->trajectory) {
      if (t < T / 8.0 - 1e-12) continue;
      SmoothingCheck s = smoothing_check(g, t, init, config.diagnostics.q,
                                         config.diagnostics.c_fit);
      double c_implied =
          config.diagnostics.c_fit * s.observed / s.bound;
      implied.emplace_back(t, c_implied);
      worst = std::max(worst, c_implied);
      pass = pass && s.pass;
    }
    write_series_csv(implied, (out / "smoothing.csv").string());
    artifacts.add("smoothing.csv");
    finish_claim({{"claim", "smoothing"},
                  {"type", "check"},
                  {"pass", pass},
                  {"value", worst},
                  {"threshold", config.diagnostics.c_fit}});
  }

  if (diag.count("weak_form")) {
    TestFunctionSet probes = TestFunctionSet::catalog(grid.dim);
    std::vector<double> res =
        weak_residual(finest->trajectory, drift, probes, T);
    double worst = *std::max_element(res.begin(), res.end());
    std::vector<std::pair<double, double>> series;
    for (std::size_t j = 0; j < res.size(); ++j)
      series.emplace_back(static_cast<double>(j), res[j]);
    write_series_csv(series, (out / "weak_residual.csv").string());
    artifacts.add("weak_residual.csv");
    finish_claim({{"claim", "weak_form"},
                  {"type", "check"},
                  {"pass", worst <= config.tolerances.weak_residual},
                  {"value", worst},
                  {"threshold", config.tolerances.weak_residual}});
  }

  manifest["runs"] = runs;
  manifest["claims"] = claims;
  manifest["pass"] = failed.empty();
  manifest["finished"] = timestamp_utc();
  manifest["artifacts"] = artifacts.list;
  {
    std::ofstream mf(out / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << "\n";
    require(mf.good(), errc::io_error, "cannot write manifest.json");
  }

  RunOutcome outcome;
  outcome.exit_code = failed.empty() ? 0 : 1;
  outcome.out_dir = out.string();
  outcome.failed_claims = std::move(failed);
  outcome.summary = std::move(summary);
  return outcome;
}

RunOutcome run_experiment_file(const std::string& config_path,
                               const RunOverrides& overrides) {
  ExperimentConfig config = load_config(config_path);
  std::string base = fs::path(config_path).parent_path().string();
  if (base.empty()) base = ".";
  return run_experiment(config, base, overrides);
}

CompareOutcome compare_runs(const std::string& dir_a, const std::string& dir_b,
                            const std::string& metric) {
  require(metric == "l1" || metric == "sup" || metric == "weak-residual",
          errc::invalid_argument,
          "metric must be l1, sup, or weak-residual, got '" + metric + "'");
  json ma = manifest_read(dir_a);
  json mb = manifest_read(dir_b);
  ExperimentConfig ca = load_run_config(dir_a, ma);

  CompareOutcome out;
  out.metric = metric;
  std::ostringstream text;
  text << "compare " << dir_a << " vs " << dir_b << " [" << metric << "]\n";

  if (metric == "weak-residual") {
    out.threshold = ca.tolerances.weak_residual;
    for (const auto& [dir, m] :
         {std::pair<const std::string&, json&>(dir_a, ma),
          std::pair<const std::string&, json&>(dir_b, mb)}) {
      ExperimentConfig cfg = load_run_config(dir, m);
      const json* entry = pick_run_entry(m);
      auto traj = load_trajectory(dir, m, *entry);
      require(traj.size() >= 2, errc::invalid_argument,
              "run '" + dir + "' stores fewer than two snapshots");
      TestFunctionSet probes = TestFunctionSet::catalog(cfg.grid.dim);
      std::vector<double> res =
          weak_residual(traj, cfg.make_drift(), probes, traj.back().first);
      double worst = *std::max_element(res.begin(), res.end());
      out.value = std::max(out.value, worst);
      text << "  " << dir << " (" << entry->at("engine").get<std::string>()
           << "): max residual " << fmt6(worst) << "\n";
    }
  } else {
    auto terminal = [&](const std::string& dir, const json& m) {
      const json* entry = pick_run_entry(m);
      std::vector<std::string> files =
          entry->at("files").get<std::vector<std::string>>();
      require(!files.empty(), errc::data_mismatch, "run entry lists no files");
      verify_artifact(dir, m, files.back());
      return load_grid((fs::path(dir) / files.back()).string());
    };
    GridDensity ga = terminal(dir_a, ma);
    GridDensity gb = terminal(dir_b, mb);
    out.value = metric == "l1" ? l1_on_common_grid(ga, gb)
                               : sup_distance(ga, gb);
    out.threshold = metric == "l1" ? ca.tolerances.compare_l1
                                   : ca.tolerances.compare_sup;
  }

  out.pass = out.value <= out.threshold;
  out.exit_code = out.pass ? 0 : 1;
  text << "  value " << fmt6(out.value) << " vs threshold "
       << fmt6(out.threshold) << ": " << (out.pass ? "PASS" : "FAIL") << "\n";
  out.text = text.str();
  return out;
}

std::string report_runs(const std::vector<std::string>& run_dirs) {
  require(!run_dirs.empty(), errc::invalid_argument,
          "report needs at least one run directory");
  std::ostringstream doc;
  bool all_pass = true;
  for (const std::string& dir : run_dirs) {
    json m = manifest_read(dir);
    std::size_t checked = 0;
    for (const json& entry : m.at("artifacts")) {
      verify_artifact(dir, m, entry.at("file"));
      ++checked;
    }
    doc << "# run " << m.at("experiment").get<std::string>() << "\n";
    doc << "tool " << m.at("tool").get<std::string>() << " | config hash "
        << m.at("config_hash").get<std::string>() << "\n";
    doc << "started " << m.at("started").get<std::string>() << " | finished "
        << m.at("finished").get<std::string>() << "\n";
    doc << "engines:";
    for (const json& e : m.at("engines")) doc << " " << e.get<std::string>();
    doc << " | sweep N = {";
    const json& sweepj = m.at("sweep");
    for (std::size_t i = 0; i < sweepj.size(); ++i)
      doc << (i ? ", " : "") << sweepj[i].get<std::uint64_t>();
    doc << "}\n";
    for (const json& r : m.at("runs")) {
      doc << "  engine " << r.at("engine").get<std::string>();
      if (r.contains("clipped_mass_max"))
        doc << ": N = " << r.at("n").get<std::uint64_t>()
            << ", max clipped mass per step "
            << fmt6(r.at("clipped_mass_max").get<double>());
      if (r.contains("cfl_margin_min"))
        doc << ": dt = " << fmt6(r.at("dt").get<double>())
            << ", min CFL margin " << fmt6(r.at("cfl_margin_min").get<double>());
      if (r.contains("count"))
        doc << ": M = " << r.at("count").get<std::uint64_t>() << ", seed "
            << r.at("seed").get<std::uint64_t>() << ", mode "
            << r.at("mode").get<std::string>();
      doc << "\n";
    }

    doc << "claims:\n";
    for (const json& claim : m.at("claims")) {
      bool pass = claim.at("pass");
      all_pass = all_pass && pass;
      doc << "  [" << (pass ? "PASS" : "FAIL") << "] "
          << claim.at("claim").get<std::string>() << ": value "
          << fmt6(claim.at("value").get<double>());
      if (claim.contains("stability"))
        doc << ", stability " << fmt6(claim.at("stability").get<double>());
      if (claim.contains("slope"))
        doc << ", slope " << fmt6(claim.at("slope").get<double>());
      doc << " (threshold " << fmt6(claim.at("threshold").get<double>())
          << ")\n";
      if (!pass && claim.contains("per_n") && claim.contains("sweep_n")) {
        const json& per = claim.at("per_n");
        const json& ns = claim.at("sweep_n");
        if (!per.empty() && per.size() == ns.size()) {
          std::size_t worst = 0;
          for (std::size_t i = 1; i < per.size(); ++i)
            if (per[i].get<double>() > per[worst].get<double>()) worst = i;
          doc << "        worst N = " << ns[worst].get<std::uint64_t>()
              << " (constant " << fmt6(per[worst].get<double>()) << ")\n";
        }
      }
      std::string statement = claim.value("statement", "");
      if (!statement.empty()) doc << "        claim: " << statement << "\n";
    }
    doc << "artifacts: " << checked << " files, checksums verified\n\n";
  }
  doc << "overall: " << (all_pass ? "PASS" : "FAIL") << "\n";
  return doc.str();
}

}  // namespace ddsde
