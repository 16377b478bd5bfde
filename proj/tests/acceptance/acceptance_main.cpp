// Acceptance gate: one line per criterion, exit 0 iff every criterion passes
// inside its time budget. Thresholds are pinned here, next to the check that
// uses them.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "ddsde/diagnostics.hpp"
#include "ddsde/drift.hpp"
#include "ddsde/errors.hpp"
#include "ddsde/euler_density.hpp"
#include "ddsde/fpe.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/initial.hpp"
#include "ddsde/parallel.hpp"
#include "ddsde/particles.hpp"
#include "ddsde/test_functions.hpp"

using namespace ddsde;

namespace {

char detail_buf[512];

template <typename... Args>
const char* detail(const char* fmt, Args... args) {
  std::snprintf(detail_buf, sizeof detail_buf, fmt, args...);
  return detail_buf;
}

struct Result {
  bool pass = false;
  std::string text;
};

DriftSpec tanh_drift() { return catalog("tanh_density", 1, {{"c", 1.0}}); }

std::vector<double> eighths() {
  std::vector<double> t;
  for (int k = 1; k <= 8; ++k) t.push_back(k / 8.0);
  return t;
}

std::vector<double> lattice_times(std::uint64_t n) {
  std::vector<double> t;
  for (std::uint64_t k = 1; k <= n; ++k)
    t.push_back(static_cast<double>(k) / static_cast<double>(n));
  return t;
}

using Trajectory = std::vector<std::pair<double, GridDensity>>;

Trajectory at_eighths(const Trajectory& full) {
  Trajectory out;
  for (const auto& [t, g] : full) {
    double r = t * 8.0;
    if (std::abs(r - std::round(r)) < 1e-9) out.emplace_back(t, g);
  }
  return out;
}

// sweeps shared between criteria; the first criterion that needs a block
// pays for it inside its own timer
struct Shared {
  GridSpec g4096 = GridSpec::make1d(-16.0, 16.0, 4096);
  GridSpec g2048 = GridSpec::make1d(-16.0, 16.0, 2048);
  InitialDistribution pm = InitialDistribution::point_mass({0.0});
  InitialDistribution gauss = InitialDistribution::gaussian({0.0}, 0.5);

  // tanh + point mass, snapshots k/8, N in {8..512}
  std::vector<std::pair<std::uint64_t, Trajectory>> pm_sweep;
  // tanh + gaussian, N in {16..512}; N = 512 stores the full lattice
  std::map<std::uint64_t, Trajectory> gauss_runs;
  Trajectory fpe512;

  void ensure_pm_sweep() {
    if (!pm_sweep.empty()) return;
    std::vector<double> snaps = eighths();
    for (std::uint64_t n : {8u, 16u, 32u, 64u, 128u, 256u, 512u}) {
      TimeGrid tg = TimeGrid::make(1.0, n);
      pm_sweep.emplace_back(n,
                            run(pm, tanh_drift(), g4096, tg, snaps).snapshots);
    }
  }

  void ensure_gauss_runs() {
    if (!gauss_runs.empty()) return;
    for (std::uint64_t n : {16u, 32u, 64u, 128u, 256u, 512u}) {
      TimeGrid tg = TimeGrid::make(1.0, n);
      std::vector<double> snaps = n == 512 ? lattice_times(n) : eighths();
      gauss_runs[n] = run(gauss, tanh_drift(), g4096, tg, snaps).snapshots;
    }
    GridSpec fgrid = GridSpec::make1d(-16.0, 16.0, 512);
    FpeConfig fcfg = FpeConfig::make(fgrid, 1.0, tanh_drift(), 0.45);
    fpe512 = fpe_solve(gauss, tanh_drift(), fcfg, eighths());
  }
};

// ---- criteria -------------------------------------------------------------

Result c1_exactness(Shared&) {
  GridSpec grid = GridSpec::make1d(-20.0, 20.0, 4096);
  TimeGrid tg = TimeGrid::make(1.0, 64);
  InitialDistribution pm = InitialDistribution::point_mass({0.0});
  double snap = 1.0;
  RunResult rr = run(pm, catalog("zero"), grid, tg,
                     std::span<const double>(&snap, 1));
  GridDensity heat = from_initial(pm, grid, 1.0);
  double err = l1_distance(rr.snapshots.back().second, heat);
  return {err <= 1e-6, detail("L1 error %.3g vs 1e-06", err)};
}

Result c2_semigroup(Shared& s) {
  double worst = 0.0;
  for (double t : {0.1, 0.5, 1.0})
    for (double u : {0.1, 0.5, 1.0})
      worst = std::max(worst, heat::ck_convolve_check(t, u, s.g4096));
  return {worst <= 1e-8, detail("sup deviation %.3g vs 1e-08", worst)};
}

Result c3_domination(Shared& s) {
  s.ensure_pm_sweep();
  std::vector<std::pair<std::uint64_t, GridDensity>> terminals;
  for (const auto& [n, traj] : s.pm_sweep)
    terminals.emplace_back(n, traj.back().second);
  BoundCertificate cert = fit_domination(terminals, s.pm, 1.0, 4.0, 1.5);
  return {cert.pass, detail("constant %.4g, stability %.4g vs 1.5",
                            cert.constant, cert.stability_ratio)};
}

Result c4_hoelder(Shared& s) {
  s.ensure_pm_sweep();
  std::array<double, 2> t_window{0.25, 1.0};
  std::array<double, 2> x_window{-4.0, 4.0};
  bool pass = true;
  double worst_stability = 0.0;
  for (HoelderKind kind : {HoelderKind::space, HoelderKind::time}) {
    std::vector<std::uint64_t> ns;
    std::vector<double> cs;
    for (const auto& [n, traj] : s.pm_sweep) {
      ns.push_back(n);
      cs.push_back(hoelder_constant(traj, kind, 0.5, t_window, x_window));
    }
    BoundCertificate cert = combine_sweep(
        kind == HoelderKind::space ? "hoelder_space" : "hoelder_time", ns, cs,
        1.5);
    pass = pass && cert.pass;
    worst_stability = std::max(worst_stability, cert.stability_ratio);
  }
  return {pass,
          detail("worst stability %.4g vs 1.5 (both kinds)", worst_stability)};
}

Result c5_l1_convergence(Shared& s) {
  s.ensure_gauss_runs();
  std::vector<std::pair<std::uint64_t, GridDensity>> terminals;
  for (const auto& [n, traj] : s.gauss_runs)
    terminals.emplace_back(n, traj.back().second);
  ConvergenceCurve curve = l1_convergence_study(
      terminals, s.fpe512.back().second, tanh_drift(), 1e-2);
  return {curve.pass,
          detail("terminal %.3g vs 1e-02, slope %.3g, monotone %s",
                 curve.ordinate.back(), curve.slope,
                 curve.monotone ? "yes" : "no")};
}

Result c6_weak_form(Shared& s) {
  s.ensure_gauss_runs();
  TimeGrid tg128 = TimeGrid::make(1.0, 128);
  Trajectory e128 = run(s.gauss, tanh_drift(), s.g2048, tg128,
                        lattice_times(128))
                        .snapshots;
  TestFunctionSet probes = TestFunctionSet::catalog(1);
  std::vector<double> r512 =
      weak_residual(s.gauss_runs.at(512), tanh_drift(), probes, 1.0);
  std::vector<double> r128 = weak_residual(e128, tanh_drift(), probes, 1.0);
  // per probe against the threshold; the N improvement on the max only,
  // since individual probes sit in signed-cancellation territory below 1e-4
  bool pass = true;
  double worst = 0.0;
  for (double r : r512) {
    worst = std::max(worst, r);
    pass = pass && r <= 5e-3;
  }
  double worst128 = *std::max_element(r128.begin(), r128.end());
  pass = pass && worst < worst128;
  return {pass, detail("N=512 max %.3g vs 5e-03 and < N=128 max %.3g", worst,
                       worst128)};
}

Result c7_moments(Shared& s) {
  // pure-diffusion control: increments of sqrt(2) W over tau have fourth
  // moment 3 (2 tau)^2, so the ratio to tau^2 is 12
  TimeGrid tg = TimeGrid::make(1.0, 64);
  double two[2] = {0.5, 1.0};
  ParticleRunResult ctrl =
      run_particles(s.pm, catalog("zero"), 1, 100000, 101, tg,
                    FeedbackMode::kde, KdeSpec{}, nullptr, {},
                    std::span<const double>(two, 2));
  const std::vector<double>& a = ctrl.snapshots[0].second.positions;
  const std::vector<double>& b = ctrl.snapshots[1].second.positions;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = b[i] - a[i];
    double y = d * d * d * d;
    mean += y;
    m2 += y * y;
  }
  double m = static_cast<double>(a.size());
  mean /= m;
  double sd = std::sqrt(std::max(0.0, m2 / m - mean * mean));
  double tau2 = 0.25;
  double ratio = mean / tau2;
  double band = 3.0 * sd / std::sqrt(m) / tau2;
  bool ctrl_ok = std::abs(ratio - 12.0) <= band;

  std::vector<std::pair<double, double>> pairs = {
      {0.25, 0.5}, {0.25, 0.75}, {0.25, 1.0},
      {0.5, 0.75}, {0.5, 1.0},   {0.75, 1.0}};
  double quarters[4] = {0.25, 0.5, 0.75, 1.0};
  // fixed feedback bandwidth: early-time Silverman widths undercut the grid
  KdeSpec feedback_kde{KdeSpec::Rule::fixed, 0.5};
  std::vector<std::uint64_t> ns;
  std::vector<double> cs;
  for (std::uint64_t n : {8u, 16u, 32u, 64u, 128u, 256u, 512u}) {
    TimeGrid tgn = TimeGrid::make(1.0, n);
    ParticleRunResult pr =
        run_particles(s.pm, tanh_drift(), 1, 100000, 11, tgn,
                      FeedbackMode::kde, feedback_kde, &s.g2048, {},
                      std::span<const double>(quarters, 4));
    ns.push_back(n);
    cs.push_back(moment_increment_check(pr.snapshots, pairs));
  }
  BoundCertificate cert = combine_sweep("moment_increment", ns, cs, 1.5);
  return {ctrl_ok && cert.pass,
          detail("control ratio %.4g vs 12 +- %.2g, sweep stability %.4g vs "
                 "1.5",
                 ratio, band, cert.stability_ratio)};
}

Result c8_engine_agreement(Shared& s) {
  TimeGrid tg = TimeGrid::make(1.0, 128);
  Trajectory dens =
      run(s.gauss, tanh_drift(), s.g2048, tg, lattice_times(128)).snapshots;
  std::vector<GridDensity> feedback;
  for (std::uint64_t k = 0; k + 2 <= 128; ++k)
    feedback.push_back(dens[k].second);
  double snap = 1.0;
  ParticleRunResult pr =
      run_particles(s.gauss, tanh_drift(), 1, 100000, 7, tg,
                    FeedbackMode::coupled, KdeSpec{}, &s.g2048, feedback,
                    std::span<const double>(&snap, 1));
  const ParticleEnsemble& terminal = pr.snapshots.back().second;
  const GridDensity& rho = dens.back().second;
  double l1 = l1_distance(binned_kde(terminal, KdeSpec{}, s.g2048), rho);

  double worst_z = 0.0;
  bool bands_ok = true;
  double dx = s.g2048.dx(0);
  for (const TestFunction& f : TestFunctionSet::catalog(1).functions) {
    Expectation emp = empirical_expectation(terminal, f.value, 1.0);
    double quad = 0.0;
    for (std::uint64_t i = 0; i < s.g2048.size(); ++i) {
      double x = s.g2048.center(0, i);
      quad += f.value(std::span<const double>(&x, 1)) * rho.value(i);
    }
    quad *= dx;
    double z = emp.half_width > 0.0
                   ? std::abs(emp.value - quad) / (emp.half_width / 3.0)
                   : 0.0;
    worst_z = std::max(worst_z, z);
    bands_ok = bands_ok && std::abs(emp.value - quad) <= emp.half_width;
  }
  return {l1 <= 0.05 && bands_ok,
          detail("KDE L1 %.3g vs 0.05, worst probe %.2f sigma vs 3", l1,
                 worst_z)};
}

Result c9_uniqueness(Shared& s) {
  s.ensure_gauss_runs();
  Trajectory e512 = at_eighths(s.gauss_runs.at(512));
  const Trajectory& e256 = s.gauss_runs.at(256);
  const Trajectory& e128 = s.gauss_runs.at(128);

  auto sup_sep = [](const Trajectory& a, const Trajectory& b) {
    double m = 0.0;
    for (const auto& [t, d] : uniqueness_separation(a, b)) m = std::max(m, d);
    return m;
  };
  double sep_euler = sup_sep(e256, e512);
  double est_e256 = l1_on_common_grid(e128.back().second, e256.back().second);
  double est_e512 = l1_on_common_grid(e256.back().second, e512.back().second);

  DriftSpec drift = tanh_drift();
  auto fpe_at = [&](std::uint64_t cells) {
    GridSpec grid = GridSpec::make1d(-16.0, 16.0, cells);
    return fpe_solve(s.gauss, drift, FpeConfig::make(grid, 1.0, drift, 0.45),
                     eighths());
  };
  Trajectory f256 = fpe_at(256);
  Trajectory f1024 = fpe_at(1024);
  double sep_fpe = sup_sep(s.fpe512, f1024);
  double est_f512 =
      l1_on_common_grid(f256.back().second, s.fpe512.back().second);
  double est_f1024 =
      l1_on_common_grid(s.fpe512.back().second, f1024.back().second);

  double cross =
      l1_on_common_grid(e512.back().second, f1024.back().second);
  bool pass = sep_euler <= est_e256 + est_e512 &&
              sep_fpe <= est_f512 + est_f1024 && cross <= 1e-2;
  return {pass,
          detail("euler sep %.3g vs est %.3g, fpe sep %.3g vs est %.3g, "
                 "cross %.3g vs 1e-02",
                 sep_euler, est_e256 + est_e512, sep_fpe,
                 est_f512 + est_f1024, cross)};
}

Result c10_smoothing(Shared& s) {
  std::vector<double> lo{-1.0}, hi{1.0};
  InitialDistribution uniform =
      InitialDistribution::uniform_box(1, lo, hi, s.g2048);
  TimeGrid tg = TimeGrid::make(1.0, 8);
  bool pass = true;
  double worst_margin = 0.0;
  for (const char* name : {"zero", "tanh_density"}) {
    DriftSpec drift = std::strcmp(name, "zero") == 0 ? catalog("zero")
                                                     : tanh_drift();
    Trajectory traj = run(uniform, drift, s.g2048, tg, eighths()).snapshots;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (auto [q, c_fit] : {std::pair<double, double>{2.0, 0.44},
                            std::pair<double, double>{inf, 1.0}}) {
      for (const auto& [t, g] : traj) {
        if (t < 1.0 / 8.0 - 1e-12) continue;
        SmoothingCheck chk = smoothing_check(g, t, uniform, q, c_fit);
        pass = pass && chk.pass;
        worst_margin = std::max(worst_margin, chk.observed / chk.bound);
      }
    }
  }
  return {pass, detail("worst observed/bound %.4g vs 1 (q in {2, inf}, both "
                       "drifts)",
                       worst_margin)};
}

Result c11_determinism(Shared& s) {
  auto run_block = [&] {
    TimeGrid tg = TimeGrid::make(1.0, 256);
    Trajectory euler =
        run(s.gauss, tanh_drift(), s.g4096, tg, eighths()).snapshots;
    GridSpec fgrid = GridSpec::make1d(-16.0, 16.0, 512);
    Trajectory fpe = fpe_solve(
        s.gauss, tanh_drift(), FpeConfig::make(fgrid, 1.0, tanh_drift(), 0.45),
        eighths());
    double snap = 1.0;
    TimeGrid tg64 = TimeGrid::make(1.0, 64);
    ParticleRunResult particles =
        run_particles(s.pm, tanh_drift(), 1, 100000, 42, tg64,
                      FeedbackMode::kde, KdeSpec{KdeSpec::Rule::fixed, 0.5},
                      &s.g2048, {}, std::span<const double>(&snap, 1));
    return std::tuple(std::move(euler), std::move(fpe),
                      particles.snapshots.back().second.positions);
  };
  set_thread_count(1);
  auto [euler1, fpe1, pos1] = run_block();
  set_thread_count(8);
  auto [euler8, fpe8, pos8] = run_block();
  auto [euler8b, fpe8b, pos8b] = run_block();
  set_thread_count(0);

  auto same = [](const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::vector<double>& va = a[i].second.values();
      const std::vector<double>& vb = b[i].second.values();
      if (va.size() != vb.size() ||
          std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0)
        return false;
    }
    return true;
  };
  bool grids_ok = same(euler1, euler8) && same(fpe1, fpe8);
  bool rerun_ok = same(euler8, euler8b) && same(fpe8, fpe8b);
  bool particles_ok =
      pos1.size() == pos8.size() &&
      std::memcmp(pos1.data(), pos8.data(), pos1.size() * sizeof(double)) ==
          0 &&
      std::memcmp(pos8.data(), pos8b.data(), pos8.size() * sizeof(double)) ==
          0;
  return {grids_ok && rerun_ok && particles_ok,
          detail("grids 1-vs-8 threads %s, reruns %s, ensembles %s",
                 grids_ok ? "identical" : "DIFFER",
                 rerun_ok ? "identical" : "DIFFER",
                 particles_ok ? "identical" : "DIFFER")};
}

struct Criterion {
  int id;
  const char* label;
  double limit_s;
  std::function<Result(Shared&)> body;
};

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "pure diffusion reproduces the heat flow", 5.0, c1_exactness},
      {2, "discrete convolution satisfies the semigroup identity", 5.0,
       c2_semigroup},
      {3, "Gaussian domination constant is stable across the N sweep", 120.0,
       c3_domination},
      {4, "Hoelder moduli are stable across the N sweep", 120.0, c4_hoelder},
      {5, "L1 distance to the reference solver falls below tolerance", 300.0,
       c5_l1_convergence},
      {6, "weak-form residuals are small and shrink with N", 60.0,
       c6_weak_form},
      {7, "fourth-moment increment constants match theory and stay stable",
       180.0, c7_moments},
      {8, "particle and density engines agree in L1 and expectations", 180.0,
       c8_engine_agreement},
      {9, "independent solvers stay within self-convergence estimates", 300.0,
       c9_uniqueness},
      {10, "sup-norm smoothing bound holds at the frozen constants", 60.0,
       c10_smoothing},
      {11, "results are bit-identical across thread counts and reruns", 300.0,
       c11_determinism},
  };

  Shared shared;
  bool all_pass = true;
  for (const Criterion& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.body(shared);
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed > c.limit_s) {
      r.pass = false;
      r.text += detail("; over the %.0f s budget", c.limit_s);
    }
    all_pass = all_pass && r.pass;
    std::printf("[%s] criterion %d: %s (%s) [%.2f s]\n",
                r.pass ? "PASS" : "FAIL", c.id, c.label, r.text.c_str(),
                elapsed);
    std::fflush(stdout);
  }
  std::printf("acceptance: %s\n", all_pass ? "PASS" : "FAIL");
  return all_pass ? 0 : 1;
}
