#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ddsde/drift.hpp"
#include "ddsde/errors.hpp"
#include "ddsde/euler_density.hpp"
#include "ddsde/fpe.hpp"
#include "ddsde/heat_kernel.hpp"
#include "ddsde/initial.hpp"
#include "ddsde/test_functions.hpp"

using namespace ddsde;

namespace {

GridDensity sampled_heat(const GridSpec& spec, double t, double shift = 0.0) {
  std::vector<double> v(spec.size());
  if (spec.dim == 1) {
    for (std::uint64_t i = 0; i < spec.cells[0]; ++i) {
      double x = spec.center(0, i) - shift;
      v[i] = heat::eval(t, std::span<const double>(&x, 1));
    }
  } else {
    for (std::uint64_t i = 0; i < spec.cells[0]; ++i)
      for (std::uint64_t j = 0; j < spec.cells[1]; ++j) {
        std::array<double, 2> x{spec.center(0, i) - shift,
                                spec.center(1, j) - shift};
        v[i * spec.cells[1] + j] =
            heat::eval(t, std::span<const double>(x.data(), 2));
      }
  }
  return GridDensity::from_values(spec, std::move(v));
}

const InitialDistribution var2 = InitialDistribution::gaussian({0.0}, 2.0);

GridDensity solve_terminal(const DriftSpec& drift, int cells, double T,
                           double cfl = 0.45) {
  GridSpec spec = GridSpec::make1d(-16.0, 16.0, cells);
  FpeConfig cfg = FpeConfig::make(spec, T, drift, cfl);
  return fpe_solve(var2, drift, cfg, std::vector<double>{T}).back().second;
}

}  // namespace

TEST_CASE("catalog probes: analytic derivatives match finite differences") {
  for (int dim : {1, 2}) {
    TestFunctionSet set = TestFunctionSet::catalog(dim);
    REQUIRE(set.functions.size() == 6);
    std::vector<std::array<double, 2>> points = {
        {0.3, -0.4}, {-1.7, 0.9}, {2.2, 1.1}, {0.0, 0.0}, {-0.6, -2.0},
        {4.0, 0.2},  {11.0, 3.0}  // last point is outside every support
    };
    for (const TestFunction& f : set.functions) {
      INFO("function ", f.name, " dim ", dim);
      CHECK(f.dim == dim);
      for (auto& p : points) {
        std::span<const double> x(p.data(), dim);
        double v = f.value(x);
        CHECK(std::isfinite(v));
        std::array<double, 2> g{};
        f.gradient(x, std::span<double>(g.data(), dim));
        double h = 1e-5;
        for (int a = 0; a < dim; ++a) {
          std::array<double, 2> xp = p, xm = p;
          xp[a] += h;
          xm[a] -= h;
          double fd = (f.value(std::span<const double>(xp.data(), dim)) -
                       f.value(std::span<const double>(xm.data(), dim))) /
                      (2 * h);
          CHECK(std::abs(g[a] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
        double hh = 1e-4, lap_fd = 0.0;
        for (int a = 0; a < dim; ++a) {
          std::array<double, 2> xp = p, xm = p;
          xp[a] += hh;
          xm[a] -= hh;
          lap_fd += (f.value(std::span<const double>(xp.data(), dim)) -
                     2 * v +
                     f.value(std::span<const double>(xm.data(), dim))) /
                    (hh * hh);
        }
        CHECK(std::abs(f.laplacian(x) - lap_fd) <=
              1e-5 * std::max(1.0, std::abs(lap_fd)));
      }
      std::array<double, 2> origin{0.0, 0.0};
      double far = f.value(std::span<const double>(
          std::array<double, 2>{14.0, 0.0}.data(), dim));
      CHECK(far == 0.0);
      // no probe is identically zero
      bool nonzero = false;
      for (double s = -8.0; s <= 8.0; s += 0.25) {
        origin[0] = s;
        if (f.value(std::span<const double>(origin.data(), dim)) != 0.0)
          nonzero = true;
      }
      CHECK(nonzero);
    }
  }
  CHECK_THROWS_AS((void)TestFunctionSet::catalog(3), Error);
}

TEST_CASE("boundary vanishing is enforced") {
  TestFunctionSet set = TestFunctionSet::catalog(1);
  CHECK_NOTHROW(check_vanishing(set, GridSpec::make1d(-16.0, 16.0, 128)));
  CHECK_THROWS_WITH_AS(check_vanishing(set, GridSpec::make1d(-4.0, 4.0, 64)),
                       doctest::Contains("vanish"), Error);
  std::uint64_t c2[2] = {32, 32};
  double lo[2] = {-16, -16}, hi[2] = {16, 16};
  GridSpec spec2 = GridSpec::make(2, lo, hi, c2);
  CHECK_THROWS_WITH_AS(check_vanishing(set, spec2), doctest::Contains("dim"),
                       Error);

  TestFunction constant;
  constant.name = "one";
  constant.dim = 1;
  constant.value = [](std::span<const double>) { return 1.0; };
  constant.gradient = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
  };
  constant.laplacian = [](std::span<const double>) { return 0.0; };
  TestFunctionSet bad;
  bad.functions.push_back(constant);
  CHECK_THROWS_WITH_AS(check_vanishing(bad, GridSpec::make1d(-16.0, 16.0, 64)),
                       doctest::Contains("vanish"), Error);
}

TEST_CASE("config picks the largest stable step dividing the horizon") {
  GridSpec spec = GridSpec::make1d(-16.0, 16.0, 128);
  FpeConfig cfg = FpeConfig::make(spec, 0.5, catalog("zero"));
  double cap = 0.45 * (0.25 * 0.25 / 2.0);
  CHECK(cfg.dt == doctest::Approx(0.5 / 36).epsilon(1e-12));
  CHECK(cfg.dt <= cap * (1 + 1e-12));
  CHECK(std::abs(0.5 / cfg.dt - std::round(0.5 / cfg.dt)) <= 1e-9);

  // strong drift switches the cap to the advective branch
  FpeConfig adv = FpeConfig::make(spec, 0.5, catalog("constant", 1, {{"c", 50.0}}));
  CHECK(adv.dt <= 0.45 * 0.25 / 50.0 * (1 + 1e-12));

  CHECK_THROWS_AS((void)FpeConfig::make(spec, 0.0, catalog("zero")), Error);
  CHECK_THROWS_AS((void)FpeConfig::make(spec, 0.5, catalog("zero"), 0.0), Error);
  CHECK_THROWS_AS((void)FpeConfig::make(spec, 0.5, catalog("zero"), 1.5), Error);
  CHECK_THROWS_AS((void)FpeConfig::make(spec, 0.5, catalog("zero", 2)), Error);

  FpeConfig loose = cfg;
  loose.dt = 10 * cap;
  CHECK_THROWS_WITH_AS(
      (void)fpe_solve(var2, catalog("zero"), loose, std::vector<double>{0.5}),
      doctest::Contains("stability"), Error);
}

TEST_CASE("snapshot time validation") {
  GridSpec spec = GridSpec::make1d(-16.0, 16.0, 128);
  FpeConfig cfg = FpeConfig::make(spec, 0.5, catalog("zero"));
  CHECK_THROWS_AS((void)fpe_solve(var2, catalog("zero"), cfg, {}), Error);
  CHECK_THROWS_AS((void)fpe_solve(var2, catalog("zero"), cfg,
                                  std::vector<double>{0.5, 0.25}),
                  Error);
  CHECK_THROWS_AS((void)fpe_solve(var2, catalog("zero"), cfg,
                                  std::vector<double>{-0.5}),
                  Error);
}

TEST_CASE("heat flow: second order in space") {
  std::vector<double> errs;
  for (int G : {128, 256, 512})
    errs.push_back(l1_distance(solve_terminal(catalog("zero"), G, 0.5),
                               sampled_heat(GridSpec::make1d(-16, 16, G), 1.5)));
  CHECK(std::log2(errs[0] / errs[1]) >= 1.9);
  CHECK(std::log2(errs[1] / errs[2]) >= 1.9);
  CHECK(errs[2] <= 5e-5);  // measured 1.77e-5
}

TEST_CASE("heat flow: first order in time") {
  GridDensity ref = solve_terminal(catalog("zero"), 128, 0.5, 0.025);
  double d1 = l1_distance(solve_terminal(catalog("zero"), 128, 0.5, 0.4), ref);
  double d2 = l1_distance(solve_terminal(catalog("zero"), 128, 0.5, 0.2), ref);
  double order = std::log2(d1 / d2);
  CHECK(order >= 0.9);
  CHECK(order <= 1.5);
}

TEST_CASE("constant drift: translated heat solution under the upwind flux") {
  DriftSpec c = catalog("constant", 1, {{"c", 0.8}});
  std::vector<double> errs;
  for (int G : {128, 256, 512})
    errs.push_back(
        l1_distance(solve_terminal(c, G, 0.5),
                    sampled_heat(GridSpec::make1d(-16, 16, G), 1.5, 0.4)));
  // upwind advection is first order; both refinements show it cleanly
  CHECK(std::log2(errs[0] / errs[1]) >= 0.9);
  CHECK(std::log2(errs[1] / errs[2]) >= 0.9);
  CHECK(errs[2] <= 8e-3);  // measured 3.99e-3
}

TEST_CASE("tanh drift: self-convergence at the first-order Richardson factor") {
  DriftSpec d = catalog("tanh_density", 1, {{"c", 1.0}});
  std::vector<GridDensity> sols;
  for (int G : {128, 256, 512, 1024}) sols.push_back(solve_terminal(d, G, 0.5));
  double d0 = l1_on_common_grid(sols[0], sols[1]);
  double d1 = l1_on_common_grid(sols[1], sols[2]);
  double d2 = l1_on_common_grid(sols[2], sols[3]);
  // factor climbs toward the asymptotic 2 from below: measured 1.788, 1.862
  CHECK(d0 / d1 >= 1.75);
  CHECK(d1 / d2 >= 1.75);
  CHECK(d1 / d2 > d0 / d1);
  CHECK(d2 <= 4e-4);  // measured 1.84e-4
}

TEST_CASE("mass is conserved to 1e-12 over ten thousand steps") {
  DriftSpec d = catalog("tanh_density", 1, {{"c", 1.0}});
  GridSpec spec = GridSpec::make1d(-16.0, 16.0, 128);
  FpeConfig cfg = FpeConfig::make(spec, 140.625, d);
  REQUIRE(std::abs(140.625 / cfg.dt - 10000.0) <= 1e-6);
  InitialDistribution g1 = InitialDistribution::gaussian({0.0}, 1.0);
  auto traj = fpe_solve(g1, d, cfg, std::vector<double>{140.625});
  double start = from_initial(g1, spec, 0.0).mass();
  CHECK(std::abs(traj.back().second.mass() - start) <= 1e-12);
}

TEST_CASE("atom initials enter through heat smoothing at the first snapshot") {
  InitialDistribution pm = InitialDistribution::point_mass({0.0});
  GridSpec spec = GridSpec::make1d(-16.0, 16.0, 1024);
  FpeConfig cfg = FpeConfig::make(spec, 0.5, catalog("zero"));
  auto traj =
      fpe_solve(pm, catalog("zero"), cfg, std::vector<double>{0.25, 0.5});
  REQUIRE(traj.size() == 2);
  GridDensity smoothed = from_initial(pm, spec, 0.25);
  for (std::uint64_t i = 0; i < spec.size(); ++i)
    CHECK(traj[0].second.value(i) == smoothed.value(i));
  CHECK(l1_distance(traj[1].second, sampled_heat(spec, 0.5)) <= 1e-4);

  CHECK_THROWS_WITH_AS((void)fpe_solve(pm, catalog("zero"), cfg,
                                       std::vector<double>{0.0, 0.5}),
                       doctest::Contains("positive first snapshot"), Error);
}

TEST_CASE("weak residual: exact heat flow leaves only quadrature error") {
  auto build = [&](int G, int J) {
    GridSpec spec = GridSpec::make1d(-16.0, 16.0, G);
    std::vector<std::pair<double, GridDensity>> traj;
    for (int j = 0; j <= J; ++j) {
      double s = 0.5 * j / J;
      traj.emplace_back(s, sampled_heat(spec, 0.5 + s));
    }
    return traj;
  };
  TestFunctionSet set = TestFunctionSet::catalog(1);
  std::vector<double> coarse =
      weak_residual(build(1024, 64), catalog("zero"), set, 0.5);
  std::vector<double> fine =
      weak_residual(build(2048, 128), catalog("zero"), set, 0.5);
  REQUIRE(coarse.size() == 6);
  for (std::size_t f = 0; f < 6; ++f) {
    INFO("probe ", set.functions[f].name);
    CHECK(coarse[f] <= 1e-4);
    CHECK(fine[f] < coarse[f]);
  }

  auto traj = build(1024, 8);
  CHECK_THROWS_WITH_AS((void)weak_residual(traj, catalog("zero"), set, 0.21),
                       doctest::Contains("no snapshot"), Error);
  CHECK_THROWS_AS((void)weak_residual(traj, catalog("zero"), set, 0.0), Error);
  std::vector<std::pair<double, GridDensity>> single(traj.begin(),
                                                     traj.begin() + 1);
  CHECK_THROWS_AS((void)weak_residual(single, catalog("zero"), set, 0.0),
                  Error);

  TestFunction constant;
  constant.name = "one";
  constant.dim = 1;
  constant.value = [](std::span<const double>) { return 1.0; };
  constant.gradient = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
  };
  constant.laplacian = [](std::span<const double>) { return 0.0; };
  TestFunctionSet bad;
  bad.functions.push_back(constant);
  CHECK_THROWS_WITH_AS((void)weak_residual(traj, catalog("zero"), bad, 0.5),
                       doctest::Contains("vanish"), Error);
}

TEST_CASE("weak residual: euler trajectories improve with N") {
  DriftSpec d = catalog("tanh_density", 1, {{"c", 1.0}});
  TestFunctionSet set = TestFunctionSet::catalog(1);
  auto residuals = [&](int N, int G) {
    GridSpec spec = GridSpec::make1d(-16.0, 16.0, G);
    TimeGrid tg = TimeGrid::make(0.5, N);
    std::vector<double> times;
    for (int k = 1; k <= N; ++k) times.push_back(tg.h * k);
    RunResult rr = run(var2, d, spec, tg, times);
    return weak_residual(rr.snapshots, d, set, 0.5);
  };
  std::vector<double> coarse = residuals(128, 2048);
  std::vector<double> fine = residuals(512, 4096);
  for (std::size_t f = 0; f < set.functions.size(); ++f) {
    INFO("probe ", set.functions[f].name);
    CHECK(fine[f] < coarse[f]);
    CHECK(coarse[f] <= 5e-3);
  }
}

TEST_CASE("uniqueness separation: identity, refinement shrink, mismatches") {
  DriftSpec d = catalog("tanh_density", 1, {{"c", 1.0}});
  std::vector<double> times{0.25, 0.5};
  auto solve_at = [&](int G) {
    GridSpec spec = GridSpec::make1d(-16.0, 16.0, G);
    FpeConfig cfg = FpeConfig::make(spec, 0.5, d);
    return fpe_solve(var2, d, cfg, times);
  };
  auto a = solve_at(128), b = solve_at(256), c = solve_at(512);

  auto self = uniqueness_separation(a, a);
  REQUIRE(self.size() == 2);
  CHECK(self[0].first == 0.25);
  CHECK(self[0].second == 0.0);
  CHECK(self[1].second == 0.0);

  auto sep_ab = uniqueness_separation(a, b);
  auto sep_bc = uniqueness_separation(b, c);
  CHECK(sep_bc.back().second <= 0.65 * sep_ab.back().second);
  CHECK(sep_ab.back().second ==
        l1_on_common_grid(a.back().second, b.back().second));

  auto truncated = a;
  truncated.pop_back();
  CHECK_THROWS_WITH_AS((void)uniqueness_separation(truncated, b),
                       doctest::Contains("count"), Error);
  auto shifted = a;
  shifted[0].first = 0.125;
  CHECK_THROWS_WITH_AS((void)uniqueness_separation(shifted, b),
                       doctest::Contains("time"), Error);
}

TEST_CASE("2d: heat accuracy and exact mass balance") {
  InitialDistribution g2 = InitialDistribution::gaussian({0.0, 0.0}, 1.0);
  double lo[2] = {-16, -16}, hi[2] = {16, 16};
  std::uint64_t cells[2] = {256, 256};
  GridSpec spec = GridSpec::make(2, lo, hi, cells);
  FpeConfig cfg = FpeConfig::make(spec, 0.25, catalog("zero", 2));
  auto traj = fpe_solve(g2, catalog("zero", 2), cfg, std::vector<double>{0.25});
  CHECK(l1_distance(traj.back().second, sampled_heat(spec, 0.75)) <= 5e-4);
  double start = from_initial(g2, spec, 0.0).mass();
  CHECK(std::abs(traj.back().second.mass() - start) <= 1e-12);
}
