#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "ddsde/drift.hpp"
#include "ddsde/errors.hpp"
#include "ddsde/expr.hpp"

using namespace ddsde;

namespace {

double eval1(const DriftSpec& b, double t, double x, double u) {
  double out = 0.0;
  b.eval(t, std::span<const double>(&x, 1), u, std::span<double>(&out, 1));
  return out;
}

}  // namespace

TEST_CASE("catalog entries evaluate to their closed forms") {
  DriftSpec zero = catalog("zero");
  CHECK(eval1(zero, 0.3, 1.0, 0.5) == 0.0);
  CHECK(zero.bound == 0.0);
  CHECK(zero.lipschitz_u.value() == 0.0);

  DriftSpec c = catalog("constant", 1, {{"c", -0.7}});
  CHECK(eval1(c, 0.0, 5.0, 2.0) == -0.7);
  CHECK(c.bound == doctest::Approx(0.7));

  DriftSpec th = catalog("tanh_density", 1, {{"c", 2.0}});
  CHECK(eval1(th, 0.1, -3.0, 0.25) == doctest::Approx(2.0 * std::tanh(0.25)));
  CHECK(th.bound == doctest::Approx(2.0));
  CHECK(th.lipschitz_u.value() == doctest::Approx(2.0));

  DriftSpec sat = catalog("saturated_linear", 1, {{"c", 1.5}, {"u_max", 2.0}});
  CHECK(eval1(sat, 0.0, 0.0, 1.0) == doctest::Approx(1.5));
  CHECK(eval1(sat, 0.0, 0.0, 5.0) == doctest::Approx(3.0));
  CHECK(sat.bound == doctest::Approx(3.0));

  DriftSpec ramp = catalog("time_ramp", 1, {{"c", 1.0}, {"T", 2.0}});
  CHECK(eval1(ramp, 0.5, 0.0, 100.0) == doctest::Approx(0.5 * std::tanh(100.0)));
  CHECK(ramp.bound == doctest::Approx(2.0));

  DriftSpec ind = catalog("indicator", 1, {{"c", 1.0}});
  CHECK(ind.x_continuous == false);
  CHECK(eval1(ind, 0.0, 1.0, 1.0) == doctest::Approx(std::tanh(1.0)));
  CHECK(eval1(ind, 0.0, -1.0, 1.0) == 0.0);
}

TEST_CASE("unknown names and unknown params are config errors naming the catalog") {
  CHECK_THROWS_WITH_AS((void)catalog("warp_drive"), doctest::Contains("catalog"),
                       Error);
  CHECK_THROWS_WITH_AS((void)catalog("warp_drive"),
                       doctest::Contains("tanh_density"), Error);
  CHECK_THROWS_WITH_AS((void)catalog("zero", 1, {{"c", 1.0}}),
                       doctest::Contains("parameter"), Error);
  CHECK(catalog("tanh_density", 3).dim == 3);
  CHECK_THROWS_AS((void)catalog("tanh_density", 4), Error);
}

TEST_CASE("every catalog entry passes its declared validators") {
  for (const std::string& name : catalog_names()) {
    DriftSpec b = catalog(name);
    ValidationReport r = validate_bounded(b, 20000);
    INFO(name, ": ", r.detail);
    CHECK(r.pass);
    ValidationReport l = validate_lipschitz_u(b, 20000);
    INFO(name, ": ", l.detail);
    CHECK(l.pass);
  }
}

TEST_CASE("bound violation is reported with the violating input") {
  // declared bound 1 but b = u e1 reaches u_max = 4 in the sweep
  DriftSpec b = drift_from_expressions({"u"}, 1, 1.0, 1.0);
  ValidationReport r = validate_bounded(b, 20000);
  CHECK(!r.pass);
  CHECK(r.observed > 1.0);
  CHECK(r.detail.find("u=") != std::string::npos);
  CHECK(r.detail.find("x=") != std::string::npos);
  CHECK(r.detail.find("t=") != std::string::npos);
}

TEST_CASE("lipschitz violation is reported near the kink") {
  // step in u: |b(u)-b(u2)| / |u-u2| blows up across u = 1
  DriftSpec b = drift_from_expressions({"step(u - 1)"}, 1, 1.0, 0.5);
  ValidationReport r = validate_lipschitz_u(b, 50000);
  CHECK(!r.pass);
  CHECK(r.observed > 0.5);
  CHECK(r.detail.find("u=") != std::string::npos);
}

TEST_CASE("lipschitz validation without a declared constant is not applicable") {
  DriftSpec b = drift_from_expressions({"sin(u)"}, 1, 1.0, std::nullopt);
  CHECK_THROWS_WITH_AS((void)validate_lipschitz_u(b, 100),
                       doctest::Contains("not_applicable"), Error);
}

TEST_CASE("non-finite drift output is rejected with the input location") {
  DriftSpec b = drift_from_expressions({"1 / (x1 - 1)"}, 1, 100.0, std::nullopt);
  b.u_cap = 4.0;
  ValidationReport r = validate_bounded(b, 20000);
  // either a non-finite hit or a bound violation near the pole; both fail
  CHECK(!r.pass);
}

TEST_CASE("sweep is deterministic and has the prefix property") {
  DriftSpec b = catalog("tanh_density");
  ValidationReport a1 = validate_bounded(b, 5000);
  ValidationReport a2 = validate_bounded(b, 5000);
  CHECK(a1.observed == a2.observed);
  ValidationReport a4 = validate_bounded(b, 10000);
  CHECK(a4.observed >= a1.observed);
}

TEST_CASE("expression drift handles all variables and dims") {
  DriftSpec b2 = drift_from_expressions({"t * x2", "u - x1"}, 2, 100.0, 1.0);
  double x[2] = {3.0, 5.0};
  double out[2] = {0.0, 0.0};
  b2.eval(0.5, std::span<const double>(x, 2), 2.0, std::span<double>(out, 2));
  CHECK(out[0] == doctest::Approx(2.5));
  CHECK(out[1] == doctest::Approx(-1.0));

  DriftSpec b3 = drift_from_expressions({"0", "0", "min(u, 2)"}, 3, 2.0, 1.0);
  double x3[3] = {0.0, 0.0, 0.0};
  double out3[3] = {1.0, 1.0, 1.0};
  b3.eval(0.0, std::span<const double>(x3, 3), 7.0, std::span<double>(out3, 3));
  CHECK(out3[0] == 0.0);
  CHECK(out3[2] == doctest::Approx(2.0));

  CHECK_THROWS_AS((void)drift_from_expressions({"u", "u", "u"}, 2, 1.0, 1.0),
                  Error);
  CHECK_THROWS_AS((void)drift_from_expressions({}, 1, 1.0, 1.0), Error);
}

TEST_CASE("u is clamped to [0, u_cap] before evaluation") {
  DriftSpec b = drift_from_expressions({"u"}, 1, 10.0, 1.0, true, 3.0);
  CHECK(eval1(b, 0.0, 0.0, -5.0) == 0.0);
  CHECK(eval1(b, 0.0, 0.0, 8.0) == doctest::Approx(3.0));
}

TEST_CASE("expression parser: grammar, precedence, errors") {
  Expr e = Expr::parse("2 + 3 * 4 ^ 2 - 1");
  double vars[5] = {0, 0, 0, 0, 0};
  CHECK(e.eval(vars) == doctest::Approx(49.0));
  CHECK(Expr::parse("2 ^ 3 ^ 2").eval(vars) == doctest::Approx(512.0));
  CHECK(Expr::parse("-2 ^ 2").eval(vars) == doctest::Approx(-4.0));
  CHECK(Expr::parse("pi").eval(vars) == doctest::Approx(3.14159265358979));
  vars[0] = 0.5;
  vars[4] = 2.0;
  CHECK(Expr::parse("exp(-t) * u").eval(vars) == doctest::Approx(2.0 * std::exp(-0.5)));
  CHECK(Expr::parse("max(min(u, 1), 0)").eval(vars) == doctest::Approx(1.0));
  CHECK(Expr::parse("abs(-u)").eval(vars) == doctest::Approx(2.0));
  CHECK(Expr::parse("tanh(u) + sqrt(u)").eval(vars) ==
        doctest::Approx(std::tanh(2.0) + std::sqrt(2.0)));

  CHECK_THROWS_WITH_AS((void)Expr::parse("2 +"), doctest::Contains("position"),
                       Error);
  CHECK_THROWS_AS((void)Expr::parse("frobnicate(u)"), Error);
  CHECK_THROWS_AS((void)Expr::parse("(1 + 2"), Error);
  CHECK_THROWS_AS((void)Expr::parse("1 2"), Error);
  CHECK_THROWS_AS((void)Expr::parse(""), Error);
  CHECK_THROWS_AS((void)Expr::parse("x4"), Error);
  CHECK_THROWS_AS((void)Expr::parse("min(1)"), Error);
}

TEST_CASE("catalog evaluation is pure: repeated calls are bit identical") {
  DriftSpec b = catalog("tanh_density");
  double v1 = eval1(b, 0.37, -2.5, 1.7);
  for (int i = 0; i < 100; ++i) CHECK(eval1(b, 0.37, -2.5, 1.7) == v1);
}
