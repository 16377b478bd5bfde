#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ddsde/config.hpp"
#include "ddsde/errors.hpp"
#include "ddsde/euler_density.hpp"
#include "ddsde/experiment.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/initial.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace ddsde;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

errc thrown_code(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<errc>(0);
}

std::string thrown_message(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::uint64_t checksum_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return fnv1a64(bytes.data(), bytes.size());
}

json read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  REQUIRE(in.good());
  json m;
  in >> m;
  return m;
}

// relative file -> checksum string, as recorded by the run
std::map<std::string, std::string> artifact_map(const json& manifest) {
  std::map<std::string, std::string> out;
  for (const json& a : manifest.at("artifacts"))
    out[a.at("file")] = a.at("checksum");
  return out;
}

ExperimentConfig shipped(const std::string& name) {
  return load_config(std::string(DDSDE_CONFIG_DIR) + "/" + name);
}

}  // namespace

TEST_CASE("toml values keep their kinds through a round trip") {
  std::string text =
      "# experiment description\n"
      "[alpha]\n"
      "count = 42\n"
      "scale = 0.0625\n"
      "tiny = 1e-06\n"
      "label = \"box # 7\"  # trailing comment\n"
      "quoted = \"a\\\"b\\nc\"\n"
      "on = true\n"
      "steps = [8, 16, 32]\n"
      "times = [0.5, 1.0]\n"
      "names = [\"x\", \"y\"]\n"
      "empty = []\n"
      "\n"
      "[alpha.params]\n"
      "c = 1.5\n";
  TomlDoc doc = parse_toml(text);
  REQUIRE(doc.tables.size() == 2);
  const TomlTable* alpha = doc.find("alpha");
  REQUIRE(alpha != nullptr);
  CHECK(alpha->find("count")->kind == TomlValue::Kind::integer);
  CHECK(alpha->find("count")->i == 42);
  CHECK(alpha->find("scale")->kind == TomlValue::Kind::real);
  CHECK(alpha->find("scale")->d == 0.0625);
  CHECK(alpha->find("tiny")->d == 1e-6);
  CHECK(alpha->find("label")->s == "box # 7");
  CHECK(alpha->find("quoted")->s == "a\"b\nc");
  CHECK(alpha->find("on")->b == true);
  CHECK(alpha->find("steps")->items.size() == 3);
  CHECK(alpha->find("steps")->items[1].kind == TomlValue::Kind::integer);
  CHECK(alpha->find("times")->items[0].kind == TomlValue::Kind::real);
  CHECK(alpha->find("names")->items[1].s == "y");
  CHECK(alpha->find("empty")->items.empty());
  CHECK(doc.find("alpha.params")->find("c")->d == 1.5);

  std::string emitted = serialize_toml(doc);
  TomlDoc again = parse_toml(emitted);
  CHECK(serialize_toml(again) == emitted);
  CHECK(again.find("alpha")->find("count")->kind == TomlValue::Kind::integer);
  CHECK(again.find("alpha")->find("scale")->kind == TomlValue::Kind::real);
  CHECK(again.find("alpha")->find("scale")->d == 0.0625);
  CHECK(*again.find("alpha")->find("quoted") ==
        *alpha->find("quoted"));
}

TEST_CASE("toml parse errors carry line numbers") {
  auto message = [](const std::string& text) {
    return thrown_message([&] { parse_toml(text); });
  };
  CHECK(thrown_code([] { parse_toml("a = 1\n"); }) == errc::config_error);
  CHECK(message("a = 1\n").find("line 1") != std::string::npos);
  CHECK(message("a = 1\n").find("outside any table") != std::string::npos);
  CHECK(message("[t]\nok = 1\n[broken\n").find("line 3") != std::string::npos);
  CHECK(message("[t]\nx = \"open\n").find("unterminated") != std::string::npos);
  CHECK(message("[t]\nx = [[1]]\n").find("nested") != std::string::npos);
  CHECK(message("[t]\nx = 1\nx = 2\n").find("duplicate key") !=
        std::string::npos);
  CHECK(message("[t]\n[t]\n").find("duplicate table") != std::string::npos);
  CHECK(message("[t]\nx = 0x10\n").find("cannot parse value") !=
        std::string::npos);
}

TEST_CASE("shipped configs round trip and hash stably") {
  for (const char* name : {"zero_drift.toml", "tanh_convergence.toml"}) {
    CAPTURE(name);
    ExperimentConfig cfg = shipped(name);
    validate_config(cfg);
    ExperimentConfig again = parse_config(serialize_config(cfg));
    CHECK(again == cfg);
    CHECK(config_hash(again) == config_hash(cfg));
  }
  ExperimentConfig a = shipped("zero_drift.toml");
  ExperimentConfig b = a;
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) != config_hash(b));
  CHECK_FALSE(a == b);
}

TEST_CASE("mapping rejects unknown tables and keys in one message") {
  std::string text =
      "[experiment]\n"
      "name = \"x\"\n"
      "whracky = 3\n"
      "[wrongtable]\n"
      "a = 1\n"
      "[grid]\n"
      "dim = \"one\"\n";
  std::string msg = thrown_message([&] { parse_config(text); });
  CHECK(thrown_code([&] { parse_config(text); }) == errc::config_error);
  CHECK(msg.find("[experiment].whracky") != std::string::npos);
  CHECK(msg.find("[wrongtable]: unknown table") != std::string::npos);
  CHECK(msg.find("[grid].dim") != std::string::npos);
}

TEST_CASE("validation accumulates field errors across sections") {
  std::string text =
      "[experiment]\n"
      "name = \"bad\"\n"
      "out_dir = \"runs/bad\"\n"
      "engines = [\"density\", \"warp\"]\n"
      "[drift]\n"
      "name = \"nope\"\n"
      "[initial]\n"
      "kind = \"point_mass\"\n"
      "mean = [0.0]\n"
      "[grid]\n"
      "dim = 1\n"
      "lower = [-8.0]\n"
      "upper = [8.0]\n"
      "cells = [100]\n"
      "[time]\n"
      "horizon = 1.0\n"
      "steps = [16]\n"
      "[snapshots]\n"
      "times = [0.3]\n"
      "[diagnostics]\n"
      "run = [\"frobnicate\"]\n";
  std::string msg = thrown_message([&] { parse_config(text); });
  CHECK(thrown_code([&] { parse_config(text); }) == errc::config_error);
  CHECK(msg.find("[experiment].engines") != std::string::npos);
  CHECK(msg.find("[drift].name") != std::string::npos);
  CHECK(msg.find("catalog") != std::string::npos);
  CHECK(msg.find("[grid].cells") != std::string::npos);
  CHECK(msg.find("[snapshots].times") != std::string::npos);
  CHECK(msg.find("[diagnostics].run") != std::string::npos);
}

TEST_CASE("zero drift run writes a passing manifest with exact artifacts") {
  fs::path dir = fresh_dir("ddsde_exp_zero");
  RunOverrides ov;
  ov.out_dir = dir.string();
  ExperimentConfig cfg = shipped("zero_drift.toml");
  RunOutcome outcome = run_experiment(cfg, DDSDE_CONFIG_DIR, ov);
  CHECK(outcome.exit_code == 0);
  CHECK(outcome.failed_claims.empty());
  CHECK(outcome.summary.find("[PASS] exactness") != std::string::npos);

  json manifest = read_manifest(dir);
  CHECK(manifest.at("pass") == true);
  CHECK(manifest.at("tool") == kToolVersion);
  CHECK(manifest.at("claims").size() == 5);
  for (const json& claim : manifest.at("claims")) CHECK(claim.at("pass") == true);

  // every artifact exists and matches its recorded checksum
  auto artifacts = artifact_map(manifest);
  CHECK(artifacts.size() > 20);
  for (const auto& [rel, sum] : artifacts) {
    CAPTURE(rel);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(checksum_file(dir / rel)));
    CHECK(sum == buf);
  }

  // terminal law equals the exact heat flow
  GridDensity terminal = load_grid((dir / "n_0064/density_015.ddg").string());
  GridDensity heat = from_initial(InitialDistribution::point_mass({0.0}),
                                  cfg.make_grid(), cfg.time.horizon);
  CHECK(l1_distance(terminal, heat) <= 1e-6);

  const json& run0 = manifest.at("runs").at(0);
  CHECK(run0.at("engine") == "density");
  CHECK(run0.at("clipped_mass_max").get<double>() <= 1e-12);
}

TEST_CASE("reruns reproduce every artifact checksum") {
  fs::path dir = fresh_dir("ddsde_exp_repro");
  RunOverrides ov;
  ov.out_dir = dir.string();
  ExperimentConfig cfg = shipped("zero_drift.toml");
  run_experiment(cfg, DDSDE_CONFIG_DIR, ov);
  auto first = artifact_map(read_manifest(dir));
  run_experiment(cfg, DDSDE_CONFIG_DIR, ov);
  auto second = artifact_map(read_manifest(dir));
  CHECK(first == second);

  // a second directory differs only in the config copy (out_dir is inside it)
  fs::path other = fresh_dir("ddsde_exp_repro_b");
  ov.out_dir = other.string();
  run_experiment(cfg, DDSDE_CONFIG_DIR, ov);
  auto elsewhere = artifact_map(read_manifest(other));
  REQUIRE(elsewhere.size() == first.size());
  for (const auto& [rel, sum] : first) {
    if (rel == "config.toml") continue;
    CAPTURE(rel);
    CHECK(elsewhere.at(rel) == sum);
  }
}

TEST_CASE("self comparison is exact and weak residual carries over") {
  fs::path dir = fresh_dir("ddsde_exp_cmp");
  RunOverrides ov;
  ov.out_dir = dir.string();
  run_experiment(shipped("zero_drift.toml"), DDSDE_CONFIG_DIR, ov);

  CompareOutcome l1 = compare_runs(dir.string(), dir.string(), "l1");
  CHECK(l1.exit_code == 0);
  CHECK(l1.value == 0.0);
  CompareOutcome sup = compare_runs(dir.string(), dir.string(), "sup");
  CHECK(sup.exit_code == 0);
  CHECK(sup.value == 0.0);
  CompareOutcome weak =
      compare_runs(dir.string(), dir.string(), "weak-residual");
  CHECK(weak.exit_code == 0);
  CHECK(weak.value <= 5e-3);
  CHECK(weak.value > 0.0);

  CHECK(thrown_code([&] {
          compare_runs(dir.string(), dir.string(), "chebyshev");
        }) == errc::invalid_argument);
}

TEST_CASE("full tanh study passes and reports convergence slopes") {
  fs::path dir = fresh_dir("ddsde_exp_tanh");
  RunOverrides ov;
  ov.out_dir = dir.string();
  RunOutcome outcome =
      run_experiment(shipped("tanh_convergence.toml"), DDSDE_CONFIG_DIR, ov);
  CHECK(outcome.exit_code == 0);

  json manifest = read_manifest(dir);
  for (const json& claim : manifest.at("claims")) {
    CAPTURE(claim.at("claim").get<std::string>());
    CHECK(claim.at("pass") == true);
  }

  // the L1 curve decreases and its csv landed next to the manifest
  std::ifstream curve(dir / "l1_convergence.csv");
  REQUIRE(curve.good());
  std::string header;
  std::getline(curve, header);
  CHECK(header == "abscissa,ordinate");
  std::vector<double> ordinates;
  for (std::string line; std::getline(curve, line);)
    ordinates.push_back(std::strtod(line.c_str() + line.find(',') + 1, nullptr));
  REQUIRE(ordinates.size() == 5);
  for (std::size_t i = 1; i < ordinates.size(); ++i)
    CHECK(ordinates[i] < ordinates[i - 1]);

  std::string report = report_runs({dir.string()});
  CHECK(report.find("[PASS] l1_convergence") != std::string::npos);
  CHECK(report.find("slope") != std::string::npos);
  CHECK(report.find("overall: PASS") != std::string::npos);
  CHECK(report.find("checksums verified") != std::string::npos);

  CompareOutcome weak =
      compare_runs(dir.string(), dir.string(), "weak-residual");
  CHECK(weak.exit_code == 0);
}

TEST_CASE("an unstable sweep fails the run and the report names the worst N") {
  ExperimentConfig cfg = shipped("tanh_convergence.toml");
  cfg.name = "tanh_unstable";
  cfg.engines = {"density"};
  cfg.grid.cells = {1024};
  cfg.time.steps = {8, 16, 32, 64};
  cfg.diagnostics.run = {"hoelder_time"};
  cfg.tolerances.stability = 1.00001;
  fs::path dir = fresh_dir("ddsde_exp_fail");
  cfg.out_dir = dir.string();
  validate_config(cfg);

  RunOutcome outcome = run_experiment(cfg, DDSDE_CONFIG_DIR);
  CHECK(outcome.exit_code == 1);
  REQUIRE(outcome.failed_claims.size() == 1);
  CHECK(outcome.failed_claims[0] == "hoelder_time");
  CHECK(outcome.summary.find("[FAIL] hoelder_time") != std::string::npos);

  std::string report = report_runs({dir.string()});
  CHECK(report.find("[FAIL] hoelder_time") != std::string::npos);
  CHECK(report.find("worst N = 8") != std::string::npos);
  CHECK(report.find("overall: FAIL") != std::string::npos);
}

TEST_CASE("overrides revalidate before running") {
  ExperimentConfig cfg = shipped("zero_drift.toml");
  RunOverrides ov;
  ov.out_dir = (fs::temp_directory_path() / "ddsde_exp_badmode").string();
  ov.density_source = "bogus";
  std::string msg = thrown_message([&] { run_experiment(cfg, ".", ov); });
  CHECK(thrown_code([&] { run_experiment(cfg, ".", ov); }) ==
        errc::config_error);
  CHECK(msg.find("[particles].mode") != std::string::npos);
}

TEST_CASE("corrupt artifacts are caught by checksum") {
  fs::path dir = fresh_dir("ddsde_exp_intact");
  RunOverrides ov;
  ov.out_dir = dir.string();
  run_experiment(shipped("zero_drift.toml"), DDSDE_CONFIG_DIR, ov);

  fs::path broken = fresh_dir("ddsde_exp_broken");
  fs::copy(dir, broken, fs::copy_options::recursive);
  {
    std::fstream f(broken / "n_0064/density_015.ddg",
                   std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekg(200);
    char byte = 0;
    f.read(&byte, 1);
    f.seekp(200);
    byte = static_cast<char>(byte ^ 0x40);
    f.write(&byte, 1);
  }
  std::string msg = thrown_message(
      [&] { compare_runs(dir.string(), broken.string(), "l1"); });
  CHECK(thrown_code([&] {
          compare_runs(dir.string(), broken.string(), "l1");
        }) == errc::data_mismatch);
  CHECK(msg.find("checksum") != std::string::npos);
  CHECK(msg.find("does not match manifest") != std::string::npos);

  CHECK(thrown_code([&] { report_runs({broken.string()}); }) ==
        errc::data_mismatch);

  CHECK(thrown_code([&] { report_runs({"/nonexistent_ddsde_run"}); }) ==
        errc::io_error);
  fs::path garbled = fresh_dir("ddsde_exp_garbled");
  fs::create_directories(garbled);
  std::ofstream(garbled / "manifest.json") << "{not json";
  std::string corrupt_msg =
      thrown_message([&] { report_runs({garbled.string()}); });
  CHECK(corrupt_msg.find("corrupt manifest") != std::string::npos);
}
