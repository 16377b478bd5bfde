#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ddsde.h"

namespace {

int report_error() {
  std::fprintf(stderr, "error: %s\n", ddsde_last_error());
  return 2;
}

struct ConfigHandle {
  ddsde_config* ptr = nullptr;
  ~ConfigHandle() { ddsde_config_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density-dependent SDE laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string density_source;
  std::string metric = "l1";
  std::string dir_a;
  std::string dir_b;
  std::vector<std::string> report_dirs;
  std::uint64_t seed = 0;
  int threads = -1;

  CLI::App* cmd_run =
      app.add_subcommand("run", "run engines and diagnostics from a config");
  cmd_run->add_option("--config", config_path, "experiment config file")
      ->required();
  cmd_run->add_option("--out", out_dir, "override the output directory");
  CLI::Option* seed_opt =
      cmd_run->add_option("--seed", seed, "override the particle seed");
  cmd_run->add_option("--density-source", density_source,
                      "particle feedback mode: kde or coupled");
  cmd_run->add_option("--threads", threads,
                      "worker thread count (0 = default)");

  CLI::App* cmd_validate =
      app.add_subcommand("validate", "check a config file and exit");
  cmd_validate->add_option("--config", config_path, "experiment config file")
      ->required();

  CLI::App* cmd_compare =
      app.add_subcommand("compare", "compare two completed run directories");
  cmd_compare->add_option("run_a", dir_a, "first run directory")->required();
  cmd_compare->add_option("run_b", dir_b, "second run directory")->required();
  cmd_compare->add_option("--metric", metric, "l1, sup, or weak-residual");

  CLI::App* cmd_report =
      app.add_subcommand("report", "summarize completed run directories");
  cmd_report->add_option("dirs", report_dirs, "run directories")->required();
  cmd_report->add_option("--out", out_dir, "write the report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*cmd_validate) {
    ConfigHandle cfg;
    if (ddsde_config_load(config_path.c_str(), &cfg.ptr)) return report_error();
    std::printf("config OK: %s\n", ddsde_config_name(cfg.ptr));
    return 0;
  }

  if (*cmd_run) {
    if (threads >= 0 && ddsde_set_threads(threads)) return report_error();
    ConfigHandle cfg;
    if (ddsde_config_load(config_path.c_str(), &cfg.ptr)) return report_error();
    if (!out_dir.empty() && ddsde_config_set_out_dir(cfg.ptr, out_dir.c_str()))
      return report_error();
    if (seed_opt->count() > 0 && ddsde_config_set_seed(cfg.ptr, seed))
      return report_error();
    if (!density_source.empty() &&
        ddsde_config_set_density_source(cfg.ptr, density_source.c_str()))
      return report_error();
    int failed = 0;
    char* summary = nullptr;
    if (ddsde_run_experiment(cfg.ptr, &failed, &summary))
      return report_error();
    std::fputs(summary, stdout);
    ddsde_string_free(summary);
    return failed == 0 ? 0 : 1;
  }

  if (*cmd_compare) {
    double value = 0.0;
    double threshold = 0.0;
    int pass = 0;
    if (ddsde_compare(dir_a.c_str(), dir_b.c_str(), metric.c_str(), &value,
                      &threshold, &pass))
      return report_error();
    std::printf("%s: value %.6g vs threshold %.6g: %s\n", metric.c_str(),
                value, threshold, pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
  }

  if (*cmd_report) {
    std::vector<const char*> dirs;
    for (const std::string& d : report_dirs) dirs.push_back(d.c_str());
    char* text = nullptr;
    if (ddsde_report(dirs.data(), dirs.size(), &text)) return report_error();
    if (out_dir.empty()) {
      std::fputs(text, stdout);
    } else {
      std::FILE* f = std::fopen(out_dir.c_str(), "wb");
      if (!f) {
        std::fprintf(stderr, "error: cannot open '%s'\n", out_dir.c_str());
        ddsde_string_free(text);
        return 2;
      }
      std::fputs(text, f);
      std::fclose(f);
    }
    ddsde_string_free(text);
    return 0;
  }

  return 2;
}
