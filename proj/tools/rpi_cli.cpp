#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rpi/config.hpp"
#include "rpi/trainer.hpp"
#include "rpi/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfigError = 2;

rpi::ExperimentConfig build_config(const std::string& path, const std::vector<std::string>& overrides) {
  rpi::ExperimentConfig config;
  if (!path.empty()) config = rpi::load_config_file(path);
  for (const std::string& o : overrides) rpi::apply_override(config, o);
  rpi::validate(config);
  return config;
}

void print_summary(const std::string& label, std::span<const rpi::TrialResult> trials) {
  const rpi::Aggregate a = rpi::aggregate_final_best(trials);
  std::printf("%s: final best return %.4f +- %.4f over %zu trials\n", label.c_str(), a.mean, a.stderr_,
              trials.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust policy improvement experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";

  CLI::App* run = app.add_subcommand("run", "Train and write metrics.csv, selections.csv, effective_config.txt");
  run->add_option("--config", config_path, "Config file (key = value)");
  run->add_option("--set", overrides, "Override key=value")->allow_extra_args(false);
  run->add_option("--out", out_dir, "Output directory");

  double tolerance = 1e-9;
  bool mutate = false;
  CLI::App* verify = app.add_subcommand("verify", "Check exact-theory invariants on the fixtures");
  verify->add_option("--tolerance", tolerance, "Absolute tolerance of the identity checks");
  verify->add_flag("--mutate-f-plus", mutate, "Shift the f+ table by one state (self-test)");

  std::string kind;
  CLI::App* ablate = app.add_subcommand("ablate", "Run a matched-seed ablation");
  ablate->add_option("--kind", kind, "raps_vs_aps | lcb_ucb_vs_mean | threshold_sweep | oracle_count | empty_oracle")
      ->required();
  ablate->add_option("--config", config_path, "Base config file");
  ablate->add_option("--set", overrides, "Override key=value")->allow_extra_args(false);
  ablate->add_option("--out", out_dir, "Output directory");

  std::string grid_path;
  CLI::App* sweep = app.add_subcommand("sweep", "Run every combination of a grid file");
  sweep->add_option("--grid", grid_path, "Grid file; alternatives separated by |")->required();
  sweep->add_option("--config", config_path, "Base config file");
  sweep->add_option("--set", overrides, "Override key=value")->allow_extra_args(false);
  sweep->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (*verify) {
      rpi::VerifyOptions options;
      options.tolerance = tolerance;
      options.mutate_f_plus = mutate;
      const rpi::VerifyReport report = rpi::verify(options);
      for (const rpi::Check& c : report.checks) {
        std::printf("[%s] %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                    c.detail.c_str());
      }
      std::printf("%zu/%zu checks passed\n", report.passed(), report.checks.size());
      return report.all_passed() ? kExitOk : kExitVerifyFailed;
    }
    if (*run) {
      const rpi::ExperimentConfig config = build_config(config_path, overrides);
      const std::vector<rpi::TrialResult> trials = rpi::run_experiment(config);
      rpi::write_run_outputs(out_dir, config, trials);
      print_summary(config.algorithm, trials);
      return kExitOk;
    }
    if (*ablate) {
      const rpi::ExperimentConfig base = build_config(config_path, overrides);
      const auto results = rpi::run_variants(base, rpi::ablation_variants(kind));
      rpi::write_variant_csvs(out_dir, results);
      for (const auto& r : results) print_summary(r.variant.name, r.trials);
      return kExitOk;
    }
    if (*sweep) {
      const rpi::ExperimentConfig base = build_config(config_path, overrides);
      std::ifstream in(grid_path);
      if (!in) throw rpi::ConfigError("cannot open grid '" + grid_path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      const auto results = rpi::run_variants(base, rpi::grid_variants(ss.str()));
      rpi::write_variant_csvs(out_dir, results);
      for (const auto& r : results) print_summary(r.variant.name, r.trials);
      return kExitOk;
    }
  } catch (const rpi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError + 1;
  }
  return kExitOk;
}
