#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "rpi/config.hpp"
#include "rpi/trainer.hpp"

using namespace rpi;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small(const std::string& algorithm, const std::string& env = "chain-3") {
  ExperimentConfig c;
  c.algorithm = algorithm;
  c.env = env;
  c.rounds = 3;
  c.trials = 2;
  c.learner_buffer = 64;
  c.hidden = {16};
  return c;
}

std::string metrics_text(const std::vector<TrialResult>& trials) {
  std::ostringstream out;
  write_metrics_csv(out, trials);
  return out.str();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rpi_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RPI_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config text parsing") {
  const std::string text =
      "# experiment\n"
      "[run]\n"
      "algorithm = maps   ; trailing comment\n"
      "env = \"gridworld-5\"\n"
      "hidden = 32,32\n"
      "gamma = 0.99\n"
      "lambda = auto\n"
      "normalize_advantages = true\n";
  const ExperimentConfig c = load_config_text(text);
  CHECK(c.algorithm == "maps");
  CHECK(c.env == "gridworld-5");
  CHECK(c.hidden == std::vector<std::size_t>{32, 32});
  CHECK(c.gamma == 0.99);
  CHECK_FALSE(c.lambda.has_value());
  CHECK(c.normalize_advantages);
  CHECK(c.rounds == 100);

  CHECK_THROWS_AS(load_config_text("colour = blue\n"), ConfigError);
  CHECK_THROWS_AS(load_config_text("rounds = many\n"), ConfigError);
  CHECK_THROWS_AS(load_config_text("rounds 5\n"), ConfigError);
  CHECK_THROWS_AS(load_config_text("hidden = 32,0\n"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/rpi.cfg"), ConfigError);

  ExperimentConfig o;
  apply_override(o, "rounds=7");
  CHECK(o.rounds == 7);
  CHECK_THROWS_AS(apply_override(o, "rounds"), ConfigError);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(validate(ExperimentConfig{}));
  auto invalid = [](const std::string& assignment) {
    ExperimentConfig c;
    apply_override(c, assignment);
    CHECK_THROWS_AS(validate(c), ConfigError);
  };
  invalid("rounds=0");
  invalid("trials=0");
  invalid("gamma=1.5");
  invalid("lambda=-0.1");
  invalid("threshold=-1");
  invalid("env=cartpole");
  invalid("oracles=regional9");
  invalid("algorithm=sac");
  invalid("lr=0");
  // Imitation-style algorithms need oracles; pointmass has none.
  ExperimentConfig c;
  c.algorithm = "max_agg";
  c.env = "pointmass";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.algorithm = "ppo_gae";
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("effective config round-trips") {
  ExperimentConfig c;
  apply_override(c, "algorithm=mamba");
  apply_override(c, "gamma=0.9");
  apply_override(c, "hidden=8,4");
  const std::string text = effective_config_text(c);
  CHECK(effective_config_text(load_config_text(text)) == text);
  for (const std::string& key : config_keys()) CHECK(text.find(key + " = ") != std::string::npos);
}

TEST_CASE("round plans per algorithm") {
  ExperimentConfig c;
  c.rounds = 10;
  const RoundPlan rpi_plan = plan_round(c, 1);
  CHECK(rpi_plan.rule == SelectionRule::kRaps);
  CHECK(rpi_plan.baseline == BaselineRule::kFPlusHat);
  CHECK(rpi_plan.gamma == 1.0);
  CHECK(rpi_plan.lambda == 0.9);
  CHECK(value_discount(c) == 1.0);

  c.algorithm = "ppo_gae";
  CHECK(plan_round(c, 1).rule == SelectionRule::kLearnerOnly);
  CHECK(plan_round(c, 1).baseline == BaselineRule::kLearnerValue);
  CHECK(plan_round(c, 1).gamma == 0.995);
  CHECK(value_discount(c) == 0.995);

  c.algorithm = "max_agg";
  CHECK(plan_round(c, 1).rule == SelectionRule::kUniformOracle);
  CHECK(plan_round(c, 1).lambda == 0.0);

  c.algorithm = "loki";
  CHECK(plan_round(c, 5).rule == SelectionRule::kUniformOracle);
  CHECK(plan_round(c, 6).rule == SelectionRule::kLearnerOnly);

  c.algorithm = "mamba";
  c.mamba_lambda = 0.7;
  CHECK(plan_round(c, 1).lambda == 0.7);

  c.algorithm = "maps";
  CHECK(plan_round(c, 1).rule == SelectionRule::kAps);

  c.selection = "mean";
  c.lambda = 0.3;
  CHECK(plan_round(c, 1).rule == SelectionRule::kMean);
  CHECK(plan_round(c, 1).lambda == 0.3);
}

TEST_CASE("one round gives one row per trial") {
  ExperimentConfig c = small("rpi");
  c.rounds = 1;
  c.trials = 3;
  const auto trials = run_experiment(c);
  REQUIRE(trials.size() == 3);
  for (const TrialResult& t : trials) CHECK(t.rows.size() == 1);
  const std::string csv = metrics_text(trials);
  CHECK(csv.rfind("# schema: rpi-metrics/1\n", 0) == 0);
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 2 + 3);
}

TEST_CASE("runs are deterministic and thread count does not matter") {
  for (const char* alg : {"rpi", "ppo_gae", "max_agg", "loki", "mamba", "maps"}) {
    ExperimentConfig c = small(alg, "gridworld-5");
    const std::string a = metrics_text(run_experiment(c));
    const std::string b = metrics_text(run_experiment(c));
    CHECK(a == b);
    c.threads = 2;
    CHECK(metrics_text(run_experiment(c)) == a);
  }
}

TEST_CASE("metrics rows are well formed") {
  const ExperimentConfig c = small("rpi", "gridworld-5");
  const TrialResult t = run_trial(c, 1);
  CHECK(t.seed == c.seed + 1);
  CHECK(t.num_oracles == 3);
  std::size_t last = t.pretrain_interactions;
  double best = -1e300;
  for (const MetricsRow& r : t.rows) {
    CHECK(r.interactions >= last);
    last = r.interactions;
    best = std::max(best, r.eval_return);
    CHECK(r.best_return == best);
    CHECK(r.learner_selection_fraction >= 0.0);
    CHECK(r.learner_selection_fraction <= 1.0);
  }
  CHECK(t.selections.size() == static_cast<std::size_t>(c.rounds * c.riro_episodes));
}

TEST_CASE("interaction parity across algorithms") {
  std::map<std::string, TrialResult> runs;
  for (const char* alg : {"rpi", "ppo_gae", "max_agg", "loki", "mamba", "maps"}) {
    runs[alg] = run_trial(small(alg, "gridworld-5"), 0);
  }
  const std::size_t rpi_total = runs["rpi"].rows.back().interactions;
  const std::size_t episode = 12;
  for (const auto& [alg, t] : runs) {
    const std::size_t total = t.rows.back().interactions;
    if (alg == "ppo_gae") {
      // PPO-GAE skips oracle pretraining and is short by exactly that much.
      CHECK(t.pretrain_interactions == 0);
      CHECK(rpi_total - total == runs["rpi"].pretrain_interactions);
    } else {
      CHECK(std::max(total, rpi_total) - std::min(total, rpi_total) <= episode);
    }
  }
  CHECK(runs["rpi"].pretrain_interactions == 8 * 3 * episode);
}

TEST_CASE("PPO-GAE improves on chain-3") {
  ExperimentConfig c;
  c.algorithm = "ppo_gae";
  c.env = "chain-3";
  c.rounds = 30;
  c.trials = 5;
  c.learner_buffer = 256;
  c.eval_episodes = 64;
  const auto trials = run_experiment(c);
  double initial = 0.0;
  double final = 0.0;
  for (const TrialResult& t : trials) {
    initial += t.initial_eval_return / trials.size();
    final += t.rows.back().eval_return / trials.size();
  }
  INFO("initial " << initial << " final " << final);
  CHECK(final >= initial);
}

TEST_CASE("aggregation uses the sample standard error") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const Aggregate a = aggregate(v);
  CHECK(a.mean == doctest::Approx(2.5));
  CHECK(a.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  const std::vector<double> one{7.0};
  CHECK(aggregate(one).stderr_ == 0.0);
}

TEST_CASE("number formatting") {
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(1.0 / 3.0) == "0.3333333333");
  CHECK(format_real(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_real(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("ablation and grid variants") {
  CHECK(ablation_variants("raps_vs_aps").size() == 2);
  CHECK(ablation_variants("lcb_ucb_vs_mean").size() == 2);
  CHECK(ablation_variants("threshold_sweep").size() == 5);
  CHECK(ablation_variants("oracle_count").size() == 3);
  CHECK(ablation_variants("empty_oracle").size() == 3);
  CHECK_THROWS_AS(ablation_variants("everything"), ConfigError);

  const auto grid = grid_variants("rounds = 2\nthreshold = 0 | 0.5\nalgorithm = rpi|maps\n");
  REQUIRE(grid.size() == 4);
  CHECK(grid[0].name == "threshold=0+algorithm=rpi");
  CHECK(grid[3].name == "threshold=0.5+algorithm=maps");
  CHECK(grid[1].overrides.front() == std::pair<std::string, std::string>{"rounds", "2"});
  CHECK(grid_variants("rounds = 2\n").front().name == "base");
}

TEST_CASE("variant runs share seeds and write CSVs") {
  ExperimentConfig base = small("rpi", "gridworld-5");
  base.rounds = 2;
  const auto results = run_variants(base, ablation_variants("lcb_ucb_vs_mean"));
  REQUIRE(results.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(results[0].trials[i].seed == results[1].trials[i].seed);
  const fs::path dir = scratch("variants");
  write_variant_csvs(dir, results);
  CHECK(fs::exists(dir / "variants.csv"));
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "mean" / "metrics.csv"));
  CHECK(slurp(dir / "summary.csv").find("variant,trials,mean_best_return,stderr_best_return") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("CLI exit codes and outputs") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("verify") == 0);
  CHECK(run_cli("verify --mutate-f-plus") == 1);
  CHECK(run_cli("verify --tolerance 1e-15") == 1);
  CHECK(run_cli("run --set colour=blue") == 2);
  CHECK(run_cli("run --set rounds=0") == 2);
  CHECK(run_cli("run --bogus-flag") == 2);
  CHECK(run_cli("run --config /nonexistent.cfg") == 2);
  CHECK(run_cli("ablate --kind everything") == 2);
  CHECK(run_cli("") == 2);

  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "[experiment]\nalgorithm = rpi\nenv = chain-3\nrounds = 2\ntrials = 2\nlearner_buffer = 64\n";
  }
  const std::string args = "run --config " + (dir / "run.cfg").string() + " --set seed=3 --out ";
  REQUIRE(run_cli(args + (dir / "a").string()) == 0);
  REQUIRE(run_cli(args + (dir / "b").string()) == 0);
  for (const char* file : {"metrics.csv", "selections.csv", "effective_config.txt"}) {
    CHECK(fs::exists(dir / "a" / file));
    CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
  }
  CHECK(slurp(dir / "a" / "effective_config.txt").find("seed = 3") != std::string::npos);
  CHECK(slurp(dir / "a" / "selections.csv").find("trial,round,t_e,state_id,k_star") != std::string::npos);

  {
    std::ofstream grid(dir / "grid.txt");
    grid << "algorithm = rpi | maps\n";
  }
  CHECK(run_cli("sweep --grid " + (dir / "grid.txt").string() + " --config " + (dir / "run.cfg").string() +
                " --out " + (dir / "sweep").string()) == 0);
  CHECK(fs::exists(dir / "sweep" / "algorithm=maps" / "metrics.csv"));
  fs::remove_all(dir);
}
