#include "rpi/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "rpi/baselines.hpp"
#include "rpi/envs.hpp"
#include "rpi/rpg.hpp"
#include "rpi/value_ensemble.hpp"

namespace rpi {

double value_discount(const ExperimentConfig& config) {
  if (config.gamma) return *config.gamma;
  return config.algorithm == "rpi" ? 1.0 : config.baseline_gamma;
}

RoundPlan plan_round(const ExperimentConfig& config, int round) {
  RoundPlan plan;
  const std::string& alg = config.algorithm;
  plan.gamma = value_discount(config);
  if (alg == "rpi") {
    plan.rule = SelectionRule::kRaps;
    plan.baseline = BaselineRule::kFPlusHat;
    plan.lambda = 0.9;
  } else if (alg == "ppo_gae") {
    plan.rule = SelectionRule::kLearnerOnly;
    plan.baseline = BaselineRule::kLearnerValue;
    plan.lambda = 0.9;
  } else if (alg == "max_agg") {
    plan.rule = SelectionRule::kUniformOracle;
    plan.baseline = BaselineRule::kFMax;
    plan.lambda = 0.0;
  } else if (alg == "loki") {
    if (loki_mode(round, config.rounds) == LokiMode::kImitate) {
      plan.rule = SelectionRule::kUniformOracle;
      plan.baseline = BaselineRule::kFMax;
      plan.lambda = 0.0;
    } else {
      plan.rule = SelectionRule::kLearnerOnly;
      plan.baseline = BaselineRule::kLearnerValue;
      plan.lambda = 1.0;
    }
  } else if (alg == "mamba") {
    plan.rule = SelectionRule::kUniformOracle;
    plan.baseline = BaselineRule::kFMax;
    plan.lambda = config.mamba_lambda;
  } else if (alg == "maps") {
    plan.rule = SelectionRule::kAps;
    plan.baseline = BaselineRule::kFMax;
    plan.lambda = 0.9;
  } else {
    throw ConfigError("unknown algorithm '" + alg + "'");
  }
  if (config.lambda) plan.lambda = *config.lambda;
  if (config.selection != "auto") plan.rule = parse_selection_rule(config.selection);
  return plan;
}

namespace {

double policy_entropy(const LearnerPolicy& policy, const AdvantageBatch& batch) {
  if (batch.samples.empty()) return 0.0;
  double sum = 0.0;
  for (const AdvantageSample& s : batch.samples) sum += policy.entropy(s.state);
  return sum / static_cast<double>(batch.samples.size());
}

SnapshotProvider snapshot_provider(const ExperimentConfig& config) {
  return [config](const std::vector<int>& rounds, Rng& rng) {
    ExperimentConfig sub = config;
    sub.algorithm = "ppo_gae";
    sub.oracles = "none";
    sub.selection = "auto";
    sub.rounds = config.snapshot_rounds;
    sub.seed = rng.next_u64();
    sub.trials = 1;
    std::vector<std::unique_ptr<LearnerPolicy>> frozen(rounds.size());
    run_trial(sub, 0, [&](int round, const LearnerPolicy& learner) {
      for (std::size_t i = 0; i < rounds.size(); ++i) {
        if (rounds[i] == round) frozen[i] = learner.clone();
      }
    });
    for (const auto& p : frozen) {
      if (!p) throw ConfigError("snapshot round outside the snapshot run");
    }
    return frozen;
  };
}

EnsembleConfig ensemble_config(const ExperimentConfig& config, const Environment& env) {
  EnsembleConfig ec;
  ec.members = static_cast<std::size_t>(config.ensemble_size);
  const TabularMdp* mdp = env.tabular();
  const bool tabular = config.value_model == "tabular" || (config.value_model == "auto" && mdp != nullptr);
  if (tabular) {
    ec.kind = MemberKind::kTabular;
    ec.num_states = mdp->num_states();
  } else {
    ec.kind = MemberKind::kMlp;
    ec.input_dim = env.feature_dim();
  }
  ec.hidden = config.value_hidden;
  ec.init_scale = config.value_init_scale;
  ec.epochs = config.value_epochs;
  ec.learning_rate = config.value_lr;
  return ec;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& config, int trial, const RoundCallback& on_round) {
  validate(config);
  const Fixture fixture = env_fixture(config.env);
  const std::unique_ptr<Environment> env = make_env(fixture.env);
  std::vector<OracleFactorySpec> specs =
      oracle_fixture(config.oracles == "auto" ? fixture.default_oracles : config.oracles);
  if (config.algorithm == "ppo_gae") specs.clear();

  TrialResult result;
  result.trial = trial;
  result.seed = config.seed + static_cast<std::uint64_t>(trial);
  const Rng root(result.seed);

  Rng oracle_rng = root.split("oracles");
  std::vector<OracleHandle> oracles =
      make_oracles(*env, fixture.env.width, specs, oracle_rng, snapshot_provider(config));
  result.num_oracles = oracles.size();

  Rng init_rng = root.split("policy");
  FeedforwardPolicy learner(env->feature_dim(), config.hidden, env->action_space(), init_rng);
  ExtendedOracleSet set(std::move(oracles), ensemble_config(config, *env),
                        static_cast<std::size_t>(config.oracle_buffer),
                        static_cast<std::size_t>(config.learner_buffer), root.split("ensembles"));
  set.set_learner(learner);
  const std::size_t learner_index = set.learner_index();
  const double discount = value_discount(config);

  std::size_t interactions = 0;
  Rng pretrain_rng = root.split("pretrain");
  for (std::size_t k = 0; k < set.num_oracles(); ++k) {
    interactions += pretrain(set.ensemble(k), set.buffer(k), *env, set.oracle(k),
                             config.pretrain_episodes, pretrain_rng, discount);
  }
  result.pretrain_interactions = interactions;

  PpoConfig ppo;
  ppo.epochs = config.epochs;
  ppo.minibatch = static_cast<std::size_t>(config.minibatch);
  ppo.clip = config.clip;
  ppo.adam.learning_rate = config.lr;
  ppo.normalize_advantages = config.normalize_advantages;
  nn::AdamState adam;

  // Round 0's stream scores the initial policy.
  auto evaluate = [&](int round) {
    Rng eval_rng = root.split("eval").split(static_cast<std::uint64_t>(round));
    double total = 0.0;
    for (int e = 0; e < config.eval_episodes; ++e) {
      total += empirical_return(rollout(*env, learner, std::nullopt, eval_rng), 1.0);
    }
    return total / config.eval_episodes;
  };
  result.initial_eval_return = evaluate(0);

  double best = -std::numeric_limits<double>::infinity();
  for (int round = 1; round <= config.rounds; ++round) {
    Rng rng = root.split("round").split(static_cast<std::uint64_t>(round));
    const RoundPlan plan = plan_round(config, round);
    set.set_learner(learner);

    RiroConfig riro_config;
    riro_config.episodes = config.riro_episodes;
    riro_config.rule = plan.rule;
    riro_config.target_discount = discount;
    RiroResult riro = riro_round(*env, set, rng, riro_config, round);
    interactions += riro.steps;
    std::size_t learner_picks = 0;
    for (const SelectionRecord& r : riro.records) learner_picks += r.chosen == learner_index ? 1 : 0;

    std::vector<Trajectory> batch_trajs;
    std::size_t collected = 0;
    while (collected < static_cast<std::size_t>(config.learner_buffer)) {
      Trajectory traj = rollout(*env, learner, std::nullopt, rng);
      collected += traj.size();
      set.buffer(learner_index).append(traj, discount);
      batch_trajs.push_back(std::move(traj));
    }
    interactions += collected;
    set.ensemble(learner_index).fit(set.buffer(learner_index), rng);

    std::size_t queries = 0;
    std::size_t learner_branch = 0;
    const ValueFn baseline = [&](const State& s) {
      ++queries;
      switch (plan.baseline) {
        case BaselineRule::kFPlusHat: {
          const BaselineEstimate e = f_plus_hat(set, s, config.threshold);
          learner_branch += e.learner_branch ? 1 : 0;
          return e.value;
        }
        case BaselineRule::kFMax:
          if (set.num_oracles() == 0) ++learner_branch;
          return f_max_hat(set, s);
        case BaselineRule::kLearnerValue:
          ++learner_branch;
          return set.ensemble(learner_index).predict(s).mean;
      }
      return 0.0;
    };
    AdvantageBatch batch = build_batch(batch_trajs, baseline, plan.gamma, plan.lambda);
    batch.threshold = config.threshold;
    const double entropy = policy_entropy(learner, batch);
    ppo_update(learner, batch, ppo, adam, rng);
    if (on_round) on_round(round, learner);

    const double eval_return = evaluate(round);
    best = std::max(best, eval_return);

    MetricsRow row;
    row.trial = trial;
    row.round = round;
    row.eval_return = eval_return;
    row.best_return = best;
    row.interactions = interactions;
    row.learner_selection_fraction =
        riro.records.empty() ? 0.0 : static_cast<double>(learner_picks) / riro.records.size();
    row.learner_branch_fraction = queries == 0 ? 0.0 : static_cast<double>(learner_branch) / queries;
    row.mean_advantage = batch.mean_advantage();
    row.entropy = entropy;
    result.rows.push_back(row);
    for (SelectionRecord& r : riro.records) result.selections.push_back(std::move(r));
  }
  return result;
}

std::vector<TrialResult> run_experiment(const ExperimentConfig& config) {
  validate(config);
  std::vector<TrialResult> results(static_cast<std::size_t>(config.trials));
  const int workers = std::min(config.threads, config.trials);
  if (workers <= 1) {
    for (int t = 0; t < config.trials; ++t) results[static_cast<std::size_t>(t)] = run_trial(config, t);
    return results;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int t = next++; t < config.trials; t = next++) {
        try {
          results[static_cast<std::size_t>(t)] = run_trial(config, t);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_metrics_csv(std::ostream& out, std::span<const TrialResult> trials) {
  out << "# schema: " << kMetricsSchema << "\n";
  out << "trial,round,eval_return,best_return,interactions,learner_selection_fraction,"
         "learner_branch_fraction,mean_advantage,entropy\n";
  for (const TrialResult& t : trials) {
    for (const MetricsRow& r : t.rows) {
      out << r.trial << ',' << r.round << ',' << format_real(r.eval_return) << ','
          << format_real(r.best_return) << ',' << r.interactions << ','
          << format_real(r.learner_selection_fraction) << ',' << format_real(r.learner_branch_fraction)
          << ',' << format_real(r.mean_advantage) << ',' << format_real(r.entropy) << '\n';
    }
  }
}

void write_selections_csv(std::ostream& out, std::span<const TrialResult> trials) {
  std::size_t width = 0;
  for (const TrialResult& t : trials) width = std::max(width, t.num_oracles + 1);
  out << "# schema: " << kSelectionsSchema << "\n";
  out << "trial,round,t_e,state_id,k_star";
  for (std::size_t k = 0; k < width; ++k) out << ",score_" << k;
  out << '\n';
  for (const TrialResult& t : trials) {
    for (const SelectionRecord& r : t.selections) {
      out << t.trial << ',' << r.round << ',' << r.switch_step << ',' << r.switch_state << ',' << r.chosen;
      for (std::size_t k = 0; k < width; ++k) {
        out << ',' << (k < r.scores.size() ? format_real(r.scores[k]) : std::string());
      }
      out << '\n';
    }
  }
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                       std::span<const TrialResult> trials) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = open_output(dir / "metrics.csv");
    write_metrics_csv(out, trials);
  }
  {
    std::ofstream out = open_output(dir / "selections.csv");
    write_selections_csv(out, trials);
  }
  std::ofstream out = open_output(dir / "effective_config.txt");
  out << effective_config_text(config);
}

Aggregate aggregate(std::span<const double> values) {
  Aggregate a;
  if (values.empty()) return a;
  const double n = static_cast<double>(values.size());
  for (double v : values) a.mean += v;
  a.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return a;
}

Aggregate aggregate_final_best(std::span<const TrialResult> trials) {
  std::vector<double> finals;
  for (const TrialResult& t : trials) finals.push_back(t.final_best());
  return aggregate(finals);
}

std::vector<Variant> ablation_variants(const std::string& kind) {
  if (kind == "raps_vs_aps") {
    return {{"raps", {{"algorithm", "rpi"}, {"selection", "raps"}}},
            {"aps", {{"algorithm", "rpi"}, {"selection", "aps"}}}};
  }
  if (kind == "lcb_ucb_vs_mean") {
    return {{"lcb_ucb", {{"algorithm", "rpi"}, {"selection", "raps"}}},
            {"mean", {{"algorithm", "rpi"}, {"selection", "mean"}}}};
  }
  if (kind == "threshold_sweep") {
    std::vector<Variant> out;
    for (const char* t : {"0", "0.5", "1", "3", "5"}) {
      out.push_back({std::string("threshold_") + t, {{"algorithm", "rpi"}, {"threshold", t}}});
    }
    return out;
  }
  if (kind == "oracle_count") {
    return {{"oracles_1", {{"algorithm", "rpi"}, {"oracles", "regional1"}}},
            {"oracles_2", {{"algorithm", "rpi"}, {"oracles", "regional2"}}},
            {"oracles_3", {{"algorithm", "rpi"}, {"oracles", "regional3"}}}};
  }
  if (kind == "empty_oracle") {
    return {{"no_oracles", {{"algorithm", "rpi"}, {"oracles", "none"}}},
            {"one_oracle", {{"algorithm", "rpi"}, {"oracles", "regional1"}}},
            {"ppo_gae", {{"algorithm", "ppo_gae"}}}};
  }
  throw ConfigError("unknown ablation kind '" + kind + "'");
}

std::vector<VariantResult> run_variants(const ExperimentConfig& base, const std::vector<Variant>& variants) {
  std::vector<ExperimentConfig> configs;
  for (const Variant& v : variants) {
    ExperimentConfig c = base;
    for (const auto& [key, value] : v.overrides) set_config_value(c, key, value);
    validate(c);
    configs.push_back(std::move(c));
  }
  std::vector<VariantResult> out;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    out.push_back({variants[i], configs[i], run_experiment(configs[i])});
  }
  return out;
}

std::vector<Variant> grid_variants(const std::string& grid_text) {
  std::vector<Variant> out{{"", {}}};
  for (const auto& [key, value] : parse_config_text(grid_text)) {
    std::vector<std::string> options;
    std::size_t start = 0;
    while (true) {
      const std::size_t bar = value.find('|', start);
      std::string opt = value.substr(start, bar == std::string::npos ? std::string::npos : bar - start);
      const auto b = opt.find_first_not_of(" \t");
      const auto e = opt.find_last_not_of(" \t");
      options.push_back(b == std::string::npos ? "" : opt.substr(b, e - b + 1));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    std::vector<Variant> next;
    for (const Variant& v : out) {
      for (const std::string& opt : options) {
        Variant nv = v;
        nv.overrides.emplace_back(key, opt);
        if (options.size() > 1) nv.name += (nv.name.empty() ? "" : "+") + key + "=" + opt;
        next.push_back(std::move(nv));
      }
    }
    out = std::move(next);
  }
  for (Variant& v : out) {
    if (v.name.empty()) v.name = "base";
  }
  return out;
}

void write_variant_csvs(const std::filesystem::path& dir, std::span<const VariantResult> results) {
  std::filesystem::create_directories(dir);
  std::ofstream trials = open_output(dir / "variants.csv");
  trials << "# schema: " << kAblationSchema << "\n";
  trials << "variant,trial,seed,initial_eval_return,final_best_return,final_eval_return,interactions\n";
  std::ofstream summary = open_output(dir / "summary.csv");
  summary << "# schema: " << kAblationSchema << "\n";
  summary << "variant,trials,mean_best_return,stderr_best_return\n";
  for (const VariantResult& r : results) {
    for (const TrialResult& t : r.trials) {
      const MetricsRow last = t.rows.empty() ? MetricsRow{} : t.rows.back();
      trials << r.variant.name << ',' << t.trial << ',' << t.seed << ',' << format_real(t.initial_eval_return) << ','
             << format_real(t.final_best()) << ','
             << format_real(last.eval_return) << ',' << last.interactions << '\n';
    }
    const Aggregate a = aggregate_final_best(r.trials);
    summary << r.variant.name << ',' << r.trials.size() << ',' << format_real(a.mean) << ','
            << format_real(a.stderr_) << '\n';
    write_run_outputs(dir / r.variant.name, r.config, r.trials);
  }
}

}  // namespace rpi
