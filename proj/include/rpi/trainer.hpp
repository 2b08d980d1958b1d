#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpi/config.hpp"
#include "rpi/policy.hpp"
#include "rpi/raps.hpp"

namespace rpi {

enum class BaselineRule { kFPlusHat, kFMax, kLearnerValue };

// What one round of an algorithm does: who rolls out after the switch, which
// baseline the advantage uses, and the GAE parameters.
struct RoundPlan {
  SelectionRule rule = SelectionRule::kRaps;
  BaselineRule baseline = BaselineRule::kFPlusHat;
  double gamma = 1.0;
  double lambda = 0.9;
};

RoundPlan plan_round(const ExperimentConfig& config, int round);

// Discount used for every value-ensemble target of the run.
double value_discount(const ExperimentConfig& config);

struct MetricsRow {
  int trial = 0;
  int round = 0;
  double eval_return = 0.0;
  double best_return = 0.0;
  std::size_t interactions = 0;
  double learner_selection_fraction = 0.0;
  double learner_branch_fraction = 0.0;
  double mean_advantage = 0.0;
  double entropy = 0.0;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  std::size_t num_oracles = 0;
  std::size_t pretrain_interactions = 0;
  double initial_eval_return = 0.0;  // pi_1 before any update; not part of best_return
  std::vector<MetricsRow> rows;
  std::vector<SelectionRecord> selections;

  double final_best() const { return rows.empty() ? 0.0 : rows.back().best_return; }
};

// Called after each round's policy update.
using RoundCallback = std::function<void(int round, const LearnerPolicy& learner)>;

// One seeded trial (seed = config.seed + trial). Validates the config first.
TrialResult run_trial(const ExperimentConfig& config, int trial, const RoundCallback& on_round = {});

// All trials; up to config.threads run concurrently, results in trial order.
std::vector<TrialResult> run_experiment(const ExperimentConfig& config);

inline constexpr const char* kMetricsSchema = "rpi-metrics/1";
inline constexpr const char* kSelectionsSchema = "rpi-selections/1";
inline constexpr const char* kAblationSchema = "rpi-ablation/1";

void write_metrics_csv(std::ostream& out, std::span<const TrialResult> trials);
void write_selections_csv(std::ostream& out, std::span<const TrialResult> trials);

// metrics.csv, selections.csv and effective_config.txt under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                       std::span<const TrialResult> trials);

struct Aggregate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample stddev / sqrt(n)
};

Aggregate aggregate(std::span<const double> values);
Aggregate aggregate_final_best(std::span<const TrialResult> trials);

struct Variant {
  std::string name;
  std::vector<std::pair<std::string, std::string>> overrides;
};

// raps_vs_aps, lcb_ucb_vs_mean, threshold_sweep, oracle_count, empty_oracle.
std::vector<Variant> ablation_variants(const std::string& kind);

struct VariantResult {
  Variant variant;
  ExperimentConfig config;
  std::vector<TrialResult> trials;
};

// Every variant with the base seed, so trials are matched across variants.
std::vector<VariantResult> run_variants(const ExperimentConfig& base, const std::vector<Variant>& variants);

// Variants from a grid text: keys whose values hold `|`-separated
// alternatives are expanded as a cartesian product in file order; other
// keys apply to every variant.
std::vector<Variant> grid_variants(const std::string& grid_text);

// Per-trial rows and per-variant summaries (mean and standard error of the
// final best return).
void write_variant_csvs(const std::filesystem::path& dir, std::span<const VariantResult> results);

std::string format_real(double v);

}  // namespace rpi
