#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rpi {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string algorithm = "rpi";  // rpi, ppo_gae, max_agg, loki, mamba, maps
  std::string env = "gridworld-5";
  std::string oracles = "auto";    // fixture default when "auto"
  std::string selection = "auto";  // override of the algorithm's selection rule
  int rounds = 100;
  int riro_episodes = 4;
  int pretrain_episodes = 8;
  int learner_buffer = 2048;
  int oracle_buffer = 19200;
  int ensemble_size = 5;
  double lr = 3e-4;
  std::optional<double> gamma;   // algorithm default when unset
  std::optional<double> lambda;  // algorithm default when unset
  double baseline_gamma = 0.995;
  double mamba_lambda = 0.9;
  double threshold = 0.5;
  int trials = 5;
  std::uint64_t seed = 0;
  int epochs = 4;
  int minibatch = 128;
  double clip = 0.2;
  bool normalize_advantages = false;
  std::vector<std::size_t> hidden{64, 64};
  std::string value_model = "auto";  // tabular, mlp
  std::vector<std::size_t> value_hidden{64, 64};
  int value_epochs = 20;
  double value_lr = 1e-3;
  double value_init_scale = 1.0;
  int eval_episodes = 8;
  int snapshot_rounds = 100;
  int threads = 1;
};

// Sets one key from its text form. Throws ConfigError on unknown keys or
// malformed values.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

// Parses `key = value` lines; `[section]` headers and `#`/`;` comments are
// ignored, keys are global.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

ExperimentConfig load_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

// Applies a `key=value` override.
void apply_override(ExperimentConfig& config, const std::string& assignment);

// Throws ConfigError for out-of-range values or unknown fixture names.
void validate(const ExperimentConfig& config);

// Every key in a fixed order, one `key = value` per line.
std::string effective_config_text(const ExperimentConfig& config);

std::vector<std::string> config_keys();

}  // namespace rpi
