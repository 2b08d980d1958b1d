#include "rpi/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "rpi/baselines.hpp"
#include "rpi/envs.hpp"
#include "rpi/raps.hpp"

namespace rpi {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("bad value for '" + key + "': '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("bad value for '" + key + "': '" + text + "'");
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto w = parse_number<std::size_t>(key, trim(part));
    if (w == 0) throw ConfigError("'" + key + "' widths must be positive");
    out.push_back(w);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string format_widths(const std::vector<std::size_t>& widths) {
  if (widths.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(widths[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
Field int_field(const char* key, T ExperimentConfig::*member) {
  return {key, [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<T>(key, v); },
          [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(const char* key, double ExperimentConfig::*member) {
  return {key, [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_number<double>(key, v); },
          [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

Field optional_real_field(const char* key, std::optional<double> ExperimentConfig::*member) {
  return {key,
          [key, member](ExperimentConfig& c, const std::string& v) {
            if (v == "auto") {
              (c.*member).reset();
            } else {
              c.*member = parse_number<double>(key, v);
            }
          },
          [member](const ExperimentConfig& c) {
            return (c.*member) ? format_double(*(c.*member)) : std::string("auto");
          }};
}

Field text_field(const char* key, std::string ExperimentConfig::*member) {
  return {key, [member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

Field widths_field(const char* key, std::vector<std::size_t> ExperimentConfig::*member) {
  return {key, [key, member](ExperimentConfig& c, const std::string& v) { c.*member = parse_widths(key, v); },
          [member](const ExperimentConfig& c) { return format_widths(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      text_field("algorithm", &ExperimentConfig::algorithm),
      text_field("env", &ExperimentConfig::env),
      text_field("oracles", &ExperimentConfig::oracles),
      text_field("selection", &ExperimentConfig::selection),
      int_field("rounds", &ExperimentConfig::rounds),
      int_field("riro_episodes", &ExperimentConfig::riro_episodes),
      int_field("pretrain_episodes", &ExperimentConfig::pretrain_episodes),
      int_field("learner_buffer", &ExperimentConfig::learner_buffer),
      int_field("oracle_buffer", &ExperimentConfig::oracle_buffer),
      int_field("ensemble_size", &ExperimentConfig::ensemble_size),
      real_field("lr", &ExperimentConfig::lr),
      optional_real_field("gamma", &ExperimentConfig::gamma),
      optional_real_field("lambda", &ExperimentConfig::lambda),
      real_field("baseline_gamma", &ExperimentConfig::baseline_gamma),
      real_field("mamba_lambda", &ExperimentConfig::mamba_lambda),
      real_field("threshold", &ExperimentConfig::threshold),
      int_field("trials", &ExperimentConfig::trials),
      int_field("seed", &ExperimentConfig::seed),
      int_field("epochs", &ExperimentConfig::epochs),
      int_field("minibatch", &ExperimentConfig::minibatch),
      real_field("clip", &ExperimentConfig::clip),
      {"normalize_advantages",
       [](ExperimentConfig& c, const std::string& v) { c.normalize_advantages = parse_bool("normalize_advantages", v); },
       [](const ExperimentConfig& c) { return std::string(c.normalize_advantages ? "true" : "false"); }},
      widths_field("hidden", &ExperimentConfig::hidden),
      text_field("value_model", &ExperimentConfig::value_model),
      widths_field("value_hidden", &ExperimentConfig::value_hidden),
      int_field("value_epochs", &ExperimentConfig::value_epochs),
      real_field("value_lr", &ExperimentConfig::value_lr),
      real_field("value_init_scale", &ExperimentConfig::value_init_scale),
      int_field("eval_episodes", &ExperimentConfig::eval_episodes),
      int_field("snapshot_rounds", &ExperimentConfig::snapshot_rounds),
      int_field("threads", &ExperimentConfig::threads),
  };
  return table;
}

}  // namespace

void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.resize(comment);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(key, unquote(trim(line.substr(eq + 1))));
  }
  return out;
}

ExperimentConfig load_config_text(const std::string& text, ExperimentConfig base) {
  for (const auto& [key, value] : parse_config_text(text)) set_config_value(base, key, value);
  return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), std::move(base));
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_config_value(config, trim(assignment.substr(0, eq)), unquote(trim(assignment.substr(eq + 1))));
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.algorithm == "rpi" || c.algorithm == "ppo_gae" || c.algorithm == "max_agg" ||
              c.algorithm == "loki" || c.algorithm == "mamba" || c.algorithm == "maps",
          "unknown algorithm '" + c.algorithm + "'");
  Fixture fixture;
  try {
    fixture = env_fixture(c.env);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const std::string oracle_set = c.oracles == "auto" ? fixture.default_oracles : c.oracles;
  std::vector<OracleFactorySpec> specs;
  try {
    specs = oracle_fixture(oracle_set);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.selection != "auto") {
    try {
      parse_selection_rule(c.selection);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const bool tabular_env = fixture.env.kind != EnvKind::kPointmass;
  for (const OracleFactorySpec& spec : specs) {
    if (spec.kind == OracleKind::kSnapshot) {
      require(spec.snapshot_round >= 1 && spec.snapshot_round <= c.snapshot_rounds,
              "snapshot round exceeds snapshot_rounds");
    } else {
      require(tabular_env, "oracle set '" + oracle_set + "' needs a tabular env");
    }
  }
  if (c.algorithm != "rpi" && c.algorithm != "ppo_gae") {
    require(!specs.empty(), "algorithm '" + c.algorithm + "' needs at least one oracle");
  }
  require(c.value_model == "auto" || c.value_model == "tabular" || c.value_model == "mlp",
          "value_model must be auto, tabular or mlp");
  require(!(c.value_model == "tabular" && !tabular_env), "tabular value model needs a tabular env");
  require(c.rounds > 0, "rounds must be positive");
  require(c.riro_episodes >= 0, "riro_episodes must be non-negative");
  require(c.pretrain_episodes >= 0, "pretrain_episodes must be non-negative");
  require(c.learner_buffer > 0, "learner_buffer must be positive");
  require(c.oracle_buffer > 0, "oracle_buffer must be positive");
  require(c.ensemble_size > 0, "ensemble_size must be positive");
  require(c.trials > 0, "trials must be positive");
  require(c.epochs > 0, "epochs must be positive");
  require(c.minibatch > 0, "minibatch must be positive");
  require(c.eval_episodes > 0, "eval_episodes must be positive");
  require(c.value_epochs > 0, "value_epochs must be positive");
  require(c.snapshot_rounds > 0, "snapshot_rounds must be positive");
  require(c.threads > 0, "threads must be positive");
  require(c.lr > 0.0 && c.value_lr > 0.0, "learning rates must be positive");
  require(c.clip >= 0.0, "clip must be non-negative");
  require(c.threshold >= 0.0, "threshold must be non-negative");
  require(c.value_init_scale >= 0.0, "value_init_scale must be non-negative");
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  require(!c.gamma || unit(*c.gamma), "gamma must lie in [0, 1]");
  require(!c.lambda || unit(*c.lambda), "lambda must lie in [0, 1]");
  require(unit(c.baseline_gamma), "baseline_gamma must lie in [0, 1]");
  require(unit(c.mamba_lambda), "mamba_lambda must lie in [0, 1]");
}

std::string effective_config_text(const ExperimentConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.emplace_back(f.key);
  return keys;
}

}  // namespace rpi
