#include "rpi/raps.hpp"

#include <limits>
#include <stdexcept>

namespace rpi {

ExtendedOracleSet::ExtendedOracleSet(std::vector<OracleHandle> oracles, const EnsembleConfig& ensemble,
                                     std::size_t oracle_buffer_capacity,
                                     std::size_t learner_buffer_capacity, Rng init_rng)
    : oracles_(std::move(oracles)) {
  for (std::size_t k = 0; k < oracles_.size(); ++k) {
    if (!oracles_[k]) throw std::invalid_argument("ExtendedOracleSet: null oracle");
    if (oracles_[k]->tag() == "learner") {
      throw std::invalid_argument("ExtendedOracleSet: oracle tag 'learner' is reserved");
    }
    ensembles_.emplace_back(ensemble, init_rng.split(k));
    buffers_.emplace_back(oracles_[k]->tag(), oracle_buffer_capacity);
  }
  ensembles_.emplace_back(ensemble, init_rng.split(oracles_.size()));
  buffers_.emplace_back("learner", learner_buffer_capacity);
}

const LearnerPolicy& ExtendedOracleSet::learner() const {
  if (learner_ == nullptr) throw std::logic_error("ExtendedOracleSet: learner not set");
  return *learner_;
}

const ActingPolicy& ExtendedOracleSet::policy(std::size_t k) const {
  if (is_learner(k)) return learner();
  return *oracles_.at(k);
}

std::string to_string(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::kRaps: return "raps";
    case SelectionRule::kAps: return "aps";
    case SelectionRule::kMean: return "mean";
    case SelectionRule::kUniformOracle: return "uniform";
    case SelectionRule::kLearnerOnly: return "learner";
  }
  return "unknown";
}

SelectionRule parse_selection_rule(const std::string& name) {
  for (SelectionRule r : {SelectionRule::kRaps, SelectionRule::kAps, SelectionRule::kMean,
                          SelectionRule::kUniformOracle, SelectionRule::kLearnerOnly}) {
    if (to_string(r) == name) return r;
  }
  throw std::invalid_argument("unknown selection rule '" + name + "'");
}

namespace {

std::size_t argmax(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

}  // namespace

Selection select_from_predictions(std::span<const Prediction> predictions, SelectionRule rule) {
  if (predictions.empty()) throw std::invalid_argument("select_from_predictions: no candidates");
  if (rule != SelectionRule::kRaps && rule != SelectionRule::kAps && rule != SelectionRule::kMean) {
    throw std::invalid_argument("select_from_predictions: rule '" + to_string(rule) + "' is not score based");
  }
  Selection out;
  out.scores.assign(predictions.size(), -std::numeric_limits<double>::infinity());
  const std::size_t learner = predictions.size() - 1;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const Prediction& p = predictions[k];
    if (rule == SelectionRule::kMean) {
      out.scores[k] = p.mean;
    } else if (k == learner) {
      if (rule == SelectionRule::kRaps) out.scores[k] = p.mean - p.spread;
    } else {
      out.scores[k] = p.mean + p.spread;
    }
  }
  out.index = argmax(out.scores);
  return out;
}

Selection select_policy(const ExtendedOracleSet& set, const State& state, SelectionRule rule,
                        Rng* rng) {
  constexpr double kExcluded = -std::numeric_limits<double>::infinity();
  Selection out;
  out.scores.assign(set.size(), kExcluded);
  const std::size_t learner = set.learner_index();
  if (set.num_oracles() == 0 || rule == SelectionRule::kLearnerOnly) {
    out.scores[learner] = set.ensemble(learner).predict(state).mean;
    out.index = learner;
    return out;
  }
  if (rule == SelectionRule::kUniformOracle) {
    if (rng == nullptr) throw std::invalid_argument("select_policy: uniform rule needs randomness");
    out.index = rng->uniform_int(set.num_oracles());
    for (std::size_t k = 0; k < set.num_oracles(); ++k) out.scores[k] = 1.0 / set.num_oracles();
    return out;
  }
  std::vector<Prediction> predictions(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) predictions[k] = set.ensemble(k).predict(state);
  return select_from_predictions(predictions, rule);
}

std::size_t select_policy_discrete(std::span<const McTabularValue* const> tables, int state,
                                   int horizon) {
  if (tables.empty()) throw std::invalid_argument("select_policy_discrete: no candidates");
  std::size_t best = 0;
  double best_score = tables[0]->ucb(state, horizon);
  for (std::size_t k = 1; k < tables.size(); ++k) {
    const double score = tables[k]->ucb(state, horizon);
    if (score > best_score) {
      best = k;
      best_score = score;
    }
  }
  return best;
}

RiroResult riro_round(const Environment& env, ExtendedOracleSet& set, Rng& rng,
                      const RiroConfig& config, int round) {
  if (config.episodes < 0) throw std::invalid_argument("riro_round: negative episode count");
  RiroResult result;
  const LearnerPolicy& learner = set.learner();
  for (int e = 0; e < config.episodes; ++e) {
    const int switch_step = static_cast<int>(rng.uniform_int(static_cast<std::size_t>(env.horizon())));
    Trajectory traj;
    traj.switch_step = switch_step;
    State state = env.reset(rng);
    continue_rollout(env, learner, state, switch_step, rng, traj);

    const Selection choice = select_policy(set, state, config.rule, &rng);
    const ActingPolicy& roll_out = set.policy(choice.index);
    traj.behavior_tag = learner.tag() + ">" + roll_out.tag();

    SelectionRecord record;
    record.round = round;
    record.switch_step = switch_step;
    record.switch_state = state.id;
    record.chosen = choice.index;
    record.scores = choice.scores;

    continue_rollout(env, roll_out, state, env.horizon(), rng, traj);
    result.steps += traj.size();

    set.buffer(choice.index).append(traj, config.target_discount);
    set.ensemble(choice.index).fit(set.buffer(choice.index), rng);
    result.records.push_back(std::move(record));
  }
  return result;
}

}  // namespace rpi
