#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rpi/mdp.hpp"
#include "rpi/policy.hpp"
#include "rpi/value_ensemble.hpp"

namespace rpi {

// K black-box oracles plus the current learner, each paired with its value
// ensemble and its own tagged data buffer. Indices 0..K-1 are the oracles
// and index K is the learner.
class ExtendedOracleSet {
 public:
  ExtendedOracleSet(std::vector<OracleHandle> oracles, const EnsembleConfig& ensemble,
                    std::size_t oracle_buffer_capacity, std::size_t learner_buffer_capacity,
                    Rng init_rng);

  std::size_t num_oracles() const { return oracles_.size(); }
  std::size_t size() const { return oracles_.size() + 1; }
  std::size_t learner_index() const { return oracles_.size(); }
  bool is_learner(std::size_t k) const { return k == learner_index(); }

  // Refreshes the learner entry; the set does not own the policy.
  void set_learner(const LearnerPolicy& learner) { learner_ = &learner; }
  const LearnerPolicy& learner() const;

  const ActingPolicy& policy(std::size_t k) const;
  const Oracle& oracle(std::size_t k) const { return *oracles_.at(k); }
  ValueEnsemble& ensemble(std::size_t k) { return ensembles_.at(k); }
  const ValueEnsemble& ensemble(std::size_t k) const { return ensembles_.at(k); }
  ValueBuffer& buffer(std::size_t k) { return buffers_.at(k); }
  const ValueBuffer& buffer(std::size_t k) const { return buffers_.at(k); }

 private:
  std::vector<OracleHandle> oracles_;
  const LearnerPolicy* learner_ = nullptr;
  std::vector<ValueEnsemble> ensembles_;
  std::vector<ValueBuffer> buffers_;
};

enum class SelectionRule {
  kRaps,           // oracles by UCB, learner by LCB
  kAps,            // oracles by UCB, learner excluded
  kMean,           // argmax of ensemble means over the extended set
  kUniformOracle,  // uniformly random oracle
  kLearnerOnly,
};

std::string to_string(SelectionRule rule);
SelectionRule parse_selection_rule(const std::string& name);

struct Selection {
  std::size_t index = 0;
  std::vector<double> scores;  // per index; -inf for excluded entries
};

// Scores per-index predictions (learner last) under kRaps, kAps or kMean and
// takes the argmax, ties to the lowest index.
Selection select_from_predictions(std::span<const Prediction> predictions, SelectionRule rule);

// argmax over the rule's scores, ties to the lowest index. With no oracles
// every rule returns the learner.
Selection select_policy(const ExtendedOracleSet& set, const State& state,
                        SelectionRule rule = SelectionRule::kRaps, Rng* rng = nullptr);

// Discrete branch: argmax of count-based UCBs; unvisited entries win.
std::size_t select_policy_discrete(std::span<const McTabularValue* const> tables, int state,
                                   int horizon);

struct SelectionRecord {
  int round = 0;
  int switch_step = 0;
  int switch_state = -1;
  std::size_t chosen = 0;
  std::vector<double> scores;
};

struct RiroConfig {
  int episodes = 4;
  SelectionRule rule = SelectionRule::kRaps;
  double target_discount = 1.0;
};

struct RiroResult {
  std::vector<SelectionRecord> records;
  std::size_t steps = 0;
};

// Roll-in learner to a uniformly drawn switch step, select, roll out the
// selection, store the suffix in the selection's buffer and refit its
// ensemble. Episodes run sequentially.
RiroResult riro_round(const Environment& env, ExtendedOracleSet& set, Rng& rng,
                      const RiroConfig& config, int round = 0);

}  // namespace rpi
