#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rpi/exact.hpp"
#include "rpi/mdp.hpp"
#include "rpi/nn.hpp"

namespace rpi {

// Black-box oracle: can be asked for actions, nothing else. Implementations
// keep their internals private, so holders of an OracleHandle see no value
// function and no density.
class Oracle : public ActingPolicy {};

using OracleHandle = std::shared_ptr<const Oracle>;

// Differentiable learner policy with score-function gradients.
class LearnerPolicy : public ActingPolicy {
 public:
  virtual std::unique_ptr<LearnerPolicy> clone() const = 0;

  virtual std::size_t num_params() const = 0;
  virtual std::span<double> params() = 0;
  virtual std::span<const double> params() const = 0;

  virtual double log_prob(const State& state, const Action& action) const = 0;
  // grad += scale * d log pi(a|s) / d params; returns log pi(a|s).
  // Throws std::domain_error for an action with zero probability.
  virtual double accumulate_grad_log_prob(const State& state, const Action& action, double scale,
                                          std::span<double> grad) const = 0;
  virtual double entropy(const State& state) const = 0;
  // Action probabilities; discrete policies only.
  virtual std::vector<double> action_probs(const State& state) const = 0;
  virtual ActionSpace action_space() const = 0;

  std::vector<double> grad_log_prob(const State& state, const Action& action) const;

  std::string tag() const override { return "learner"; }
};

// Per-state logits over a tabular state space (temperature 1).
class SoftmaxTabularPolicy final : public LearnerPolicy {
 public:
  SoftmaxTabularPolicy(int num_states, int num_actions);

  ActResult act(const State& state, Rng& rng) const override;
  std::unique_ptr<LearnerPolicy> clone() const override;
  std::size_t num_params() const override { return logits_.size(); }
  std::span<double> params() override { return logits_; }
  std::span<const double> params() const override { return logits_; }
  double log_prob(const State& state, const Action& action) const override;
  double accumulate_grad_log_prob(const State& state, const Action& action, double scale,
                                  std::span<double> grad) const override;
  double entropy(const State& state) const override;
  std::vector<double> action_probs(const State& state) const override;
  ActionSpace action_space() const override;

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

 private:
  std::span<const double> row(int s) const;

  int num_states_;
  int num_actions_;
  std::vector<double> logits_;
};

enum class HeadKind { kCategorical, kGaussian };

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 2.0;

// MLP over state features with a categorical head (logits) or a diagonal
// Gaussian head (mean from the network, state-independent log-std
// parameters appended after the network weights).
class FeedforwardPolicy final : public LearnerPolicy {
 public:
  FeedforwardPolicy(std::size_t input_dim, std::vector<std::size_t> hidden, ActionSpace space,
                    Rng& rng, double initial_log_std = -0.5);

  ActResult act(const State& state, Rng& rng) const override;
  std::unique_ptr<LearnerPolicy> clone() const override;
  std::size_t num_params() const override { return params_.size(); }
  std::span<double> params() override { return params_; }
  std::span<const double> params() const override { return params_; }
  double log_prob(const State& state, const Action& action) const override;
  double accumulate_grad_log_prob(const State& state, const Action& action, double scale,
                                  std::span<double> grad) const override;
  double entropy(const State& state) const override;
  std::vector<double> action_probs(const State& state) const override;
  ActionSpace action_space() const override { return space_; }

  HeadKind head() const { return head_; }
  const nn::MlpShape& shape() const { return shape_; }

  // Rebuilds from a saved layout; `params` must match the layout's size.
  static FeedforwardPolicy from_parts(std::vector<std::size_t> widths, ActionSpace space,
                                      std::vector<double> params);

 private:
  FeedforwardPolicy() = default;
  std::vector<double> head_output(const State& state, nn::MlpCache& cache) const;
  double log_std(std::size_t i) const;

  nn::MlpShape shape_;
  ActionSpace space_;
  HeadKind head_ = HeadKind::kCategorical;
  std::vector<double> params_;
};

// Oracle sampling from a fixed tabular action distribution.
class TableOracle final : public Oracle {
 public:
  TableOracle(std::string name, exact::ExactPolicy policy)
      : name_(std::move(name)), policy_(std::move(policy)) {}
  ActResult act(const State& state, Rng& rng) const override;
  std::string tag() const override { return name_; }

 private:
  std::string name_;
  exact::ExactPolicy policy_;
};

// Frozen copy of a learner policy; densities are dropped at the boundary.
class SnapshotOracle final : public Oracle {
 public:
  SnapshotOracle(std::string name, const LearnerPolicy& policy)
      : name_(std::move(name)), policy_(policy.clone()) {}
  ActResult act(const State& state, Rng& rng) const override;
  std::string tag() const override { return name_; }

 private:
  std::string name_;
  std::unique_ptr<LearnerPolicy> policy_;
};

// Follows `base`, but with probability epsilon acts uniformly at random.
// With epsilon == 0 no extra randomness is drawn.
class EpsilonCorruptedOracle final : public Oracle {
 public:
  EpsilonCorruptedOracle(std::string name, OracleHandle base, double epsilon, ActionSpace space);
  ActResult act(const State& state, Rng& rng) const override;
  std::string tag() const override { return name_; }

 private:
  std::string name_;
  OracleHandle base_;
  double epsilon_;
  ActionSpace space_;
};

// Tabulates a discrete learner over every state of a tabular environment.
exact::ExactPolicy to_exact_policy(const LearnerPolicy& policy, const TabularEnv& env);

// One Adam descent step on the policy parameters.
void apply_gradient_step(LearnerPolicy& policy, std::span<const double> gradient,
                         nn::AdamState& state, const nn::AdamConfig& config);

}  // namespace rpi
