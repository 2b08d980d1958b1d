#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "rpi/mdp.hpp"
#include "rpi/nn.hpp"
#include "rpi/policy.hpp"
#include "rpi/raps.hpp"

namespace rpi {

using ValueFn = std::function<double(const State&)>;

inline constexpr double kDefaultThreshold = 0.5;

struct BaselineEstimate {
  double value = 0.0;
  bool learner_branch = false;  // the learner's mean was returned
};

// Confidence-aware max+ baseline. Finds the member with the largest mean;
// if its spread exceeds `threshold` the learner's mean is used instead.
BaselineEstimate f_plus_hat(const ExtendedOracleSet& set, const State& state,
                            double threshold = kDefaultThreshold);

// The same rule over per-index predictions, learner last.
BaselineEstimate f_plus_from_predictions(std::span<const Prediction> predictions,
                                         double threshold = kDefaultThreshold);

// Max of the oracle means, learner excluded. Falls back to the learner mean
// when there are no oracles.
double f_max_hat(const ExtendedOracleSet& set, const State& state);

// Core GAE recursion. values[t] is the baseline at s_t and `bootstrap` the
// baseline after the last step (0 when the episode ended).
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double bootstrap, double gamma, double lambda);

// Baseline evaluated at every visited state plus the bootstrap after the
// final step: returns size() + 1 entries.
std::vector<double> baseline_values(const Trajectory& traj, const ValueFn& f);

// GAE against an arbitrary baseline with f(s_H) = 0.
std::vector<double> gae_plus(const Trajectory& traj, const ValueFn& f, double gamma, double lambda);

struct AdvantageSample {
  State state;
  Action action;
  double log_prob_old = 0.0;
  double advantage = 0.0;
  double baseline = 0.0;
};

struct AdvantageBatch {
  std::vector<AdvantageSample> samples;
  double gamma = 1.0;
  double lambda = 0.9;
  double threshold = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return samples.size(); }
  double mean_advantage() const;
};

// Learner trajectories only; every transition must carry its log-prob.
AdvantageBatch build_batch(std::span<const Trajectory> trajectories, const ValueFn& f, double gamma,
                           double lambda);

// Loss gradient -mean(grad log pi(a|s) * A); the H factor lives in the step size.
std::vector<double> rpi_gradient(const AdvantageBatch& batch, const LearnerPolicy& policy);

// Coefficient c with d/dtheta[-min(r A, clip(r, 1-eps, 1+eps) A)] = c * grad log pi.
double clipped_surrogate_coefficient(double ratio, double advantage, double clip);

struct PpoConfig {
  int epochs = 4;
  std::size_t minibatch = 128;
  double clip = 0.2;
  nn::AdamConfig adam{};
  bool normalize_advantages = false;
};

struct PpoStats {
  std::size_t updates = 0;
  double clip_fraction = 0.0;
};

PpoStats ppo_update(LearnerPolicy& policy, const AdvantageBatch& batch, const PpoConfig& config,
                    nn::AdamState& adam, Rng& rng);

}  // namespace rpi
