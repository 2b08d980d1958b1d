#include "rpi/rpg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rpi {

BaselineEstimate f_plus_from_predictions(std::span<const Prediction> predictions, double threshold) {
  if (predictions.empty()) throw std::invalid_argument("f_plus_hat: no candidates");
  const std::size_t learner = predictions.size() - 1;
  std::size_t best = 0;
  for (std::size_t k = 1; k < predictions.size(); ++k) {
    if (predictions[k].mean > predictions[best].mean) best = k;
  }
  if (predictions[best].spread > threshold) return {predictions[learner].mean, true};
  return {predictions[best].mean, best == learner};
}

BaselineEstimate f_plus_hat(const ExtendedOracleSet& set, const State& state, double threshold) {
  std::vector<Prediction> predictions(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) predictions[k] = set.ensemble(k).predict(state);
  return f_plus_from_predictions(predictions, threshold);
}

double f_max_hat(const ExtendedOracleSet& set, const State& state) {
  if (set.num_oracles() == 0) return set.ensemble(set.learner_index()).predict(state).mean;
  double best = set.ensemble(0).predict(state).mean;
  for (std::size_t k = 1; k < set.num_oracles(); ++k) {
    best = std::max(best, set.ensemble(k).predict(state).mean);
  }
  return best;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double bootstrap, double gamma, double lambda) {
  if (rewards.size() != values.size()) throw std::invalid_argument("gae: size mismatch");
  std::vector<double> adv(rewards.size());
  double running = 0.0;
  double next_value = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    const double delta = rewards[i] + gamma * next_value - values[i];
    running = delta + gamma * lambda * running;
    adv[i] = running;
    next_value = values[i];
  }
  return adv;
}

std::vector<double> baseline_values(const Trajectory& traj, const ValueFn& f) {
  if (traj.empty()) throw std::invalid_argument("baseline_values: empty trajectory");
  std::vector<double> values;
  values.reserve(traj.size() + 1);
  for (const Transition& tr : traj.transitions) values.push_back(f(tr.state));
  const Transition& end = traj.transitions.back();
  values.push_back(end.last ? 0.0 : f(end.next_state));
  return values;
}

namespace {

std::vector<double> rewards_of(const Trajectory& traj) {
  std::vector<double> r;
  r.reserve(traj.size());
  for (const Transition& tr : traj.transitions) r.push_back(tr.reward);
  return r;
}

}  // namespace

std::vector<double> gae_plus(const Trajectory& traj, const ValueFn& f, double gamma, double lambda) {
  const std::vector<double> values = baseline_values(traj, f);
  const std::vector<double> rewards = rewards_of(traj);
  return gae(rewards, std::span(values).first(traj.size()), values.back(), gamma, lambda);
}

double AdvantageBatch::mean_advantage() const {
  if (samples.empty()) return 0.0;
  double sum = 0.0;
  for (const AdvantageSample& s : samples) sum += s.advantage;
  return sum / static_cast<double>(samples.size());
}

AdvantageBatch build_batch(std::span<const Trajectory> trajectories, const ValueFn& f, double gamma,
                           double lambda) {
  AdvantageBatch batch;
  batch.gamma = gamma;
  batch.lambda = lambda;
  for (const Trajectory& traj : trajectories) {
    if (traj.empty()) continue;
    if (traj.switch_step) throw std::invalid_argument("build_batch: roll-in/roll-out trajectory");
    const std::vector<double> values = baseline_values(traj, f);
    const std::vector<double> adv =
        gae(rewards_of(traj), std::span(values).first(traj.size()), values.back(), gamma, lambda);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const Transition& tr = traj.transitions[i];
      if (!tr.log_prob) throw std::invalid_argument("build_batch: transition without log-prob");
      batch.samples.push_back({tr.state, tr.action, *tr.log_prob, adv[i], values[i]});
    }
  }
  return batch;
}

std::vector<double> rpi_gradient(const AdvantageBatch& batch, const LearnerPolicy& policy) {
  std::vector<double> grad(policy.num_params(), 0.0);
  if (batch.samples.empty()) return grad;
  const double scale = -1.0 / static_cast<double>(batch.samples.size());
  for (const AdvantageSample& s : batch.samples) {
    if (s.advantage == 0.0) continue;
    policy.accumulate_grad_log_prob(s.state, s.action, scale * s.advantage, grad);
  }
  return grad;
}

double clipped_surrogate_coefficient(double ratio, double advantage, double clip) {
  if (advantage > 0.0 && ratio > 1.0 + clip) return 0.0;
  if (advantage < 0.0 && ratio < 1.0 - clip) return 0.0;
  return -advantage * ratio;
}

PpoStats ppo_update(LearnerPolicy& policy, const AdvantageBatch& batch, const PpoConfig& config,
                    nn::AdamState& adam, Rng& rng) {
  PpoStats stats;
  const std::size_t n = batch.samples.size();
  if (n == 0) return stats;
  if (config.epochs < 0 || config.minibatch == 0 || config.clip < 0.0) {
    throw std::invalid_argument("ppo_update: bad configuration");
  }

  std::vector<double> advantages(n);
  for (std::size_t i = 0; i < n; ++i) advantages[i] = batch.samples[i].advantage;
  if (config.normalize_advantages && n > 1) {
    const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : advantages) a = (a - mean) / (sd + 1e-8);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(policy.num_params());
  std::size_t clipped = 0;
  std::size_t seen = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t start = 0; start < n; start += config.minibatch) {
      const std::size_t end = std::min(n, start + config.minibatch);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double inv = 1.0 / static_cast<double>(end - start);
      bool any = false;
      for (std::size_t j = start; j < end; ++j) {
        const AdvantageSample& s = batch.samples[order[j]];
        const double adv = advantages[order[j]];
        ++seen;
        if (adv == 0.0) continue;
        const double ratio = std::exp(policy.log_prob(s.state, s.action) - s.log_prob_old);
        const double c = clipped_surrogate_coefficient(ratio, adv, config.clip);
        if (c == 0.0) {
          ++clipped;
          continue;
        }
        policy.accumulate_grad_log_prob(s.state, s.action, c * inv, grad);
        any = true;
      }
      // Skipping all-zero minibatches keeps parameters fixed; Adam would
      // otherwise keep moving them on stale momentum.
      if (!any) continue;
      apply_gradient_step(policy, grad, adam, config.adam);
      ++stats.updates;
    }
  }
  stats.clip_fraction = seen > 0 ? static_cast<double>(clipped) / static_cast<double>(seen) : 0.0;
  return stats;
}

}  // namespace rpi
