#include "rpi/value_ensemble.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rpi {

// -- ValueBuffer --

ValueBuffer::ValueBuffer(std::string tag, std::size_t capacity)
    : tag_(std::move(tag)), capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ValueBuffer: capacity must be positive");
}

void ValueBuffer::append(const Trajectory& traj, double discount) {
  std::size_t from = 0;
  if (traj.switch_step) {
    const std::string suffix = ">" + tag_;
    const std::string& behavior = traj.behavior_tag;
    if (behavior.size() < suffix.size() ||
        behavior.compare(behavior.size() - suffix.size(), suffix.size(), suffix) != 0) {
      throw std::invalid_argument("ValueBuffer '" + tag_ + "': roll-out policy is '" + behavior + "'");
    }
    for (const Transition& tr : traj.transitions) {
      if (tr.step >= *traj.switch_step) break;
      ++from;
    }
  } else if (traj.behavior_tag != tag_) {
    throw std::invalid_argument("ValueBuffer '" + tag_ + "': trajectory generated by '" +
                                traj.behavior_tag + "'");
  }
  const std::vector<double> targets = returns_to_go(traj, discount);
  for (std::size_t i = from; i < traj.size(); ++i) {
    if (samples_.size() == capacity_) samples_.pop_front();
    samples_.push_back(ValueSample{traj.transitions[i].state, targets[i]});
  }
}

// -- ValueEnsemble --

Prediction summarize(std::span<const double> member_values) {
  if (member_values.empty()) return {};
  const double n = static_cast<double>(member_values.size());
  const double mean = std::accumulate(member_values.begin(), member_values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : member_values) var += (v - mean) * (v - mean);
  return Prediction{mean, std::sqrt(var / n)};
}

ValueEnsemble::ValueEnsemble(EnsembleConfig config, Rng init_rng) : config_(std::move(config)) {
  if (config_.members == 0) throw std::invalid_argument("ValueEnsemble: need at least one member");
  members_.resize(config_.members);
  for (std::size_t k = 0; k < members_.size(); ++k) {
    Rng rng = init_rng.split(k);
    Member& m = members_[k];
    if (config_.kind == MemberKind::kTabular) {
      if (config_.num_states <= 0) throw std::invalid_argument("ValueEnsemble: tabular member needs states");
      m.prior.resize(static_cast<std::size_t>(config_.num_states));
      for (double& v : m.prior) v = config_.init_scale * rng.normal();
      m.table = m.prior;
    } else {
      if (config_.input_dim == 0) throw std::invalid_argument("ValueEnsemble: mlp member needs inputs");
      std::vector<std::size_t> widths{config_.input_dim};
      widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
      widths.push_back(1);
      m.net = nn::Mlp(std::move(widths), rng);
    }
  }
}

FitReport ValueEnsemble::fit(const ValueBuffer& buffer, Rng& rng) {
  const std::vector<ValueSample> data(buffer.samples().begin(), buffer.samples().end());
  return fit(data, rng);
}

FitReport ValueEnsemble::fit(std::span<const ValueSample> buffer, Rng& rng) {
  if (buffer.empty()) return FitReport{true, 0};
  for (std::size_t k = 0; k < members_.size(); ++k) {
    Rng member_rng = rng.split(k);
    std::vector<std::size_t> picks(buffer.size());
    for (std::size_t& p : picks) p = member_rng.uniform_int(buffer.size());
    if (config_.kind == MemberKind::kTabular) {
      fit_tabular(members_[k], buffer, picks);
    } else {
      fit_mlp(members_[k], buffer, std::move(picks), member_rng);
    }
  }
  // Advance the caller's stream so consecutive fits draw fresh resamples.
  rng.next_u64();
  return FitReport{false, buffer.size()};
}

void ValueEnsemble::fit_tabular(Member& member, std::span<const ValueSample> data,
                                std::span<const std::size_t> picks) const {
  // Least squares for a per-state table is the per-state sample mean.
  std::vector<double> sums(member.prior.size(), 0.0);
  std::vector<long> counts(member.prior.size(), 0);
  for (std::size_t p : picks) {
    const ValueSample& sample = data[p];
    if (sample.state.id < 0 || static_cast<std::size_t>(sample.state.id) >= sums.size()) {
      throw std::invalid_argument("ValueEnsemble: sample state outside the table");
    }
    sums[static_cast<std::size_t>(sample.state.id)] += sample.target;
    ++counts[static_cast<std::size_t>(sample.state.id)];
  }
  for (std::size_t s = 0; s < sums.size(); ++s) {
    member.table[s] = counts[s] > 0 ? sums[s] / static_cast<double>(counts[s]) : member.prior[s];
  }
}

void ValueEnsemble::fit_mlp(Member& member, std::span<const ValueSample> data,
                            std::vector<std::size_t> picks, Rng& rng) const {
  nn::AdamConfig adam;
  adam.learning_rate = config_.learning_rate;
  const std::size_t batch = std::max<std::size_t>(1, config_.minibatch);
  std::vector<double> grad(member.net.num_params());
  nn::MlpCache cache;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (std::size_t i = picks.size(); i > 1; --i) std::swap(picks[i - 1], picks[rng.uniform_int(i)]);
    for (std::size_t start = 0; start < picks.size(); start += batch) {
      const std::size_t end = std::min(picks.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const ValueSample& sample = data[picks[i]];
        member.net.forward(sample.state.features, cache);
        const double residual = cache.output[0] - sample.target;
        const double upstream[1] = {2.0 * residual * scale};
        member.net.backward(cache, upstream, grad);
      }
      nn::adam_step(member.net.params(), grad, member.adam, adam);
    }
  }
}

double ValueEnsemble::member_value(std::size_t k, const State& state) const {
  const Member& m = members_.at(k);
  if (config_.kind == MemberKind::kTabular) {
    if (state.id < 0 || static_cast<std::size_t>(state.id) >= m.table.size()) {
      throw std::invalid_argument("ValueEnsemble: state outside the table");
    }
    return m.table[static_cast<std::size_t>(state.id)];
  }
  return m.net.predict(state.features)[0];
}

Prediction ValueEnsemble::predict(const State& state) const {
  std::vector<double> values(members_.size());
  for (std::size_t k = 0; k < members_.size(); ++k) values[k] = member_value(k, state);
  return summarize(values);
}

double ValueEnsemble::ucb(const State& state) const {
  const Prediction p = predict(state);
  return p.mean + p.spread;
}

double ValueEnsemble::lcb(const State& state) const {
  const Prediction p = predict(state);
  return p.mean - p.spread;
}

// -- McTabularValue --

McTabularValue::McTabularValue(int num_states, double delta)
    : counts_(static_cast<std::size_t>(num_states), 0),
      means_(static_cast<std::size_t>(num_states), 0.0),
      delta_(delta) {
  if (num_states <= 0) throw std::invalid_argument("McTabularValue: need states");
  if (!(delta > 0.0 && delta <= 2.0)) throw std::invalid_argument("McTabularValue: delta must lie in (0, 2]");
}

void McTabularValue::update(const Trajectory& traj, double discount) {
  const std::vector<double> targets = returns_to_go(traj, discount);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const int s = traj.transitions[i].state.id;
    if (s < 0 || static_cast<std::size_t>(s) >= counts_.size()) {
      throw std::invalid_argument("McTabularValue: state outside the table");
    }
    const auto idx = static_cast<std::size_t>(s);
    ++counts_[idx];
    means_[idx] += (targets[i] - means_[idx]) / static_cast<double>(counts_[idx]);
  }
}

double McTabularValue::hoeffding_bonus(long count, int horizon, double delta) {
  if (count <= 0) return std::numeric_limits<double>::infinity();
  const double h = static_cast<double>(horizon);
  return std::sqrt(2.0 * h * h * std::log(2.0 / delta) / static_cast<double>(count));
}

double McTabularValue::ucb(int s, int horizon) const {
  const long n = count(s);
  if (n == 0) return std::numeric_limits<double>::infinity();
  return mean(s) + hoeffding_bonus(n, horizon, delta_);
}

double McTabularValue::lcb(int s, int horizon) const {
  const long n = count(s);
  if (n == 0) return -std::numeric_limits<double>::infinity();
  return mean(s) - hoeffding_bonus(n, horizon, delta_);
}

// -- pretraining --

std::size_t pretrain(ValueEnsemble& ensemble, ValueBuffer& buffer, const Environment& env,
                     const ActingPolicy& oracle, int episodes, Rng& rng, double discount) {
  if (episodes <= 0) return 0;
  std::size_t steps = 0;
  for (int e = 0; e < episodes; ++e) {
    const Trajectory traj = rollout(env, oracle, std::nullopt, rng);
    steps += traj.size();
    buffer.append(traj, discount);
  }
  ensemble.fit(buffer, rng);
  return steps;
}

}  // namespace rpi
