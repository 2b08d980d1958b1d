#include "rpi/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rpi {

namespace {

std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

double log_softmax_at(std::span<const double> logits, int a) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - peak);
  return logits[static_cast<std::size_t>(a)] - peak - std::log(total);
}

double categorical_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void check_discrete_action(const Action& action, int num_actions) {
  if (action.index < 0 || action.index >= num_actions) {
    throw std::invalid_argument("action index out of range");
  }
}

}  // namespace

std::vector<double> LearnerPolicy::grad_log_prob(const State& state, const Action& action) const {
  std::vector<double> grad(num_params(), 0.0);
  accumulate_grad_log_prob(state, action, 1.0, grad);
  return grad;
}

// -- SoftmaxTabularPolicy --

SoftmaxTabularPolicy::SoftmaxTabularPolicy(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      logits_(static_cast<std::size_t>(num_states) * num_actions, 0.0) {
  if (num_states <= 0 || num_actions <= 0) {
    throw std::invalid_argument("SoftmaxTabularPolicy: empty table");
  }
}

std::span<const double> SoftmaxTabularPolicy::row(int s) const {
  if (s < 0 || s >= num_states_) throw std::invalid_argument("SoftmaxTabularPolicy: bad state id");
  return {logits_.data() + static_cast<std::size_t>(s) * num_actions_,
          static_cast<std::size_t>(num_actions_)};
}

ActResult SoftmaxTabularPolicy::act(const State& state, Rng& rng) const {
  const auto probs = softmax(row(state.id));
  const int a = static_cast<int>(rng.categorical(probs));
  Action action;
  action.index = a;
  return ActResult{std::move(action), log_softmax_at(row(state.id), a)};
}

std::unique_ptr<LearnerPolicy> SoftmaxTabularPolicy::clone() const {
  return std::make_unique<SoftmaxTabularPolicy>(*this);
}

double SoftmaxTabularPolicy::log_prob(const State& state, const Action& action) const {
  check_discrete_action(action, num_actions_);
  return log_softmax_at(row(state.id), action.index);
}

double SoftmaxTabularPolicy::accumulate_grad_log_prob(const State& state, const Action& action,
                                                      double scale, std::span<double> grad) const {
  check_discrete_action(action, num_actions_);
  if (grad.size() != logits_.size()) throw std::invalid_argument("gradient size mismatch");
  const auto logits = row(state.id);
  const auto probs = softmax(logits);
  if (probs[static_cast<std::size_t>(action.index)] == 0.0) {
    throw std::domain_error("grad_log_prob: action has zero probability");
  }
  double* g = grad.data() + static_cast<std::size_t>(state.id) * num_actions_;
  for (int b = 0; b < num_actions_; ++b) {
    g[b] += scale * ((b == action.index ? 1.0 : 0.0) - probs[static_cast<std::size_t>(b)]);
  }
  return log_softmax_at(logits, action.index);
}

double SoftmaxTabularPolicy::entropy(const State& state) const {
  return categorical_entropy(softmax(row(state.id)));
}

std::vector<double> SoftmaxTabularPolicy::action_probs(const State& state) const {
  return softmax(row(state.id));
}

ActionSpace SoftmaxTabularPolicy::action_space() const {
  ActionSpace space;
  space.kind = ActionKind::kDiscrete;
  space.num_actions = num_actions_;
  return space;
}

// -- FeedforwardPolicy --

FeedforwardPolicy::FeedforwardPolicy(std::size_t input_dim, std::vector<std::size_t> hidden,
                                     ActionSpace space, Rng& rng, double initial_log_std)
    : space_(space) {
  head_ = space.kind == ActionKind::kDiscrete ? HeadKind::kCategorical : HeadKind::kGaussian;
  const std::size_t out = head_ == HeadKind::kCategorical ? static_cast<std::size_t>(space.num_actions)
                                                          : static_cast<std::size_t>(space.dim);
  if (out == 0) throw std::invalid_argument("FeedforwardPolicy: empty action space");
  if (hidden.size() > 2) throw std::invalid_argument("FeedforwardPolicy: at most 3 layers");
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  shape_ = nn::MlpShape(std::move(widths));
  const std::size_t extra = head_ == HeadKind::kGaussian ? out : 0;
  params_.assign(shape_.num_params() + extra, 0.0);
  shape_.initialize(std::span<double>(params_).first(shape_.num_params()), rng, 0.01);
  for (std::size_t i = 0; i < extra; ++i) params_[shape_.num_params() + i] = initial_log_std;
}

FeedforwardPolicy FeedforwardPolicy::from_parts(std::vector<std::size_t> widths, ActionSpace space,
                                                std::vector<double> params) {
  FeedforwardPolicy p;
  p.space_ = space;
  p.head_ = space.kind == ActionKind::kDiscrete ? HeadKind::kCategorical : HeadKind::kGaussian;
  p.shape_ = nn::MlpShape(std::move(widths));
  const std::size_t extra = p.head_ == HeadKind::kGaussian ? p.shape_.output_dim() : 0;
  if (params.size() != p.shape_.num_params() + extra) {
    throw std::invalid_argument("FeedforwardPolicy::from_parts: parameter count mismatch");
  }
  p.params_ = std::move(params);
  return p;
}

std::vector<double> FeedforwardPolicy::head_output(const State& state, nn::MlpCache& cache) const {
  shape_.forward(std::span<const double>(params_).first(shape_.num_params()), state.features, cache);
  return cache.output;
}

double FeedforwardPolicy::log_std(std::size_t i) const {
  return std::clamp(params_[shape_.num_params() + i], kMinLogStd, kMaxLogStd);
}

ActResult FeedforwardPolicy::act(const State& state, Rng& rng) const {
  nn::MlpCache cache;
  const std::vector<double> out = head_output(state, cache);
  Action action;
  if (head_ == HeadKind::kCategorical) {
    const auto probs = softmax(out);
    action.index = static_cast<int>(rng.categorical(probs));
    const double lp = log_softmax_at(out, action.index);
    return ActResult{std::move(action), lp};
  }
  double lp = 0.0;
  action.values.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ls = log_std(i);
    const double z = rng.normal();
    action.values[i] = out[i] + std::exp(ls) * z;
    lp += -0.5 * z * z - ls - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return ActResult{std::move(action), lp};
}

std::unique_ptr<LearnerPolicy> FeedforwardPolicy::clone() const {
  return std::make_unique<FeedforwardPolicy>(*this);
}

double FeedforwardPolicy::log_prob(const State& state, const Action& action) const {
  nn::MlpCache cache;
  const std::vector<double> out = head_output(state, cache);
  if (head_ == HeadKind::kCategorical) {
    check_discrete_action(action, space_.num_actions);
    return log_softmax_at(out, action.index);
  }
  if (action.values.size() != out.size()) throw std::invalid_argument("action dimension mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double ls = log_std(i);
    const double z = (action.values[i] - out[i]) / std::exp(ls);
    lp += -0.5 * z * z - ls - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return lp;
}

double FeedforwardPolicy::accumulate_grad_log_prob(const State& state, const Action& action,
                                                   double scale, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
  nn::MlpCache cache;
  const std::vector<double> out = head_output(state, cache);
  const auto net_params = std::span<const double>(params_).first(shape_.num_params());
  std::vector<double> upstream(out.size());
  double lp = 0.0;
  if (head_ == HeadKind::kCategorical) {
    check_discrete_action(action, space_.num_actions);
    const auto probs = softmax(out);
    if (probs[static_cast<std::size_t>(action.index)] == 0.0) {
      throw std::domain_error("grad_log_prob: action has zero probability");
    }
    for (std::size_t b = 0; b < out.size(); ++b) {
      upstream[b] = scale * ((static_cast<int>(b) == action.index ? 1.0 : 0.0) - probs[b]);
    }
    lp = log_softmax_at(out, action.index);
  } else {
    if (action.values.size() != out.size()) throw std::invalid_argument("action dimension mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double raw = params_[shape_.num_params() + i];
      const double ls = log_std(i);
      const double inv_var = std::exp(-2.0 * ls);
      const double diff = action.values[i] - out[i];
      upstream[i] = scale * diff * inv_var;
      // The clamp has zero derivative outside [kMinLogStd, kMaxLogStd].
      if (raw > kMinLogStd && raw < kMaxLogStd) {
        grad[shape_.num_params() + i] += scale * (diff * diff * inv_var - 1.0);
      }
      lp += -0.5 * diff * diff * inv_var - ls - 0.5 * std::log(2.0 * std::numbers::pi);
    }
  }
  shape_.backward(net_params, cache, upstream, grad.first(shape_.num_params()));
  return lp;
}

double FeedforwardPolicy::entropy(const State& state) const {
  if (head_ == HeadKind::kCategorical) return categorical_entropy(action_probs(state));
  double h = 0.0;
  for (std::size_t i = 0; i < shape_.output_dim(); ++i) {
    h += log_std(i) + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  }
  return h;
}

std::vector<double> FeedforwardPolicy::action_probs(const State& state) const {
  if (head_ != HeadKind::kCategorical) {
    throw std::logic_error("action_probs: continuous policy has no probability vector");
  }
  nn::MlpCache cache;
  return softmax(head_output(state, cache));
}

// -- Oracles --

ActResult TableOracle::act(const State& state, Rng& rng) const {
  if (state.id < 0 || state.id >= policy_.num_states()) {
    throw std::invalid_argument("TableOracle: state outside the table");
  }
  Action action;
  action.index = static_cast<int>(rng.categorical(policy_.row(state.id)));
  return ActResult{std::move(action), std::nullopt};
}

ActResult SnapshotOracle::act(const State& state, Rng& rng) const {
  ActResult result = policy_->act(state, rng);
  result.log_prob.reset();
  return result;
}

EpsilonCorruptedOracle::EpsilonCorruptedOracle(std::string name, OracleHandle base, double epsilon,
                                               ActionSpace space)
    : name_(std::move(name)), base_(std::move(base)), epsilon_(epsilon), space_(space) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("EpsilonCorruptedOracle: epsilon must lie in [0,1]");
  }
}

ActResult EpsilonCorruptedOracle::act(const State& state, Rng& rng) const {
  if (epsilon_ > 0.0 && rng.uniform() < epsilon_) {
    Action action;
    if (space_.kind == ActionKind::kDiscrete) {
      action.index = static_cast<int>(rng.uniform_int(static_cast<std::size_t>(space_.num_actions)));
    } else {
      action.values.resize(static_cast<std::size_t>(space_.dim));
      for (double& v : action.values) v = rng.uniform(space_.low, space_.high);
    }
    return ActResult{std::move(action), std::nullopt};
  }
  return base_->act(state, rng);
}

exact::ExactPolicy to_exact_policy(const LearnerPolicy& policy, const TabularEnv& env) {
  const TabularMdp& mdp = env.mdp();
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions());
  for (int s = 0; s < mdp.num_states(); ++s) {
    std::vector<double> row = policy.action_probs(env.make_state(s));
    // Renormalize so rounding in the softmax cannot trip the row-sum check.
    double total = 0.0;
    for (double p : row) total += p;
    for (double p : row) probs.push_back(p / total);
  }
  return exact::ExactPolicy(mdp.num_states(), mdp.num_actions(), std::move(probs));
}

void apply_gradient_step(LearnerPolicy& policy, std::span<const double> gradient,
                         nn::AdamState& state, const nn::AdamConfig& config) {
  if (gradient.size() != policy.num_params()) {
    throw std::invalid_argument("apply_gradient_step: gradient dimension mismatch");
  }
  nn::adam_step(policy.params(), gradient, state, config);
}

}  // namespace rpi
