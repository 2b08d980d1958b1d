#include "rpi/exact.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rpi::exact {

namespace {

constexpr double kRowTolerance = 1e-12;

void check_policy(const TabularMdp& mdp, const ExactPolicy& policy) {
  if (policy.num_states() != mdp.num_states() || policy.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("policy shape does not match MDP");
  }
}

void check_values(const TabularMdp& mdp, const ValueTable& f) {
  if (f.size() != static_cast<std::size_t>(mdp.num_states())) {
    throw std::invalid_argument("value table size does not match MDP");
  }
}

double expected_next(const TabularMdp& mdp, const ValueTable& f, int s, int a) {
  double total = 0.0;
  for (const Outcome& o : mdp.outcomes(s, a)) total += o.prob * (mdp.is_terminal(o.next) ? 0.0 : f[o.next]);
  return total;
}

}  // namespace

ExactPolicy::ExactPolicy(int num_states, int num_actions, std::vector<double> probs)
    : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
  if (probs_.size() != static_cast<std::size_t>(num_states_) * num_actions_) {
    throw std::invalid_argument("ExactPolicy: table size mismatch");
  }
  for (int s = 0; s < num_states_; ++s) {
    double total = 0.0;
    for (double p : row(s)) {
      if (p < 0.0) throw std::invalid_argument("ExactPolicy: negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > kRowTolerance) {
      throw std::invalid_argument("ExactPolicy: row does not sum to 1");
    }
  }
}

ExactPolicy ExactPolicy::uniform(const TabularMdp& mdp) {
  const auto n = static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions();
  return ExactPolicy(mdp.num_states(), mdp.num_actions(),
                     std::vector<double>(n, 1.0 / mdp.num_actions()));
}

ExactPolicy ExactPolicy::deterministic(const TabularMdp& mdp, std::span<const int> actions) {
  if (actions.size() != static_cast<std::size_t>(mdp.num_states())) {
    throw std::invalid_argument("ExactPolicy::deterministic: one action per state required");
  }
  std::vector<double> probs(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions(), 0.0);
  for (int s = 0; s < mdp.num_states(); ++s) {
    const int a = actions[static_cast<std::size_t>(s)];
    if (a < 0 || a >= mdp.num_actions()) throw std::invalid_argument("action out of range");
    probs[static_cast<std::size_t>(s) * mdp.num_actions() + a] = 1.0;
  }
  return ExactPolicy(mdp.num_states(), mdp.num_actions(), std::move(probs));
}

void ExactPolicy::set_row(int s, std::span<const double> row) {
  if (row.size() != static_cast<std::size_t>(num_actions_)) {
    throw std::invalid_argument("ExactPolicy::set_row: width mismatch");
  }
  std::copy(row.begin(), row.end(), probs_.begin() + static_cast<std::ptrdiff_t>(s) * num_actions_);
}

ValueTable zero_values(const TabularMdp& mdp) {
  return ValueTable{std::vector<double>(static_cast<std::size_t>(mdp.num_states()), 0.0)};
}

ValueTable evaluate_policy(const TabularMdp& mdp, const ExactPolicy& policy) {
  check_policy(mdp, policy);
  ValueTable v = zero_values(mdp);
  for (int t = mdp.horizon() - 1; t >= 0; --t) {
    for (int s : mdp.states_at(t)) {
      double total = 0.0;
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const double p = policy.prob(s, a);
        if (p == 0.0) continue;
        total += p * (mdp.reward(s, a) + expected_next(mdp, v, s, a));
      }
      v[s] = total;
    }
  }
  return v;
}

double expect_initial(const TabularMdp& mdp, const ValueTable& f) {
  check_values(mdp, f);
  double total = 0.0;
  const auto d0 = mdp.initial_dist();
  for (int s = 0; s < mdp.num_states(); ++s) total += d0[s] * f[s];
  return total;
}

QTable generalized_q(const TabularMdp& mdp, const ValueTable& f) {
  check_values(mdp, f);
  QTable q{mdp.num_actions(),
           std::vector<double>(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions())};
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      q(s, a) = mdp.is_terminal(s) ? 0.0 : mdp.reward(s, a) + expected_next(mdp, f, s, a);
    }
  }
  return q;
}

QTable generalized_advantage(const TabularMdp& mdp, const ValueTable& f) {
  QTable adv = generalized_q(mdp, f);
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (int a = 0; a < mdp.num_actions(); ++a) adv(s, a) -= f[s];
  }
  return adv;
}

double expect_policy(const QTable& table, const ExactPolicy& policy, int s) {
  double total = 0.0;
  for (int a = 0; a < policy.num_actions(); ++a) total += policy.prob(s, a) * table(s, a);
  return total;
}

BaselineTable pointwise_max(std::span<const ValueTable> tables) {
  if (tables.empty()) throw std::invalid_argument("pointwise_max: empty policy set");
  const std::size_t n = tables.front().size();
  BaselineTable out{ValueTable{std::vector<double>(n)}, std::vector<int>(n, 0)};
  for (std::size_t s = 0; s < n; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (std::size_t k = 0; k < tables.size(); ++k) {
      const double v = tables[k].values[s];
      if (v > best) {
        best = v;
        best_k = static_cast<int>(k);
      }
    }
    out.values.values[s] = best;
    out.best_index[s] = best_k;
  }
  return out;
}

BaselineTable f_plus_exact(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set) {
  std::vector<ValueTable> tables;
  tables.reserve(extended_set.size());
  for (const ExactPolicy& p : extended_set) tables.push_back(evaluate_policy(mdp, p));
  return pointwise_max(tables);
}

ExactPolicy max_plus_following(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set) {
  const BaselineTable baseline = f_plus_exact(mdp, extended_set);
  ExactPolicy out = extended_set.front();
  for (int s = 0; s < mdp.num_states(); ++s) {
    out.set_row(s, extended_set[static_cast<std::size_t>(baseline.best_index[s])].row(s));
  }
  return out;
}

ExactPolicy greedy_policy(const TabularMdp& mdp, const QTable& table) {
  std::vector<int> actions(static_cast<std::size_t>(mdp.num_states()), 0);
  for (int s = 0; s < mdp.num_states(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.num_actions(); ++a) {
      if (table(s, a) > best) {
        best = table(s, a);
        actions[static_cast<std::size_t>(s)] = a;
      }
    }
  }
  return ExactPolicy::deterministic(mdp, actions);
}

ExactPolicy max_plus_aggregation(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set) {
  const BaselineTable baseline = f_plus_exact(mdp, extended_set);
  return greedy_policy(mdp, generalized_advantage(mdp, baseline.values));
}

BaselineTable f_max_exact(const TabularMdp& mdp, std::span<const ExactPolicy> oracles) {
  return f_plus_exact(mdp, oracles);
}

ExactPolicy max_following(const TabularMdp& mdp, std::span<const ExactPolicy> oracles) {
  return max_plus_following(mdp, oracles);
}

ExactPolicy max_aggregation_exact(const TabularMdp& mdp, std::span<const ExactPolicy> oracles) {
  return max_plus_aggregation(mdp, oracles);
}

std::vector<double> state_visitation(const TabularMdp& mdp, const ExactPolicy& policy) {
  check_policy(mdp, policy);
  // Time augmentation keeps each d_t on disjoint support, so one forward
  // sweep in step order accumulates sum_t d_t directly.
  std::vector<double> mass(mdp.initial_dist().begin(), mdp.initial_dist().end());
  for (int t = 0; t + 1 < mdp.horizon(); ++t) {
    for (int s : mdp.states_at(t)) {
      const double m = mass[static_cast<std::size_t>(s)];
      if (m == 0.0) continue;
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const double p = policy.prob(s, a);
        if (p == 0.0) continue;
        for (const Outcome& o : mdp.outcomes(s, a)) mass[static_cast<std::size_t>(o.next)] += m * p * o.prob;
      }
    }
  }
  const double inv_h = 1.0 / mdp.horizon();
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) {
      mass[static_cast<std::size_t>(s)] = 0.0;
    } else {
      mass[static_cast<std::size_t>(s)] *= inv_h;
    }
  }
  return mass;
}

double pdl_residual(const TabularMdp& mdp, const ExactPolicy& policy, const ValueTable& f) {
  const ValueTable v = evaluate_policy(mdp, policy);
  const QTable adv = generalized_advantage(mdp, f);
  const std::vector<double> d = state_visitation(mdp, policy);
  double visit_adv = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (d[static_cast<std::size_t>(s)] == 0.0) continue;
    visit_adv += d[static_cast<std::size_t>(s)] * expect_policy(adv, policy, s);
  }
  const double lhs = expect_initial(mdp, v) - expect_initial(mdp, f);
  return std::abs(lhs - mdp.horizon() * visit_adv);
}

double online_loss_exact(const TabularMdp& mdp, const ExactPolicy& roll_in_policy,
                         const ExactPolicy& policy, const ValueTable& f_plus) {
  check_policy(mdp, policy);
  const QTable adv = generalized_advantage(mdp, f_plus);
  const std::vector<double> d = state_visitation(mdp, roll_in_policy);
  double total = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (d[static_cast<std::size_t>(s)] == 0.0) continue;
    total += d[static_cast<std::size_t>(s)] * expect_policy(adv, policy, s);
  }
  return -mdp.horizon() * total;
}

std::vector<double> online_loss_softmax_gradient(const TabularMdp& mdp,
                                                 const ExactPolicy& roll_in_policy,
                                                 const ExactPolicy& policy,
                                                 const ValueTable& f_plus) {
  check_policy(mdp, policy);
  const QTable adv = generalized_advantage(mdp, f_plus);
  const std::vector<double> d = state_visitation(mdp, roll_in_policy);
  std::vector<double> grad(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions(), 0.0);
  for (int s = 0; s < mdp.num_states(); ++s) {
    const double w = d[static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    const double mean_adv = expect_policy(adv, policy, s);
    for (int b = 0; b < mdp.num_actions(); ++b) {
      grad[static_cast<std::size_t>(s) * mdp.num_actions() + b] =
          -mdp.horizon() * w * policy.prob(s, b) * (adv(s, b) - mean_adv);
    }
  }
  return grad;
}

double delta_n(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set_at_m,
               std::span<const ExactPolicy> rounds) {
  if (rounds.empty()) throw std::invalid_argument("delta_n: need at least one round");
  const BaselineTable baseline = f_plus_exact(mdp, extended_set_at_m);
  const ExactPolicy benchmark = greedy_policy(mdp, generalized_advantage(mdp, baseline.values));
  double total = 0.0;
  for (const ExactPolicy& pi_n : rounds) total += online_loss_exact(mdp, pi_n, benchmark, baseline.values);
  return -total / static_cast<double>(rounds.size());
}

OptimalSolution solve_optimal(const TabularMdp& mdp, Objective objective) {
  ValueTable v = zero_values(mdp);
  std::vector<int> actions(static_cast<std::size_t>(mdp.num_states()), 0);
  const double sign = objective == Objective::kMaximize ? 1.0 : -1.0;
  for (int t = mdp.horizon() - 1; t >= 0; --t) {
    for (int s : mdp.states_at(t)) {
      double best = -std::numeric_limits<double>::infinity();
      double best_value = 0.0;
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const double q = mdp.reward(s, a) + expected_next(mdp, v, s, a);
        if (sign * q > best) {
          best = sign * q;
          best_value = q;
          actions[static_cast<std::size_t>(s)] = a;
        }
      }
      v[s] = best_value;
    }
  }
  return OptimalSolution{ExactPolicy::deterministic(mdp, actions), std::move(v)};
}

}  // namespace rpi::exact
