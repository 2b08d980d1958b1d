#pragma once

#include <span>
#include <vector>

#include "rpi/mdp.hpp"

// Exact dynamic programming over tabular MDPs. Everything here is a pure
// function of its inputs and serves as ground truth for the sampled
// algorithms.
namespace rpi::exact {

// Real value per time-augmented state; terminal entries are 0.
struct ValueTable {
  std::vector<double> values;

  double operator[](int s) const { return values[static_cast<std::size_t>(s)]; }
  double& operator[](int s) { return values[static_cast<std::size_t>(s)]; }
  std::size_t size() const { return values.size(); }
};

// Real value per (state, action).
struct QTable {
  int num_actions = 0;
  std::vector<double> values;

  double operator()(int s, int a) const {
    return values[static_cast<std::size_t>(s) * num_actions + a];
  }
  double& operator()(int s, int a) { return values[static_cast<std::size_t>(s) * num_actions + a]; }
};

// Action distribution per state.
class ExactPolicy {
 public:
  ExactPolicy(int num_states, int num_actions, std::vector<double> probs);

  static ExactPolicy uniform(const TabularMdp& mdp);
  static ExactPolicy deterministic(const TabularMdp& mdp, std::span<const int> actions);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  std::span<const double> row(int s) const {
    return {probs_.data() + static_cast<std::size_t>(s) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  double prob(int s, int a) const { return probs_[static_cast<std::size_t>(s) * num_actions_ + a]; }
  void set_row(int s, std::span<const double> row);

  bool operator==(const ExactPolicy&) const = default;

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

ValueTable zero_values(const TabularMdp& mdp);

// Backward induction of V(s) = sum_a pi(a|s) [r(s,a) + E V(s')], V(terminal) = 0.
ValueTable evaluate_policy(const TabularMdp& mdp, const ExactPolicy& policy);

// E_{s ~ d0} f(s).
double expect_initial(const TabularMdp& mdp, const ValueTable& f);

// Q^f(s,a) = r(s,a) + E_{s'} f(s').
QTable generalized_q(const TabularMdp& mdp, const ValueTable& f);

// A^f(s,a) = Q^f(s,a) - f(s).
QTable generalized_advantage(const TabularMdp& mdp, const ValueTable& f);

// sum_a pi(a|s) table(s,a).
double expect_policy(const QTable& table, const ExactPolicy& policy, int s);

struct BaselineTable {
  ValueTable values;
  std::vector<int> best_index;  // lowest index among the maximizers
};

// Pointwise maximum over precomputed value tables.
BaselineTable pointwise_max(std::span<const ValueTable> tables);

// f+(s) = max_k V^k(s) over the extended set (oracles followed by the learner).
BaselineTable f_plus_exact(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set);

// Copies, per state, the action distribution of the member with the largest value.
ExactPolicy max_plus_following(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set);

// Dirac policy on argmax_a A+(s,a).
ExactPolicy max_plus_aggregation(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set);

// Oracle-only counterparts; f^max is f_plus_exact over the oracles alone.
BaselineTable f_max_exact(const TabularMdp& mdp, std::span<const ExactPolicy> oracles);
ExactPolicy max_following(const TabularMdp& mdp, std::span<const ExactPolicy> oracles);
ExactPolicy max_aggregation_exact(const TabularMdp& mdp, std::span<const ExactPolicy> oracles);

// Dirac policy taking argmax_a table(s,a), ties to the lowest action index.
ExactPolicy greedy_policy(const TabularMdp& mdp, const QTable& table);

// d^pi = (1/H) sum_t d_t^pi over time-augmented states.
std::vector<double> state_visitation(const TabularMdp& mdp, const ExactPolicy& policy);

// |V^pi(d0) - f(d0) - H E_{s~d^pi}[A^f(s,pi)]|.
double pdl_residual(const TabularMdp& mdp, const ExactPolicy& policy, const ValueTable& f);

// l_n(pi) = -H E_{s~d^{pi_n}} E_{a~pi}[A+(s,a)] with A+ taken against `f_plus`.
double online_loss_exact(const TabularMdp& mdp, const ExactPolicy& roll_in_policy,
                         const ExactPolicy& policy, const ValueTable& f_plus);

// Gradient of online_loss_exact with respect to softmax logits of `policy`
// (row-major |S| x |A|), holding the roll-in distribution fixed.
std::vector<double> online_loss_softmax_gradient(const TabularMdp& mdp,
                                                 const ExactPolicy& roll_in_policy,
                                                 const ExactPolicy& policy,
                                                 const ValueTable& f_plus);

// Delta_N = -(1/N) sum_n l_n(pi_agg_m), pi_agg_m built from `extended_set_at_m`.
double delta_n(const TabularMdp& mdp, std::span<const ExactPolicy> extended_set_at_m,
               std::span<const ExactPolicy> rounds);

enum class Objective { kMaximize, kMinimize };

struct OptimalSolution {
  ExactPolicy policy;
  ValueTable values;
};

// Finite-horizon value iteration; ties broken toward the lowest action.
OptimalSolution solve_optimal(const TabularMdp& mdp, Objective objective = Objective::kMaximize);

}  // namespace rpi::exact
