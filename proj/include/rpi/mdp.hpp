#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpi/rng.hpp"

namespace rpi {

// A state as seen by policies and value approximators. Tabular environments
// set `id` to the time-augmented state index; feature environments leave it
// at -1. `step` is the timestep at which the state is occupied.
struct State {
  int id = -1;
  int step = 0;
  std::vector<double> features;
};

struct Action {
  int index = -1;              // discrete action spaces
  std::vector<double> values;  // continuous action spaces
};

struct Transition {
  State state;
  Action action;
  double reward = 0.0;
  State next_state;
  int step = 0;
  bool last = false;  // next_state sits at step H
  std::optional<double> log_prob;
};

struct Trajectory {
  std::vector<Transition> transitions;
  std::string behavior_tag;
  std::optional<int> switch_step;

  std::size_t size() const { return transitions.size(); }
  bool empty() const { return transitions.empty(); }
};

struct Outcome {
  int next;
  double prob;
};

// Finite-horizon MDP over time-augmented states. Every non-terminal state
// belongs to exactly one step t < H and only transitions into states of step
// t + 1; states at step H are absorbing terminals with zero reward.
class TabularMdp {
 public:
  TabularMdp(int num_actions, int horizon, std::vector<int> step_of_state,
             std::vector<std::vector<Outcome>> transitions, std::vector<double> reward,
             std::vector<double> initial_dist);

  int num_states() const { return static_cast<int>(step_of_state_.size()); }
  int num_actions() const { return num_actions_; }
  int horizon() const { return horizon_; }
  int step(int s) const { return step_of_state_[s]; }
  bool is_terminal(int s) const { return step_of_state_[s] >= horizon_; }

  std::span<const Outcome> outcomes(int s, int a) const { return transitions_[index(s, a)]; }
  double reward(int s, int a) const { return reward_[index(s, a)]; }
  std::span<const double> initial_dist() const { return initial_dist_; }
  // States occupied at step t, t in [0, H].
  std::span<const int> states_at(int t) const { return states_at_step_[t]; }

  int sample_next(int s, int a, Rng& rng) const;
  int sample_initial(Rng& rng) const;

  // Same dynamics and d0, different reward table.
  TabularMdp with_rewards(std::vector<double> reward) const;

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * num_actions_ + static_cast<std::size_t>(a);
  }
  void validate() const;

  int num_actions_;
  int horizon_;
  std::vector<int> step_of_state_;
  std::vector<std::vector<Outcome>> transitions_;
  std::vector<double> reward_;
  std::vector<double> initial_dist_;
  std::vector<std::vector<int>> states_at_step_;
};

enum class ActionKind { kDiscrete, kContinuous };

struct ActionSpace {
  ActionKind kind = ActionKind::kDiscrete;
  int num_actions = 0;  // discrete
  int dim = 0;          // continuous
  double low = -1.0;
  double high = 1.0;
};

struct StepResult {
  State next;
  double reward = 0.0;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int horizon() const = 0;
  virtual std::size_t feature_dim() const = 0;
  virtual ActionSpace action_space() const = 0;
  // Draws a start state from d0 at step 0.
  virtual State reset(Rng& rng) const = 0;
  virtual StepResult step(const State& state, const Action& action, Rng& rng) const = 0;
  // Non-null for environments backed by an explicit tabular model.
  virtual const TabularMdp* tabular() const { return nullptr; }
};

// Wraps a TabularMdp with a per-state feature matrix for function approximators.
class TabularEnv final : public Environment {
 public:
  TabularEnv(std::string name, TabularMdp mdp, std::vector<std::vector<double>> features);

  std::string name() const override { return name_; }
  int horizon() const override { return mdp_.horizon(); }
  std::size_t feature_dim() const override { return feature_dim_; }
  ActionSpace action_space() const override;
  State reset(Rng& rng) const override;
  StepResult step(const State& state, const Action& action, Rng& rng) const override;
  const TabularMdp* tabular() const override { return &mdp_; }

  State make_state(int id) const;
  const TabularMdp& mdp() const { return mdp_; }

 private:
  std::string name_;
  TabularMdp mdp_;
  std::vector<std::vector<double>> features_;
  std::size_t feature_dim_;
};

struct ActResult {
  Action action;
  std::optional<double> log_prob;
};

// Anything that can pick actions: black-box oracles and learner policies.
class ActingPolicy {
 public:
  virtual ~ActingPolicy() = default;
  virtual ActResult act(const State& state, Rng& rng) const = 0;
  virtual std::string tag() const = 0;
};

// Rolls `policy` from `start` (or a d0 draw at step 0) to the horizon.
Trajectory rollout(const Environment& env, const ActingPolicy& policy,
                   const std::optional<State>& start, Rng& rng);

// Appends transitions generated by `policy` from `state` until step `until`;
// `state` is left at the first unexecuted step.
void continue_rollout(const Environment& env, const ActingPolicy& policy, State& state,
                      int until, Rng& rng, Trajectory& out);

// Steps [0, switch_step) follow `roll_in`, steps [switch_step, H) follow `roll_out`.
Trajectory rollout_switch(const Environment& env, const ActingPolicy& roll_in,
                          const ActingPolicy& roll_out, int switch_step, Rng& rng);

// Sum of discount^j * r_j over the trajectory.
double empirical_return(const Trajectory& traj, double discount);

// Discounted reward-to-go for every step of the trajectory.
std::vector<double> returns_to_go(const Trajectory& traj, double discount = 1.0);

}  // namespace rpi
