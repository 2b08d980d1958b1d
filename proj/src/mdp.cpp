#include "rpi/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace rpi {

namespace {

constexpr double kRowTolerance = 1e-12;

}  // namespace

TabularMdp::TabularMdp(int num_actions, int horizon, std::vector<int> step_of_state,
                       std::vector<std::vector<Outcome>> transitions, std::vector<double> reward,
                       std::vector<double> initial_dist)
    : num_actions_(num_actions),
      horizon_(horizon),
      step_of_state_(std::move(step_of_state)),
      transitions_(std::move(transitions)),
      reward_(std::move(reward)),
      initial_dist_(std::move(initial_dist)) {
  if (num_actions_ <= 0) throw std::invalid_argument("TabularMdp: need at least one action");
  if (horizon_ <= 0) throw std::invalid_argument("TabularMdp: horizon must be positive");
  states_at_step_.assign(static_cast<std::size_t>(horizon_) + 1, {});
  for (int s = 0; s < num_states(); ++s) {
    const int t = step_of_state_[s];
    if (t < 0 || t > horizon_) throw std::invalid_argument("TabularMdp: state step out of range");
    states_at_step_[t].push_back(s);
  }
  validate();
}

void TabularMdp::validate() const {
  const auto n = static_cast<std::size_t>(num_states());
  const auto rows = n * static_cast<std::size_t>(num_actions_);
  if (transitions_.size() != rows || reward_.size() != rows) {
    throw std::invalid_argument("TabularMdp: table sizes do not match |S|x|A|");
  }
  if (initial_dist_.size() != n) throw std::invalid_argument("TabularMdp: d0 size mismatch");

  for (int s = 0; s < num_states(); ++s) {
    const int t = step(s);
    for (int a = 0; a < num_actions_; ++a) {
      const double r = reward(s, a);
      if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("TabularMdp: reward outside [0,1]");
      if (is_terminal(s) && r != 0.0) {
        throw std::invalid_argument("TabularMdp: terminal states must have zero reward");
      }
      double total = 0.0;
      for (const Outcome& o : outcomes(s, a)) {
        if (o.next < 0 || o.next >= num_states() || o.prob < 0.0) {
          throw std::invalid_argument("TabularMdp: malformed outcome");
        }
        const int expected = is_terminal(s) ? t : t + 1;
        if (step(o.next) != expected) {
          throw std::invalid_argument("TabularMdp: transition breaks time augmentation");
        }
        total += o.prob;
      }
      if (std::abs(total - 1.0) > kRowTolerance) {
        throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
      }
    }
  }

  double mass = 0.0;
  for (int s = 0; s < num_states(); ++s) {
    const double p = initial_dist_[s];
    if (p < 0.0) throw std::invalid_argument("TabularMdp: negative d0 entry");
    if (p > 0.0 && step(s) != 0) throw std::invalid_argument("TabularMdp: d0 support off step 0");
    mass += p;
  }
  if (std::abs(mass - 1.0) > kRowTolerance) throw std::invalid_argument("TabularMdp: d0 does not sum to 1");
}

int TabularMdp::sample_next(int s, int a, Rng& rng) const {
  const auto row = outcomes(s, a);
  if (row.size() == 1) return row.front().next;
  const double u = rng.uniform();
  double acc = 0.0;
  for (const Outcome& o : row) {
    acc += o.prob;
    if (u < acc) return o.next;
  }
  return row.back().next;
}

int TabularMdp::sample_initial(Rng& rng) const {
  return static_cast<int>(rng.categorical(initial_dist_));
}

TabularMdp TabularMdp::with_rewards(std::vector<double> reward) const {
  return TabularMdp(num_actions_, horizon_, step_of_state_, transitions_, std::move(reward),
                    initial_dist_);
}

TabularEnv::TabularEnv(std::string name, TabularMdp mdp, std::vector<std::vector<double>> features)
    : name_(std::move(name)), mdp_(std::move(mdp)), features_(std::move(features)) {
  if (features_.size() != static_cast<std::size_t>(mdp_.num_states())) {
    throw std::invalid_argument("TabularEnv: one feature row per state required");
  }
  feature_dim_ = features_.empty() ? 0 : features_.front().size();
  for (const auto& row : features_) {
    if (row.size() != feature_dim_) throw std::invalid_argument("TabularEnv: ragged feature rows");
  }
}

ActionSpace TabularEnv::action_space() const {
  ActionSpace space;
  space.kind = ActionKind::kDiscrete;
  space.num_actions = mdp_.num_actions();
  return space;
}

State TabularEnv::make_state(int id) const {
  return State{id, mdp_.step(id), features_[static_cast<std::size_t>(id)]};
}

State TabularEnv::reset(Rng& rng) const { return make_state(mdp_.sample_initial(rng)); }

StepResult TabularEnv::step(const State& state, const Action& action, Rng& rng) const {
  if (action.index < 0 || action.index >= mdp_.num_actions()) {
    throw std::invalid_argument("TabularEnv: action index out of range");
  }
  const double r = mdp_.reward(state.id, action.index);
  return StepResult{make_state(mdp_.sample_next(state.id, action.index, rng)), r};
}

void continue_rollout(const Environment& env, const ActingPolicy& policy, State& state,
                      int until, Rng& rng, Trajectory& out) {
  const int horizon = env.horizon();
  while (state.step < until) {
    ActResult choice = policy.act(state, rng);
    StepResult next = env.step(state, choice.action, rng);
    Transition tr;
    tr.step = state.step;
    tr.last = state.step + 1 == horizon;
    tr.reward = next.reward;
    tr.log_prob = choice.log_prob;
    tr.action = std::move(choice.action);
    tr.state = std::move(state);
    tr.next_state = next.next;
    out.transitions.push_back(std::move(tr));
    state = std::move(next.next);
  }
}

Trajectory rollout(const Environment& env, const ActingPolicy& policy,
                   const std::optional<State>& start, Rng& rng) {
  State state = start ? *start : env.reset(rng);
  if (state.step < 0 || state.step >= env.horizon()) {
    throw std::invalid_argument("rollout: start step must lie in [0, H)");
  }
  Trajectory traj;
  traj.behavior_tag = policy.tag();
  traj.transitions.reserve(static_cast<std::size_t>(env.horizon() - state.step));
  continue_rollout(env, policy, state, env.horizon(), rng, traj);
  return traj;
}

Trajectory rollout_switch(const Environment& env, const ActingPolicy& roll_in,
                          const ActingPolicy& roll_out, int switch_step, Rng& rng) {
  if (switch_step < 0 || switch_step >= env.horizon()) {
    throw std::invalid_argument("rollout_switch: switch step must lie in [0, H)");
  }
  Trajectory traj;
  traj.behavior_tag = roll_in.tag() + ">" + roll_out.tag();
  traj.switch_step = switch_step;
  traj.transitions.reserve(static_cast<std::size_t>(env.horizon()));
  State state = env.reset(rng);
  continue_rollout(env, roll_in, state, switch_step, rng, traj);
  continue_rollout(env, roll_out, state, env.horizon(), rng, traj);
  return traj;
}

double empirical_return(const Trajectory& traj, double discount) {
  if (traj.empty()) throw std::invalid_argument("empirical_return: empty trajectory");
  double total = 0.0;
  double weight = 1.0;
  for (const Transition& tr : traj.transitions) {
    total += weight * tr.reward;
    weight *= discount;
  }
  return total;
}

std::vector<double> returns_to_go(const Trajectory& traj, double discount) {
  std::vector<double> out(traj.size());
  double acc = 0.0;
  for (std::size_t i = traj.size(); i-- > 0;) {
    acc = traj.transitions[i].reward + discount * acc;
    out[i] = acc;
  }
  return out;
}

}  // namespace rpi
