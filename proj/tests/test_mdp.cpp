#include "doctest.h"

#include <stdexcept>

#include "rpi/envs.hpp"
#include "rpi/mdp.hpp"
#include "rpi/policy.hpp"

using namespace rpi;

namespace {

// One step, one action, one non-terminal state.
TabularMdp tiny(double reward, double row_sum = 1.0) {
  return TabularMdp(1, 1, {0, 1}, {{{1, row_sum}}, {{1, 1.0}}}, {reward, 0.0}, {1.0, 0.0});
}

}  // namespace

TEST_CASE("TabularMdp validation") {
  CHECK_NOTHROW(tiny(0.5));
  CHECK_THROWS_AS(tiny(1.5), std::invalid_argument);
  CHECK_THROWS_AS(tiny(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(tiny(0.5, 0.9), std::invalid_argument);
  // Terminal reward must be zero.
  CHECK_THROWS_AS(TabularMdp(1, 1, {0, 1}, {{{1, 1.0}}, {{1, 1.0}}}, {0.5, 0.3}, {1.0, 0.0}),
                  std::invalid_argument);
  // d0 may only cover step-0 states.
  CHECK_THROWS_AS(TabularMdp(1, 1, {0, 1}, {{{1, 1.0}}, {{1, 1.0}}}, {0.5, 0.0}, {0.5, 0.5}),
                  std::invalid_argument);
  // Transitions must advance one step.
  CHECK_THROWS_AS(TabularMdp(1, 2, {0, 1, 2}, {{{0, 1.0}}, {{2, 1.0}}, {{2, 1.0}}}, {0.1, 0.1, 0.0},
                             {1.0, 0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("chain-3 state layout") {
  const TabularEnv env = make_chain(3, 2);
  const TabularMdp& mdp = env.mdp();
  CHECK(mdp.num_states() == 7);
  CHECK(mdp.states_at(0).size() == 3);
  CHECK(mdp.states_at(1).size() == 3);
  CHECK(mdp.states_at(2).size() == 1);
  CHECK(mdp.is_terminal(6));
  CHECK(env.feature_dim() == 4);
}

TEST_CASE("rollouts reach the horizon and carry the behavior tag") {
  const TabularEnv env = make_gridworld(5, 5, 12, false);
  const TableOracle oracle("uniform", exact::ExactPolicy::uniform(env.mdp()));
  Rng rng(1);
  const Trajectory traj = rollout(env, oracle, std::nullopt, rng);
  CHECK(traj.size() == 12);
  CHECK(traj.behavior_tag == "uniform");
  CHECK(traj.transitions.back().last);
  for (std::size_t t = 0; t < traj.size(); ++t) CHECK(traj.transitions[t].step == static_cast<int>(t));

  const Trajectory partial = rollout(env, oracle, env.make_state(5 * 25 + 3), rng);
  CHECK(partial.size() == 7);
  CHECK_THROWS_AS(rollout(env, oracle, env.make_state(12 * 25), rng), std::invalid_argument);
}

TEST_CASE("switch rollout with identical policies matches a plain rollout") {
  const TabularEnv env = make_gridworld(5, 5, 12, false);
  const TableOracle oracle("uniform", exact::ExactPolicy::uniform(env.mdp()));
  for (int switch_step : {0, 4, 11}) {
    Rng a(17);
    Rng b(17);
    const Trajectory plain = rollout(env, oracle, std::nullopt, a);
    const Trajectory mixed = rollout_switch(env, oracle, oracle, switch_step, b);
    REQUIRE(plain.size() == mixed.size());
    for (std::size_t t = 0; t < plain.size(); ++t) {
      CHECK(plain.transitions[t].state.id == mixed.transitions[t].state.id);
      CHECK(plain.transitions[t].action.index == mixed.transitions[t].action.index);
    }
    CHECK(mixed.switch_step == switch_step);
    CHECK(mixed.behavior_tag == "uniform>uniform");
  }
  Rng rng(1);
  CHECK_THROWS_AS(rollout_switch(env, oracle, oracle, 12, rng), std::invalid_argument);
}

TEST_CASE("returns-to-go and empirical return") {
  Trajectory traj;
  for (double r : {1.0, 0.0, 0.5}) {
    Transition tr;
    tr.reward = r;
    traj.transitions.push_back(tr);
  }
  const std::vector<double> undiscounted = returns_to_go(traj);
  CHECK(undiscounted[0] == doctest::Approx(1.5));
  CHECK(undiscounted[1] == doctest::Approx(0.5));
  CHECK(undiscounted[2] == doctest::Approx(0.5));
  const std::vector<double> discounted = returns_to_go(traj, 0.5);
  CHECK(discounted[0] == doctest::Approx(1.0 + 0.25 * 0.5));
  CHECK(empirical_return(traj, 0.5) == doctest::Approx(discounted[0]));
  CHECK_THROWS_AS(empirical_return(Trajectory{}, 1.0), std::invalid_argument);
}

TEST_CASE("sampled transitions follow the model") {
  const TabularEnv env = make_chain(3, 2);
  Rng rng(4);
  int slipped = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    // Middle cell at t=0 is state 1; pushing right lands on state 5 unless it slips to 3.
    if (env.mdp().sample_next(1, 1, rng) == 3) ++slipped;
  }
  CHECK(slipped / static_cast<double>(n) == doctest::Approx(0.1).epsilon(0.08));
}
