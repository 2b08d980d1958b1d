#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "rpi/envs.hpp"
#include "rpi/exact.hpp"
#include "rpi/raps.hpp"

using namespace rpi;

namespace {

std::vector<OracleHandle> table_oracles(const std::vector<exact::ExactPolicy>& policies) {
  std::vector<OracleHandle> out;
  for (std::size_t k = 0; k < policies.size(); ++k) {
    out.push_back(std::make_shared<TableOracle>("o" + std::to_string(k), policies[k]));
  }
  return out;
}

EnsembleConfig tabular(const TabularEnv& env, std::size_t members) {
  EnsembleConfig cfg;
  cfg.members = members;
  cfg.num_states = env.mdp().num_states();
  return cfg;
}

// Rolls every policy of the set from every non-terminal state `per_state`
// times and refits all ensembles.
void converge(const TabularEnv& env, ExtendedOracleSet& set, int per_state, Rng& rng) {
  const TabularMdp& mdp = env.mdp();
  for (std::size_t k = 0; k < set.size(); ++k) {
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      for (int i = 0; i < per_state; ++i) set.buffer(k).append(rollout(env, set.policy(k), env.make_state(s), rng));
    }
    set.ensemble(k).fit(set.buffer(k), rng);
  }
}

std::size_t first_argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Prediction pred(double mean, double spread) { return Prediction{mean, spread}; }

}  // namespace

TEST_CASE("RAPS scoring on hand examples") {
  // Learner 1.0 +- 0.2 against an oracle at 0.9 +- 0.3: UCB 1.2 beats LCB 0.8.
  const std::vector<Prediction> example{pred(0.9, 0.3), pred(1.0, 0.2)};
  const Selection s = select_from_predictions(example, SelectionRule::kRaps);
  CHECK(s.index == 0);
  CHECK(s.scores[0] == doctest::Approx(1.2));
  CHECK(s.scores[1] == doctest::Approx(0.8));
  CHECK(select_from_predictions(example, SelectionRule::kMean).index == 1);

  // Learner LCB above every oracle UCB: the learner is rolled out under RAPS only.
  const std::vector<Prediction> confident{pred(1.0, 0.1), pred(0.5, 0.4), pred(2.0, 0.1)};
  CHECK(select_from_predictions(confident, SelectionRule::kRaps).index == 2);
  const Selection aps = select_from_predictions(confident, SelectionRule::kAps);
  CHECK(aps.index == 0);
  CHECK(aps.scores[2] == -std::numeric_limits<double>::infinity());

  // Ties go to the lowest index.
  const std::vector<Prediction> tied{pred(1.0, 0.0), pred(1.0, 0.0), pred(1.0, 0.0)};
  CHECK(select_from_predictions(tied, SelectionRule::kRaps).index == 0);
  CHECK_THROWS_AS(select_from_predictions(tied, SelectionRule::kUniformOracle), std::invalid_argument);
}

TEST_CASE("selection rule names round-trip") {
  for (SelectionRule r : {SelectionRule::kRaps, SelectionRule::kAps, SelectionRule::kMean,
                          SelectionRule::kUniformOracle, SelectionRule::kLearnerOnly}) {
    CHECK(parse_selection_rule(to_string(r)) == r);
  }
  CHECK_THROWS_AS(parse_selection_rule("best"), std::invalid_argument);
}

TEST_CASE("extended oracle set layout") {
  const TabularEnv env = make_chain(3, 2);
  const auto uniform = exact::ExactPolicy::uniform(env.mdp());
  ExtendedOracleSet set(table_oracles({uniform, uniform}), tabular(env, 2), 100, 50, Rng(1));
  CHECK(set.size() == 3);
  CHECK(set.learner_index() == 2);
  CHECK(set.buffer(0).tag() == "o0");
  CHECK(set.buffer(2).tag() == "learner");
  CHECK(set.buffer(2).capacity() == 50);
  CHECK_THROWS_AS(set.learner(), std::logic_error);

  std::vector<OracleHandle> bad{std::make_shared<TableOracle>("learner", uniform)};
  CHECK_THROWS_AS(ExtendedOracleSet(bad, tabular(env, 2), 10, 10, Rng(1)), std::invalid_argument);
}

TEST_CASE("zero-spread selection equals mean argmax on every fixture state") {
  for (const auto& [fixture, oracles] : {std::pair{"chain-3", "regional3"}, std::pair{"gridworld-5", "regional3"},
                                          std::pair{"gridworld-adversarial", "adversarial3"}}) {
    const Fixture fx = env_fixture(fixture);
    const auto env_ptr = make_env(fx.env);
    const auto& env = dynamic_cast<const TabularEnv&>(*env_ptr);
    Rng rng(11);
    ExtendedOracleSet set(make_oracles(env, fx.env.width, oracle_fixture(oracles), rng), tabular(env, 1), 100000,
                          100000, Rng(2));
    SoftmaxTabularPolicy learner(env.mdp().num_states(), env.mdp().num_actions());
    set.set_learner(learner);
    for (std::size_t k = 0; k < set.size(); ++k) {
      for (int e = 0; e < 20; ++e) set.buffer(k).append(rollout(env, set.policy(k), std::nullopt, rng));
      set.ensemble(k).fit(set.buffer(k), rng);
    }
    for (int s = 0; s < env.mdp().num_states(); ++s) {
      const State st = env.make_state(s);
      std::vector<double> means;
      for (std::size_t k = 0; k < set.size(); ++k) {
        const Prediction p = set.ensemble(k).predict(st);
        REQUIRE(p.spread == 0.0);
        means.push_back(p.mean);
      }
      CHECK(select_policy(set, st, SelectionRule::kRaps).index == first_argmax(means));
      CHECK(select_policy(set, st, SelectionRule::kMean).index == first_argmax(means));
    }
  }
}

TEST_CASE("discrete selection: tie and count rules") {
  McTabularValue a(2);
  McTabularValue b(2);
  const std::vector<const McTabularValue*> both{&a, &b};
  CHECK(select_policy_discrete(both, 0, 2) == 0);

  Trajectory traj;
  traj.transitions.resize(1);
  traj.transitions[0].state.id = 0;
  traj.transitions[0].reward = 1.0;
  a.update(traj);
  // b is still unvisited and wins with an infinite bound.
  CHECK(select_policy_discrete(both, 0, 2) == 1);
  for (int i = 0; i < 4; ++i) a.update(traj);
  b.update(traj);
  // Equal means; b has fewer visits and a larger bonus.
  CHECK(a.mean(0) == b.mean(0));
  CHECK(select_policy_discrete(both, 0, 2) == 1);
}

TEST_CASE("discrete selection with 10k visits matches the DP argmax on chain-3") {
  const TabularEnv env = make_chain(3, 2);
  const TabularMdp& mdp = env.mdp();
  const std::vector<exact::ExactPolicy> policies{adversarial_policy(mdp), exact::ExactPolicy::uniform(mdp),
                                                 exact::solve_optimal(mdp).policy};
  std::vector<McTabularValue> tables(policies.size(), McTabularValue(mdp.num_states()));
  Rng rng(5);
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const TableOracle oracle("o", policies[k]);
    for (int s = 0; s < mdp.num_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      while (tables[k].count(s) < 10000) tables[k].update(rollout(env, oracle, env.make_state(s), rng));
    }
  }
  std::vector<const McTabularValue*> ptrs;
  for (const McTabularValue& t : tables) ptrs.push_back(&t);
  std::vector<exact::ValueTable> values;
  for (const auto& p : policies) values.push_back(exact::evaluate_policy(mdp, p));

  int compared = 0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    std::vector<double> v;
    for (const auto& table : values) v.push_back(table[s]);
    const std::size_t chosen = select_policy_discrete(ptrs, s, mdp.horizon());
    std::vector<double> sorted = v;
    std::sort(sorted.rbegin(), sorted.rend());
    const double bonus = McTabularValue::hoeffding_bonus(10000, mdp.horizon(), 0.05);
    if (sorted[0] - sorted[1] > 0.05) {
      CHECK(chosen == first_argmax(v));
      ++compared;
    } else {
      // Near-ties: the choice is still within the confidence width of the best.
      CHECK(v[chosen] >= sorted[0] - 2 * bonus);
    }
  }
  CHECK(compared >= 3);
}

TEST_CASE("converged ensembles select the DP argmax on gridworld-5") {
  const Fixture fx = env_fixture("gridworld-5");
  const auto env_ptr = make_env(fx.env);
  const auto& env = dynamic_cast<const TabularEnv&>(*env_ptr);
  const TabularMdp& mdp = env.mdp();
  std::vector<exact::ExactPolicy> policies = oracle_policies(env, fx.env.width, oracle_fixture("regional3"));
  Rng rng(8);
  ExtendedOracleSet set(table_oracles(policies), tabular(env, 5), 10000000, 10000000, Rng(3));
  SoftmaxTabularPolicy learner(mdp.num_states(), mdp.num_actions());
  set.set_learner(learner);
  converge(env, set, 150, rng);

  policies.push_back(to_exact_policy(learner, env));
  std::vector<exact::ValueTable> values;
  for (const auto& p : policies) values.push_back(exact::evaluate_policy(mdp, p));

  int matched = 0;
  int clear = 0;
  double worst_regret = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    std::vector<double> v;
    for (const auto& table : values) v.push_back(table[s]);
    const std::size_t chosen = select_policy(set, env.make_state(s)).index;
    std::vector<double> sorted = v;
    std::sort(sorted.rbegin(), sorted.rend());
    worst_regret = std::max(worst_regret, sorted[0] - v[chosen]);
    if (sorted[0] - sorted[1] > 0.5) {
      ++clear;
      if (chosen == first_argmax(v)) ++matched;
    }
  }
  INFO("clear-gap states: " << clear << ", worst regret " << worst_regret);
  CHECK(clear > 50);
  CHECK(matched == clear);
  CHECK(worst_regret < 0.5);
}

TEST_CASE("an empty oracle set always rolls out the learner") {
  const TabularEnv env = make_gridworld(5, 5, 12, false);
  ExtendedOracleSet set({}, tabular(env, 3), 100, 1000, Rng(1));
  SoftmaxTabularPolicy learner(env.mdp().num_states(), env.mdp().num_actions());
  set.set_learner(learner);
  Rng rng(2);
  RiroConfig cfg;
  cfg.episodes = 10;
  for (SelectionRule rule : {SelectionRule::kRaps, SelectionRule::kAps, SelectionRule::kMean,
                             SelectionRule::kUniformOracle, SelectionRule::kLearnerOnly}) {
    cfg.rule = rule;
    const RiroResult r = riro_round(env, set, rng, cfg);
    for (const SelectionRecord& rec : r.records) CHECK(rec.chosen == 0);
  }
  CHECK(set.buffer(0).size() > 0);
}

TEST_CASE("RIRO writes each suffix only to the chosen buffer") {
  const Fixture fx = env_fixture("gridworld-5");
  const auto env_ptr = make_env(fx.env);
  const auto& env = dynamic_cast<const TabularEnv&>(*env_ptr);
  Rng rng(4);
  ExtendedOracleSet set(make_oracles(env, 5, oracle_fixture("regional3"), rng), tabular(env, 5), 100000, 100000,
                        Rng(5));
  SoftmaxTabularPolicy learner(env.mdp().num_states(), env.mdp().num_actions());
  set.set_learner(learner);
  RiroConfig cfg;
  cfg.episodes = 1;
  for (int round = 0; round < 40; ++round) {
    std::vector<std::size_t> before;
    for (std::size_t k = 0; k < set.size(); ++k) before.push_back(set.buffer(k).size());
    const RiroResult r = riro_round(env, set, rng, cfg, round);
    REQUIRE(r.records.size() == 1);
    const SelectionRecord& rec = r.records[0];
    CHECK(rec.round == round);
    CHECK(rec.switch_step >= 0);
    CHECK(rec.switch_step < env.horizon());
    CHECK(r.steps == static_cast<std::size_t>(env.horizon()));
    for (std::size_t k = 0; k < set.size(); ++k) {
      const std::size_t expected = k == rec.chosen ? static_cast<std::size_t>(env.horizon() - rec.switch_step) : 0;
      CHECK(set.buffer(k).size() - before[k] == expected);
    }
    CHECK(env.mdp().step(rec.switch_state) == rec.switch_step);
  }
}

TEST_CASE("a dominant oracle with tight ensembles is always selected") {
  const TabularEnv env = make_chain(3, 2);
  const TabularMdp& mdp = env.mdp();
  const std::vector<exact::ExactPolicy> policies{exact::solve_optimal(mdp).policy, adversarial_policy(mdp)};
  // The optimal policy weakly beats the adversary and the uniform learner
  // everywhere; states where every action is worth the same tie to index 0.
  const auto best = exact::evaluate_policy(mdp, policies[0]);
  const auto worst = exact::evaluate_policy(mdp, policies[1]);
  const auto uni = exact::evaluate_policy(mdp, exact::ExactPolicy::uniform(mdp));
  for (int s = 0; s < 6; ++s) REQUIRE(best[s] >= std::max(worst[s], uni[s]));
  REQUIRE(best[1] > std::max(worst[1], uni[1]) + 0.05);

  ExtendedOracleSet set(table_oracles(policies), tabular(env, 5), 1000000, 1000000, Rng(6));
  SoftmaxTabularPolicy learner(mdp.num_states(), mdp.num_actions());
  set.set_learner(learner);
  Rng rng(7);
  converge(env, set, 4000, rng);
  RiroConfig cfg;
  cfg.episodes = 50;
  const RiroResult r = riro_round(env, set, rng, cfg);
  for (const SelectionRecord& rec : r.records) CHECK(rec.chosen == 0);
}

TEST_CASE("seeded RIRO rounds are reproducible") {
  auto run = [] {
    const TabularEnv env = make_gridworld(5, 5, 12, false);
    Rng rng(9);
    ExtendedOracleSet set(make_oracles(env, 5, oracle_fixture("regional3"), rng), tabular(env, 5), 1000, 1000,
                          Rng(10));
    SoftmaxTabularPolicy learner(env.mdp().num_states(), env.mdp().num_actions());
    set.set_learner(learner);
    std::vector<SelectionRecord> all;
    for (int round = 0; round < 5; ++round) {
      const RiroResult r = riro_round(env, set, rng, RiroConfig{}, round);
      all.insert(all.end(), r.records.begin(), r.records.end());
    }
    return all;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].switch_step == b[i].switch_step);
    CHECK(a[i].switch_state == b[i].switch_state);
    CHECK(a[i].chosen == b[i].chosen);
    CHECK(a[i].scores == b[i].scores);
  }
}
