#include "rpi/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>

#include "rpi/baselines.hpp"
#include "rpi/envs.hpp"
#include "rpi/exact.hpp"
#include "rpi/rpg.hpp"
#include "rpi/value_ensemble.hpp"

namespace rpi {

std::size_t VerifyReport::passed() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.passed; }));
}

namespace {

using exact::ExactPolicy;
using exact::ValueTable;

ExactPolicy random_policy(const TabularMdp& mdp, Rng& rng) {
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions());
  for (int s = 0; s < mdp.num_states(); ++s) {
    std::vector<double> row(static_cast<std::size_t>(mdp.num_actions()));
    double sum = 0.0;
    for (double& p : row) {
      p = -std::log(1.0 - rng.uniform());
      sum += p;
    }
    for (double p : row) probs.push_back(p / sum);
  }
  return ExactPolicy(mdp.num_states(), mdp.num_actions(), std::move(probs));
}

ValueTable random_values(const TabularMdp& mdp, Rng& rng) {
  ValueTable f = exact::zero_values(mdp);
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (!mdp.is_terminal(s)) f[s] = rng.uniform(0.0, static_cast<double>(mdp.horizon()));
  }
  return f;
}

// Rotates the non-terminal entries by one state index.
ValueTable shift_by_one(const TabularMdp& mdp, const ValueTable& f) {
  ValueTable out = f;
  std::vector<int> live;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (!mdp.is_terminal(s)) live.push_back(s);
  }
  for (std::size_t i = 0; i < live.size(); ++i) out[live[i]] = f[live[(i + 1) % live.size()]];
  return out;
}

struct Case {
  std::string label;
  const TabularEnv* env;
  std::vector<ExactPolicy> oracles;
};

std::string fmt(const char* pattern, double v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

class Runner {
 public:
  explicit Runner(const VerifyOptions& options) : options_(options) {}

  void run(const std::string& name, const std::function<double()>& worst_violation) {
    Check c;
    c.name = name;
    try {
      const double v = worst_violation();
      c.passed = v <= options_.tolerance;
      c.detail = fmt("worst violation %.3g", v);
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("error: ") + e.what();
    }
    report_.checks.push_back(std::move(c));
  }

  VerifyReport take() { return std::move(report_); }

 private:
  const VerifyOptions& options_;
  VerifyReport report_;
};

}  // namespace

VerifyReport verify(const VerifyOptions& options) {
  Runner runner(options);
  const TabularEnv chain = make_chain(3, 2);
  const TabularEnv grid = make_gridworld(5, 5, 12, false);

  std::vector<Case> cases;
  for (const auto& [label, env, width] : {std::tuple{"chain-3", &chain, 3}, std::tuple{"gridworld-5", &grid, 5}}) {
    for (const char* set : {"regional1", "regional2", "regional3", "adversarial3"}) {
      cases.push_back({std::string(label) + "/" + set, env, oracle_policies(*env, width, oracle_fixture(set))});
    }
  }

  Rng rng(options.seed);
  for (const Case& c : cases) {
    const TabularMdp& mdp = c.env->mdp();
    Rng case_rng = rng.split(c.label);

    runner.run(c.label + " performance-difference lemma", [&] {
      double worst = 0.0;
      for (int i = 0; i < options.random_pairs; ++i) {
        worst = std::max(worst, exact::pdl_residual(mdp, random_policy(mdp, case_rng), random_values(mdp, case_rng)));
      }
      return worst;
    });

    std::vector<ExactPolicy> extended = c.oracles;
    extended.push_back(random_policy(mdp, case_rng));
    ValueTable f_plus = exact::f_plus_exact(mdp, extended).values;
    if (options.mutate_f_plus) f_plus = shift_by_one(mdp, f_plus);
    const ExactPolicy follow = exact::max_plus_following(mdp, extended);
    const ExactPolicy aggregate = exact::max_plus_aggregation(mdp, extended);
    const exact::QTable a_plus = exact::generalized_advantage(mdp, f_plus);

    runner.run(c.label + " max+ following dominates f+", [&] {
      const ValueTable v = exact::evaluate_policy(mdp, follow);
      double worst = 0.0;
      for (int s = 0; s < mdp.num_states(); ++s) worst = std::max(worst, f_plus[s] - v[s]);
      return worst;
    });
    runner.run(c.label + " A+ of max+ following non-negative", [&] {
      double worst = 0.0;
      for (int s = 0; s < mdp.num_states(); ++s) {
        if (!mdp.is_terminal(s)) worst = std::max(worst, -exact::expect_policy(a_plus, follow, s));
      }
      return worst;
    });
    runner.run(c.label + " A+ of max+ aggregation >= following", [&] {
      double worst = 0.0;
      for (int s = 0; s < mdp.num_states(); ++s) {
        if (mdp.is_terminal(s)) continue;
        worst = std::max(worst, exact::expect_policy(a_plus, follow, s) - exact::expect_policy(a_plus, aggregate, s));
      }
      return worst;
    });
    runner.run(c.label + " Delta_N non-negative", [&] {
      double worst = 0.0;
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<ExactPolicy> rounds;
        for (int n = 0; n < 8; ++n) rounds.push_back(random_policy(mdp, case_rng));
        std::vector<ExactPolicy> at_m = c.oracles;
        at_m.push_back(rounds[case_rng.uniform_int(rounds.size())]);
        worst = std::max(worst, -exact::delta_n(mdp, at_m, rounds));
      }
      return worst;
    });
    runner.run(c.label + " improvable baseline is a lower bound", [&] {
      double worst = 0.0;
      for (int trial = 0; trial < 10; ++trial) {
        const ValueTable f = exact::evaluate_policy(mdp, random_policy(mdp, case_rng));
        const ExactPolicy greedy = exact::greedy_policy(mdp, exact::generalized_q(mdp, f));
        const ValueTable v = exact::evaluate_policy(mdp, greedy);
        for (int s = 0; s < mdp.num_states(); ++s) worst = std::max(worst, f[s] - v[s]);
      }
      return worst;
    });
    runner.run(c.label + " MAMBA(0) = max-aggregation loss", [&] {
      double worst = 0.0;
      const ValueTable f_max = exact::f_max_exact(mdp, c.oracles).values;
      for (int trial = 0; trial < 10; ++trial) {
        const ExactPolicy roll_in = random_policy(mdp, case_rng);
        const ExactPolicy pi = random_policy(mdp, case_rng);
        const double mamba = exact::mamba_loss(mdp, roll_in, pi, f_max, 0.0);
        const double agg = exact::max_aggregation_loss(mdp, roll_in, pi, c.oracles);
        worst = std::max(worst, std::abs(mamba - agg));
        if (c.oracles.size() == 1) {
          worst = std::max(worst, std::abs(agg - exact::aggrevated_loss(mdp, roll_in, pi, c.oracles[0])));
        }
      }
      return worst;
    });
    runner.run(c.label + " GAE+(lambda=0, gamma=1) = one-step A+", [&] {
      const ValueTable exact_f_plus = exact::f_plus_exact(mdp, extended).values;
      const ValueFn f = [&](const State& s) { return exact_f_plus[s.id]; };
      TableOracle behavior("behavior", extended.back());
      double worst = 0.0;
      for (int e = 0; e < 20; ++e) {
        const Trajectory traj = rollout(*c.env, behavior, std::nullopt, case_rng);
        const std::vector<double> adv = gae_plus(traj, f, 1.0, 0.0);
        for (std::size_t t = 0; t < traj.size(); ++t) {
          const Transition& tr = traj.transitions[t];
          const double next = tr.last ? 0.0 : exact_f_plus[tr.next_state.id];
          worst = std::max(worst, std::abs(adv[t] - (tr.reward + next - exact_f_plus[tr.state.id])));
        }
      }
      return worst;
    });
  }

  runner.run("Hoeffding bonus H=2 delta=0.05 N=8", [] {
    return std::abs(McTabularValue::hoeffding_bonus(8, 2, 0.05) - 1.9206455826) > 1e-6 ? 1.0 : 0.0;
  });
  return runner.take();
}

}  // namespace rpi
