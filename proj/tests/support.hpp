#pragma once

// Independent reference implementations for tests: brute-force path
// enumeration over tabular MDPs and small random models.

#include <cmath>
#include <functional>
#include <vector>

#include "rpi/exact.hpp"
#include "rpi/mdp.hpp"
#include "rpi/rng.hpp"

namespace testing {

using rpi::exact::ExactPolicy;
using rpi::exact::ValueTable;

struct Path {
  double prob = 1.0;
  std::vector<int> states;   // s_t, s_{t+1}, ... up to but excluding the terminal
  std::vector<int> actions;
  std::vector<double> rewards;
};

// Every path from `start` (taking `first_action` first when >= 0) to the
// horizon, weighted by its probability under `policy`.
inline void for_each_path(const rpi::TabularMdp& mdp, const ExactPolicy& policy, int start,
                          int first_action, const std::function<void(const Path&)>& visit) {
  Path path;
  std::function<void(int)> walk = [&](int s) {
    if (mdp.is_terminal(s)) {
      visit(path);
      return;
    }
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const bool forced = path.actions.empty() && first_action >= 0;
      const double pa = forced ? (a == first_action ? 1.0 : 0.0) : policy.prob(s, a);
      if (pa == 0.0) continue;
      for (const rpi::Outcome& o : mdp.outcomes(s, a)) {
        const double saved = path.prob;
        path.prob *= pa * o.prob;
        path.states.push_back(s);
        path.actions.push_back(a);
        path.rewards.push_back(mdp.reward(s, a));
        walk(o.next);
        path.states.pop_back();
        path.actions.pop_back();
        path.rewards.pop_back();
        path.prob = saved;
      }
    }
  };
  walk(start);
}

inline double enumerate_value(const rpi::TabularMdp& mdp, const ExactPolicy& policy, int s,
                              int first_action = -1) {
  double v = 0.0;
  for_each_path(mdp, policy, s, first_action, [&](const Path& p) {
    double ret = 0.0;
    for (double r : p.rewards) ret += r;
    v += p.prob * ret;
  });
  return v;
}

// (1/H) sum_t Pr(s_t = s) from d0.
inline std::vector<double> enumerate_visitation(const rpi::TabularMdp& mdp, const ExactPolicy& policy) {
  std::vector<double> d(static_cast<std::size_t>(mdp.num_states()), 0.0);
  const auto d0 = mdp.initial_dist();
  for (int s0 = 0; s0 < mdp.num_states(); ++s0) {
    if (d0[static_cast<std::size_t>(s0)] == 0.0) continue;
    for_each_path(mdp, policy, s0, -1, [&](const Path& p) {
      for (int s : p.states) d[static_cast<std::size_t>(s)] += d0[static_cast<std::size_t>(s0)] * p.prob / mdp.horizon();
    });
  }
  return d;
}

inline ExactPolicy random_policy(const rpi::TabularMdp& mdp, rpi::Rng& rng) {
  std::vector<double> probs;
  for (int s = 0; s < mdp.num_states(); ++s) {
    std::vector<double> row(static_cast<std::size_t>(mdp.num_actions()));
    double sum = 0.0;
    for (double& p : row) {
      p = 0.05 + rng.uniform();
      sum += p;
    }
    for (double p : row) probs.push_back(p / sum);
  }
  return ExactPolicy(mdp.num_states(), mdp.num_actions(), std::move(probs));
}

inline ValueTable random_values(const rpi::TabularMdp& mdp, rpi::Rng& rng) {
  ValueTable f = rpi::exact::zero_values(mdp);
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (!mdp.is_terminal(s)) f[s] = rng.uniform(0.0, mdp.horizon());
  }
  return f;
}

// Random time-augmented MDP with `cells` states per step.
inline rpi::TabularMdp random_mdp(rpi::Rng& rng, int cells, int actions, int horizon) {
  const int terminal = cells * horizon;
  const int n = terminal + 1;
  std::vector<int> step(static_cast<std::size_t>(n));
  std::vector<std::vector<rpi::Outcome>> trans(static_cast<std::size_t>(n) * actions);
  std::vector<double> reward(static_cast<std::size_t>(n) * actions, 0.0);
  std::vector<double> d0(static_cast<std::size_t>(n), 0.0);
  for (int t = 0; t < horizon; ++t) {
    for (int c = 0; c < cells; ++c) {
      const int s = t * cells + c;
      step[static_cast<std::size_t>(s)] = t;
      for (int a = 0; a < actions; ++a) {
        const std::size_t idx = static_cast<std::size_t>(s) * actions + a;
        reward[idx] = rng.uniform();
        if (t + 1 == horizon) {
          trans[idx] = {{terminal, 1.0}};
          continue;
        }
        std::vector<double> w(static_cast<std::size_t>(cells));
        double sum = 0.0;
        for (double& x : w) {
          x = rng.uniform();
          sum += x;
        }
        for (int c2 = 0; c2 < cells; ++c2) trans[idx].push_back({(t + 1) * cells + c2, w[static_cast<std::size_t>(c2)] / sum});
      }
    }
  }
  step[static_cast<std::size_t>(terminal)] = horizon;
  for (int a = 0; a < actions; ++a) trans[static_cast<std::size_t>(terminal) * actions + a] = {{terminal, 1.0}};
  double sum = 0.0;
  for (int c = 0; c < cells; ++c) {
    d0[static_cast<std::size_t>(c)] = 0.1 + rng.uniform();
    sum += d0[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < cells; ++c) d0[static_cast<std::size_t>(c)] /= sum;
  return rpi::TabularMdp(actions, horizon, std::move(step), std::move(trans), std::move(reward), std::move(d0));
}

}  // namespace testing
