#include "rpi/baselines.hpp"

#include <stdexcept>

namespace rpi {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kPpoGae: return "ppo_gae";
    case BaselineKind::kMaxAggregation: return "max_agg";
    case BaselineKind::kLokiVariant: return "loki";
    case BaselineKind::kMamba: return "mamba";
    case BaselineKind::kMapsAps: return "maps";
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(const std::string& name) {
  for (BaselineKind k : {BaselineKind::kPpoGae, BaselineKind::kMaxAggregation, BaselineKind::kLokiVariant,
                         BaselineKind::kMamba, BaselineKind::kMapsAps}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown baseline '" + name + "'");
}

std::vector<double> ppo_gae_advantage(const Trajectory& traj, const ValueFn& learner_value,
                                      double gamma, double lambda) {
  return gae_plus(traj, learner_value, gamma, lambda);
}

LokiMode loki_mode(int round, int total_rounds) {
  if (total_rounds <= 0 || round < 1 || round > total_rounds) {
    throw std::invalid_argument("loki_mode: round out of range");
  }
  // n <= N/2 with N odd rounds up, so N = 1 still imitates once.
  return 2 * round <= total_rounds + (total_rounds % 2) ? LokiMode::kImitate : LokiMode::kReinforce;
}

std::size_t maps_aps_select(const ExtendedOracleSet& set, const State& state) {
  if (set.num_oracles() == 0) throw std::invalid_argument("maps_aps_select: no oracles");
  return select_policy(set, state, SelectionRule::kAps).index;
}

namespace exact {

QTable lambda_weighted_advantage(const TabularMdp& mdp, const ExactPolicy& policy,
                                 const ValueTable& f, double lambda) {
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must lie in [0, 1]");
  const int ns = mdp.num_states();
  const int na = mdp.num_actions();
  // X(s) = (1 - lambda) f(s) + lambda (r_pi(s) + E X(s')), X = 0 at the horizon.
  std::vector<double> x(static_cast<std::size_t>(ns), 0.0);
  QTable q{na, std::vector<double>(static_cast<std::size_t>(ns) * na, 0.0)};
  for (int t = mdp.horizon() - 1; t >= 0; --t) {
    for (int s : mdp.states_at(t)) {
      double on_policy = 0.0;
      for (int a = 0; a < na; ++a) {
        double next = 0.0;
        for (const Outcome& o : mdp.outcomes(s, a)) next += o.prob * x[static_cast<std::size_t>(o.next)];
        q(s, a) = mdp.reward(s, a) + next;
        on_policy += policy.prob(s, a) * q(s, a);
      }
      x[static_cast<std::size_t>(s)] = (1.0 - lambda) * f[s] + lambda * on_policy;
    }
  }
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) q(s, a) = mdp.is_terminal(s) ? 0.0 : q(s, a) - f[s];
  }
  return q;
}

double mamba_loss(const TabularMdp& mdp, const ExactPolicy& policy_n, const ExactPolicy& policy,
                  const ValueTable& f_max, double lambda) {
  const QTable adv = lambda_weighted_advantage(mdp, policy, f_max, lambda);
  const std::vector<double> d = state_visitation(mdp, policy_n);
  const std::span<const double> d0 = mdp.initial_dist();
  double visit = 0.0;
  double start = 0.0;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const double a = expect_policy(adv, policy, s);
    visit += d[static_cast<std::size_t>(s)] * a;
    start += d0[static_cast<std::size_t>(s)] * a;
  }
  return -(1.0 - lambda) * mdp.horizon() * visit - lambda * start;
}

double max_aggregation_loss(const TabularMdp& mdp, const ExactPolicy& policy_n,
                            const ExactPolicy& policy, std::span<const ExactPolicy> oracles) {
  return online_loss_exact(mdp, policy_n, policy, f_max_exact(mdp, oracles).values);
}

double aggrevated_loss(const TabularMdp& mdp, const ExactPolicy& policy_n, const ExactPolicy& policy,
                       const ExactPolicy& oracle) {
  return online_loss_exact(mdp, policy_n, policy, evaluate_policy(mdp, oracle));
}

}  // namespace exact

}  // namespace rpi
