#pragma once

#include <span>
#include <string>
#include <vector>

#include "rpi/exact.hpp"
#include "rpi/raps.hpp"
#include "rpi/rpg.hpp"

namespace rpi {

enum class BaselineKind { kPpoGae, kMaxAggregation, kLokiVariant, kMamba, kMapsAps };

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& name);

// Standard GAE against the learner's own value estimate.
std::vector<double> ppo_gae_advantage(const Trajectory& traj, const ValueFn& learner_value,
                                      double gamma, double lambda);

enum class LokiMode { kImitate, kReinforce };

// Imitate for rounds 1..N/2 (1-based), reinforce afterwards.
LokiMode loki_mode(int round, int total_rounds);

// Argmax of oracle UCBs; the learner never competes.
std::size_t maps_aps_select(const ExtendedOracleSet& set, const State& state);

namespace exact {

// A_lambda(s,a) = (1 - lambda) sum_i lambda^i A_(i)(s,a), where the i-step
// advantage follows `policy` for i steps after (s,a) and then bootstraps on f.
QTable lambda_weighted_advantage(const TabularMdp& mdp, const ExactPolicy& policy,
                                 const ValueTable& f, double lambda);

// -(1 - lambda) H E_{d^{pi_n}}[A_lambda(s,pi)] - lambda E_{d0}[A_lambda(s,pi)],
// with the multi-step continuation of A_lambda following pi.
double mamba_loss(const TabularMdp& mdp, const ExactPolicy& policy_n, const ExactPolicy& policy,
                  const ValueTable& f_max, double lambda);

// Online loss against f^max over `oracles`.
double max_aggregation_loss(const TabularMdp& mdp, const ExactPolicy& policy_n,
                            const ExactPolicy& policy, std::span<const ExactPolicy> oracles);

// Online loss against a single oracle's value.
double aggrevated_loss(const TabularMdp& mdp, const ExactPolicy& policy_n, const ExactPolicy& policy,
                       const ExactPolicy& oracle);

}  // namespace exact

}  // namespace rpi
