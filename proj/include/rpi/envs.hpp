#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rpi/exact.hpp"
#include "rpi/mdp.hpp"
#include "rpi/policy.hpp"

namespace rpi {

enum class EnvKind { kChain, kGridworld, kGridworldSparse, kPointmass };

struct EnvSpec {
  EnvKind kind = EnvKind::kChain;
  int width = 3;   // chain length or grid side
  int height = 1;  // grid rows; 1 for chains
  int horizon = 2;
  double slip = 0.1;
  bool shaped = true;  // dense distance reward on gridworlds
};

std::string to_string(EnvKind kind);

// Tabular kinds return a TabularEnv. States are numbered t * cells + cell,
// with the single terminal last; features are one-hot(cell) plus t / H.
std::unique_ptr<Environment> make_env(const EnvSpec& spec);

// chain(n, H): actions {left, right}, the intended move happens with
// probability 1 - slip, the opposite one otherwise; walls clamp. Reward 1 at
// the right end, 0.2 for pushing left at the left end, 0 elsewhere.
TabularEnv make_chain(int positions, int horizon, double slip = 0.1);

// width x height grid, actions {up, down, left, right, stay}; with
// probability `slip` a uniformly random action replaces the chosen one.
// Starts uniformly in column 0; the goal sits mid-height in the last column.
// Shaped reward is 1 - manhattan(cell, goal) / max distance, sparse reward
// pays 1 only on the goal cell.
TabularEnv make_gridworld(int width, int height, int horizon, bool sparse, double slip = 0.1);

// 1-D point mass, state (x, v), action u clipped to [-1, 1]:
// v' = v + dt u, x' = x + dt v'. Reward exp(-x^2). Starts at x ~ U(-1, 1), v = 0.
class PointmassEnv final : public Environment {
 public:
  explicit PointmassEnv(int horizon = 20, double dt = 0.1);

  std::string name() const override { return "pointmass"; }
  int horizon() const override { return horizon_; }
  std::size_t feature_dim() const override { return 3; }
  ActionSpace action_space() const override;
  State reset(Rng& rng) const override;
  StepResult step(const State& state, const Action& action, Rng& rng) const override;

  State make_state(double x, double v, int step) const;

 private:
  int horizon_;
  double dt_;
};

// Cell index of a time-augmented state of a fixture built by make_env.
int cell_of_state(const TabularMdp& mdp, int state);

// Region of a cell when the `width` columns are split into `regions` bands.
int region_of_cell(int cell, int width, int regions);

enum class OracleKind { kSnapshot, kRegional, kAdversarial, kEpsilonCorrupted };

struct OracleFactorySpec {
  OracleKind kind = OracleKind::kRegional;
  int region = 0;
  int regions = 3;
  OracleKind base = OracleKind::kAdversarial;  // epsilon_corrupted only
  double epsilon = 0.0;
  int snapshot_round = 0;
};

// Optimal inside the region band, uniform elsewhere.
exact::ExactPolicy regional_policy(const TabularMdp& mdp, int width, int region, int regions);

// Greedy reward minimizer under exact DP.
exact::ExactPolicy adversarial_policy(const TabularMdp& mdp);

// (1 - epsilon) base + epsilon uniform.
exact::ExactPolicy mix_uniform(const exact::ExactPolicy& base, double epsilon);

// Action distributions of tabular oracle specs (snapshot specs rejected).
std::vector<exact::ExactPolicy> oracle_policies(const TabularEnv& env, int width,
                                                const std::vector<OracleFactorySpec>& specs);

// Trains a learner and returns frozen copies at the requested rounds.
using SnapshotProvider = std::function<std::vector<std::unique_ptr<LearnerPolicy>>(
    const std::vector<int>& rounds, Rng& rng)>;

std::vector<OracleHandle> make_oracles(const Environment& env, int width,
                                       const std::vector<OracleFactorySpec>& specs, Rng& rng,
                                       const SnapshotProvider& snapshots = {});

// Named fixtures: chain-3, gridworld-5, gridworld-5-sparse,
// gridworld-adversarial, pointmass.
struct Fixture {
  std::string name;
  EnvSpec env;
  std::string default_oracles;
};

Fixture env_fixture(const std::string& name);
std::vector<std::string> env_fixture_names();

// Named oracle sets: none, regional1, regional2, regional3, adversarial3,
// snapshot3.
std::vector<OracleFactorySpec> oracle_fixture(const std::string& name);
std::vector<std::string> oracle_fixture_names();

}  // namespace rpi
