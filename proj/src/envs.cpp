#include "rpi/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace rpi {

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kChain: return "chain";
    case EnvKind::kGridworld: return "gridworld";
    case EnvKind::kGridworldSparse: return "gridworld_sparse";
    case EnvKind::kPointmass: return "pointmass_continuous";
  }
  return "unknown";
}

namespace {

void add_outcome(std::vector<Outcome>& row, int next, double prob) {
  if (prob == 0.0) return;
  for (Outcome& o : row) {
    if (o.next == next) {
      o.prob += prob;
      return;
    }
  }
  row.push_back({next, prob});
}

// Lifts cell-level dynamics to time-augmented states.
struct CellModel {
  int cells = 0;
  int actions = 0;
  std::function<std::vector<Outcome>(int cell, int action)> move;
  std::function<double(int cell, int action)> reward;
  std::vector<double> start;  // over cells
};

TabularEnv lift(const std::string& name, const CellModel& m, int horizon) {
  if (horizon <= 0) throw std::invalid_argument(name + ": horizon must be positive");
  const int terminal = horizon * m.cells;
  const int num_states = terminal + 1;
  std::vector<int> step(static_cast<std::size_t>(num_states));
  std::vector<std::vector<Outcome>> transitions(static_cast<std::size_t>(num_states) * m.actions);
  std::vector<double> reward(static_cast<std::size_t>(num_states) * m.actions, 0.0);
  std::vector<double> d0(static_cast<std::size_t>(num_states), 0.0);
  std::vector<std::vector<double>> features(static_cast<std::size_t>(num_states),
                                            std::vector<double>(static_cast<std::size_t>(m.cells) + 1, 0.0));
  for (int t = 0; t < horizon; ++t) {
    for (int c = 0; c < m.cells; ++c) {
      const int s = t * m.cells + c;
      step[static_cast<std::size_t>(s)] = t;
      features[static_cast<std::size_t>(s)][static_cast<std::size_t>(c)] = 1.0;
      features[static_cast<std::size_t>(s)].back() = static_cast<double>(t) / horizon;
      for (int a = 0; a < m.actions; ++a) {
        const std::size_t idx = static_cast<std::size_t>(s) * m.actions + a;
        reward[idx] = m.reward(c, a);
        for (const Outcome& o : m.move(c, a)) {
          const int next = t + 1 < horizon ? (t + 1) * m.cells + o.next : terminal;
          add_outcome(transitions[idx], next, o.prob);
        }
      }
    }
  }
  step[static_cast<std::size_t>(terminal)] = horizon;
  features[static_cast<std::size_t>(terminal)].back() = 1.0;
  for (int a = 0; a < m.actions; ++a) {
    transitions[static_cast<std::size_t>(terminal) * m.actions + a] = {{terminal, 1.0}};
  }
  for (int c = 0; c < m.cells; ++c) d0[static_cast<std::size_t>(c)] = m.start[static_cast<std::size_t>(c)];
  TabularMdp mdp(m.actions, horizon, std::move(step), std::move(transitions), std::move(reward),
                 std::move(d0));
  return TabularEnv(name, std::move(mdp), std::move(features));
}

void check_slip(double slip) {
  if (!(slip >= 0.0 && slip <= 1.0)) throw std::invalid_argument("slip must lie in [0, 1]");
}

}  // namespace

TabularEnv make_chain(int positions, int horizon, double slip) {
  if (positions < 2) throw std::invalid_argument("chain: need at least 2 positions");
  check_slip(slip);
  CellModel m;
  m.cells = positions;
  m.actions = 2;
  m.move = [positions, slip](int c, int a) {
    const int dir = a == 0 ? -1 : 1;
    std::vector<Outcome> row;
    add_outcome(row, std::clamp(c + dir, 0, positions - 1), 1.0 - slip);
    add_outcome(row, std::clamp(c - dir, 0, positions - 1), slip);
    return row;
  };
  m.reward = [positions](int c, int a) {
    if (c == positions - 1) return 1.0;
    if (c == 0 && a == 0) return 0.2;
    return 0.0;
  };
  m.start.assign(static_cast<std::size_t>(positions), 1.0 / positions);
  return lift("chain-" + std::to_string(positions), m, horizon);
}

TabularEnv make_gridworld(int width, int height, int horizon, bool sparse, double slip) {
  if (width < 2 || height < 1) throw std::invalid_argument("gridworld: grid too small");
  check_slip(slip);
  const int goal_row = height / 2;
  const int goal_col = width - 1;
  const double max_dist = static_cast<double>(std::max(goal_row, height - 1 - goal_row) + goal_col);
  static constexpr int kDr[5] = {-1, 1, 0, 0, 0};
  static constexpr int kDc[5] = {0, 0, -1, 1, 0};
  CellModel m;
  m.cells = width * height;
  m.actions = 5;
  auto target = [width, height](int c, int a) {
    const int r = std::clamp(c / width + kDr[a], 0, height - 1);
    const int col = std::clamp(c % width + kDc[a], 0, width - 1);
    return r * width + col;
  };
  m.move = [target, slip](int c, int a) {
    std::vector<Outcome> row;
    add_outcome(row, target(c, a), 1.0 - slip);
    for (int b = 0; b < 5; ++b) add_outcome(row, target(c, b), slip / 5.0);
    return row;
  };
  m.reward = [=](int c, int) {
    const int dist = std::abs(c / width - goal_row) + std::abs(c % width - goal_col);
    if (sparse) return dist == 0 ? 1.0 : 0.0;
    return 1.0 - dist / max_dist;
  };
  m.start.assign(static_cast<std::size_t>(m.cells), 0.0);
  for (int r = 0; r < height; ++r) m.start[static_cast<std::size_t>(r * width)] = 1.0 / height;
  const std::string name = "gridworld-" + std::to_string(width) + "x" + std::to_string(height) +
                           (sparse ? "-sparse" : "");
  return lift(name, m, horizon);
}

PointmassEnv::PointmassEnv(int horizon, double dt) : horizon_(horizon), dt_(dt) {
  if (horizon <= 0 || !(dt > 0.0)) throw std::invalid_argument("pointmass: bad horizon or dt");
}

ActionSpace PointmassEnv::action_space() const {
  ActionSpace space;
  space.kind = ActionKind::kContinuous;
  space.dim = 1;
  return space;
}

State PointmassEnv::make_state(double x, double v, int step) const {
  return State{-1, step, {x, v, static_cast<double>(step) / horizon_}};
}

State PointmassEnv::reset(Rng& rng) const { return make_state(rng.uniform(-1.0, 1.0), 0.0, 0); }

StepResult PointmassEnv::step(const State& state, const Action& action, Rng&) const {
  if (action.values.size() != 1) throw std::invalid_argument("pointmass: action must be 1-D");
  const double x = state.features[0];
  const double u = std::clamp(action.values[0], -1.0, 1.0);
  const double v = state.features[1] + dt_ * u;
  return StepResult{make_state(x + dt_ * v, v, state.step + 1), std::exp(-x * x)};
}

std::unique_ptr<Environment> make_env(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::kChain:
      return std::make_unique<TabularEnv>(make_chain(spec.width, spec.horizon, spec.slip));
    case EnvKind::kGridworld:
    case EnvKind::kGridworldSparse:
      return std::make_unique<TabularEnv>(make_gridworld(
          spec.width, spec.height, spec.horizon, spec.kind == EnvKind::kGridworldSparse, spec.slip));
    case EnvKind::kPointmass:
      return std::make_unique<PointmassEnv>(spec.horizon);
  }
  throw std::invalid_argument("make_env: unknown kind");
}

int cell_of_state(const TabularMdp& mdp, int state) {
  if (mdp.is_terminal(state)) return -1;
  const int cells = (mdp.num_states() - 1) / mdp.horizon();
  return state % cells;
}

int region_of_cell(int cell, int width, int regions) {
  return (cell % width) * regions / width;
}

exact::ExactPolicy regional_policy(const TabularMdp& mdp, int width, int region, int regions) {
  if (regions <= 0 || region < 0 || region >= regions) {
    throw std::invalid_argument("regional_policy: region outside the mask set");
  }
  if (regions > width) throw std::invalid_argument("regional_policy: more regions than columns");
  const exact::ExactPolicy best = exact::solve_optimal(mdp).policy;
  exact::ExactPolicy out = exact::ExactPolicy::uniform(mdp);
  for (int s = 0; s < mdp.num_states(); ++s) {
    const int cell = cell_of_state(mdp, s);
    if (cell >= 0 && region_of_cell(cell, width, regions) == region) out.set_row(s, best.row(s));
  }
  return out;
}

exact::ExactPolicy adversarial_policy(const TabularMdp& mdp) {
  return exact::solve_optimal(mdp, exact::Objective::kMinimize).policy;
}

exact::ExactPolicy mix_uniform(const exact::ExactPolicy& base, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("mix_uniform: epsilon outside [0,1]");
  exact::ExactPolicy out = base;
  std::vector<double> row(static_cast<std::size_t>(base.num_actions()));
  for (int s = 0; s < base.num_states(); ++s) {
    for (int a = 0; a < base.num_actions(); ++a) {
      row[static_cast<std::size_t>(a)] = (1.0 - epsilon) * base.prob(s, a) + epsilon / base.num_actions();
    }
    out.set_row(s, row);
  }
  return out;
}

namespace {

std::string oracle_name(const OracleFactorySpec& spec, std::size_t index) {
  switch (spec.kind) {
    case OracleKind::kSnapshot: return "snapshot" + std::to_string(spec.snapshot_round);
    case OracleKind::kRegional: return "regional" + std::to_string(spec.region);
    case OracleKind::kAdversarial: return "adversarial" + std::to_string(index);
    case OracleKind::kEpsilonCorrupted: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "eps%.2f-%zu", spec.epsilon, index);
      return buf;
    }
  }
  return "oracle" + std::to_string(index);
}

exact::ExactPolicy base_policy(const TabularMdp& mdp, int width, OracleKind kind, const OracleFactorySpec& spec) {
  switch (kind) {
    case OracleKind::kRegional: return regional_policy(mdp, width, spec.region, spec.regions);
    case OracleKind::kAdversarial: return adversarial_policy(mdp);
    default: throw std::invalid_argument("oracle spec has no tabular form");
  }
}

}  // namespace

std::vector<exact::ExactPolicy> oracle_policies(const TabularEnv& env, int width,
                                                const std::vector<OracleFactorySpec>& specs) {
  std::vector<exact::ExactPolicy> out;
  for (const OracleFactorySpec& spec : specs) {
    if (spec.kind == OracleKind::kEpsilonCorrupted) {
      out.push_back(mix_uniform(base_policy(env.mdp(), width, spec.base, spec), spec.epsilon));
    } else {
      out.push_back(base_policy(env.mdp(), width, spec.kind, spec));
    }
  }
  return out;
}

std::vector<OracleHandle> make_oracles(const Environment& env, int width,
                                       const std::vector<OracleFactorySpec>& specs, Rng& rng,
                                       const SnapshotProvider& snapshots) {
  std::vector<int> rounds;
  for (const OracleFactorySpec& spec : specs) {
    if (spec.kind == OracleKind::kSnapshot) rounds.push_back(spec.snapshot_round);
  }
  std::vector<std::unique_ptr<LearnerPolicy>> frozen;
  if (!rounds.empty()) {
    if (!snapshots) throw std::invalid_argument("make_oracles: snapshot oracles need a trainer");
    frozen = snapshots(rounds, rng);
    if (frozen.size() != rounds.size()) throw std::logic_error("make_oracles: snapshot count mismatch");
  }

  const auto* tab = dynamic_cast<const TabularEnv*>(&env);
  std::vector<OracleHandle> out;
  std::size_t next_snapshot = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const OracleFactorySpec& spec = specs[i];
    const std::string name = oracle_name(spec, i);
    if (spec.kind == OracleKind::kSnapshot) {
      out.push_back(std::make_shared<SnapshotOracle>(name, *frozen[next_snapshot++]));
      continue;
    }
    if (tab == nullptr) throw std::invalid_argument("make_oracles: " + name + " needs a tabular env");
    if (spec.kind == OracleKind::kEpsilonCorrupted) {
      auto base = std::make_shared<TableOracle>(name + "-base", base_policy(tab->mdp(), width, spec.base, spec));
      out.push_back(std::make_shared<EpsilonCorruptedOracle>(name, base, spec.epsilon, env.action_space()));
    } else {
      out.push_back(std::make_shared<TableOracle>(name, base_policy(tab->mdp(), width, spec.kind, spec)));
    }
  }
  return out;
}

Fixture env_fixture(const std::string& name) {
  if (name == "chain-3") return {name, {EnvKind::kChain, 3, 1, 2, 0.1, true}, "regional3"};
  if (name == "gridworld-5") return {name, {EnvKind::kGridworld, 5, 5, 12, 0.1, true}, "regional3"};
  if (name == "gridworld-5-sparse") {
    return {name, {EnvKind::kGridworldSparse, 5, 5, 12, 0.1, false}, "regional3"};
  }
  if (name == "gridworld-adversarial") {
    return {name, {EnvKind::kGridworld, 5, 5, 12, 0.1, true}, "adversarial3"};
  }
  if (name == "pointmass") return {name, {EnvKind::kPointmass, 1, 1, 20, 0.0, true}, "none"};
  throw std::invalid_argument("unknown env fixture '" + name + "'");
}

std::vector<std::string> env_fixture_names() {
  return {"chain-3", "gridworld-5", "gridworld-5-sparse", "gridworld-adversarial", "pointmass"};
}

std::vector<OracleFactorySpec> oracle_fixture(const std::string& name) {
  auto regional = [](int count) {
    std::vector<OracleFactorySpec> out;
    for (int r = 0; r < count; ++r) {
      OracleFactorySpec spec;
      spec.kind = OracleKind::kRegional;
      spec.region = r;
      out.push_back(spec);
    }
    return out;
  };
  if (name == "none") return {};
  if (name == "regional1") return regional(1);
  if (name == "regional2") return regional(2);
  if (name == "regional3") return regional(3);
  if (name == "adversarial3") {
    std::vector<OracleFactorySpec> out;
    for (double eps : {0.0, 0.25, 0.5}) {
      OracleFactorySpec spec;
      spec.kind = OracleKind::kEpsilonCorrupted;
      spec.base = OracleKind::kAdversarial;
      spec.epsilon = eps;
      out.push_back(spec);
    }
    return out;
  }
  if (name == "snapshot3") {
    std::vector<OracleFactorySpec> out;
    for (int round : {10, 30, 60}) {
      OracleFactorySpec spec;
      spec.kind = OracleKind::kSnapshot;
      spec.snapshot_round = round;
      out.push_back(spec);
    }
    return out;
  }
  throw std::invalid_argument("unknown oracle fixture '" + name + "'");
}

std::vector<std::string> oracle_fixture_names() {
  return {"none", "regional1", "regional2", "regional3", "adversarial3", "snapshot3"};
}

}  // namespace rpi
