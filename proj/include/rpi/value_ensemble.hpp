#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

#include "rpi/mdp.hpp"
#include "rpi/nn.hpp"

namespace rpi {

struct ValueSample {
  State state;
  double target = 0.0;
};

// FIFO store of (state, return-to-go) pairs generated by one policy. Data
// from any other behavior policy is rejected.
class ValueBuffer {
 public:
  ValueBuffer(std::string tag, std::size_t capacity);

  const std::string& tag() const { return tag_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::deque<ValueSample>& samples() const { return samples_; }

  // Appends the segment of `traj` produced by this buffer's policy: the whole
  // trajectory for plain rollouts, the suffix from the switch step for
  // roll-in/roll-out ones. Targets are returns-to-go with `discount`.
  // Throws std::invalid_argument when that segment came from another policy.
  void append(const Trajectory& traj, double discount = 1.0);

  void clear() { samples_.clear(); }

 private:
  std::string tag_;
  std::size_t capacity_;
  std::deque<ValueSample> samples_;
};

enum class MemberKind { kTabular, kMlp };

struct EnsembleConfig {
  std::size_t members = 5;
  MemberKind kind = MemberKind::kTabular;
  int num_states = 0;          // tabular members
  std::size_t input_dim = 0;   // mlp members
  std::vector<std::size_t> hidden{64, 64};  // empty = linear regressor
  double init_scale = 1.0;     // stddev of the random tabular prior
  int epochs = 20;
  std::size_t minibatch = 64;
  double learning_rate = 1e-3;
};

struct Prediction {
  double mean = 0.0;
  double spread = 0.0;  // population stddev over members
};

struct FitReport {
  bool empty_buffer = false;
  std::size_t samples = 0;
};

// M independently initialized value approximators. Each fit trains every
// member on its own bootstrap resample of the buffer.
class ValueEnsemble {
 public:
  ValueEnsemble(EnsembleConfig config, Rng init_rng);

  const EnsembleConfig& config() const { return config_; }
  std::size_t size() const { return members_.size(); }

  FitReport fit(std::span<const ValueSample> buffer, Rng& rng);
  FitReport fit(const ValueBuffer& buffer, Rng& rng);

  Prediction predict(const State& state) const;
  double ucb(const State& state) const;
  double lcb(const State& state) const;
  double member_value(std::size_t k, const State& state) const;

 private:
  struct Member {
    std::vector<double> prior;  // tabular: value used where the resample has no data
    std::vector<double> table;  // tabular: current fit
    nn::Mlp net;
    nn::AdamState adam;
  };

  void fit_tabular(Member& member, std::span<const ValueSample> data,
                   std::span<const std::size_t> picks) const;
  void fit_mlp(Member& member, std::span<const ValueSample> data, std::vector<std::size_t> picks,
               Rng& rng) const;

  EnsembleConfig config_;
  std::vector<Member> members_;
};

// Population statistics of a member prediction vector.
Prediction summarize(std::span<const double> member_values);

// Count-based Monte-Carlo value table with a Hoeffding bonus.
class McTabularValue {
 public:
  explicit McTabularValue(int num_states, double delta = 0.05);

  // Folds the discounted return-to-go of every step into its state's mean.
  void update(const Trajectory& traj, double discount = 1.0);

  long count(int s) const { return counts_[static_cast<std::size_t>(s)]; }
  double mean(int s) const { return means_[static_cast<std::size_t>(s)]; }
  double delta() const { return delta_; }

  // mean + sqrt(2 H^2 log(2/delta) / N); +inf when N == 0.
  double ucb(int s, int horizon) const;
  // mean - bonus; -inf when N == 0 (the mean of an unvisited state reads as 0).
  double lcb(int s, int horizon) const;

  static double hoeffding_bonus(long count, int horizon, double delta);

 private:
  std::vector<long> counts_;
  std::vector<double> means_;
  double delta_;
};

// Rolls `oracle` from d0 `episodes` times into `buffer` and refits. Returns
// the number of environment steps consumed; zero episodes leaves the
// ensemble untouched.
std::size_t pretrain(ValueEnsemble& ensemble, ValueBuffer& buffer, const Environment& env,
                     const ActingPolicy& oracle, int episodes, Rng& rng, double discount = 1.0);

}  // namespace rpi
