#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rpi/rng.hpp"

namespace rpi::nn {

// Activations cached by a forward pass, consumed by backward().
struct MlpCache {
  std::vector<std::vector<double>> inputs;  // input to each layer (post-ReLU of the previous one)
  std::vector<double> output;
};

// Layout of a fully connected network with ReLU hidden layers and a linear
// output layer. Parameters are held by the caller in one flat buffer: per
// layer, W (out x in, row-major) then b.
class MlpShape {
 public:
  MlpShape() = default;
  // widths = {input, hidden..., output}
  explicit MlpShape(std::vector<std::size_t> widths);

  std::size_t input_dim() const { return widths_.front(); }
  std::size_t output_dim() const { return widths_.back(); }
  std::size_t num_layers() const { return widths_.size() - 1; }
  const std::vector<std::size_t>& widths() const { return widths_; }
  std::size_t num_params() const { return num_params_; }

  // He-normal weights, zero biases; output weights additionally scaled.
  void initialize(std::span<double> params, Rng& rng, double output_init_scale = 1.0) const;

  void forward(std::span<const double> params, std::span<const double> x, MlpCache& cache) const;

  // Adds d(upstream . output)/d(params) to `grad`, given the cache of the
  // forward pass that produced the output.
  void backward(std::span<const double> params, const MlpCache& cache,
                std::span<const double> upstream, std::span<double> grad) const;

 private:
  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::size_t num_params_ = 0;
};

// An MlpShape that owns its parameters.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> widths, Rng& rng, double output_init_scale = 1.0);

  const MlpShape& shape() const { return shape_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  void forward(std::span<const double> x, MlpCache& cache) const { shape_.forward(params_, x, cache); }
  std::vector<double> predict(std::span<const double> x) const;
  void backward(const MlpCache& cache, std::span<const double> upstream,
                std::span<double> grad) const {
    shape_.backward(params_, cache, upstream, grad);
  }

 private:
  MlpShape shape_;
  std::vector<double> params_;
};

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step = 0;
};

// One descent step params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               const AdamConfig& config);

}  // namespace rpi::nn
