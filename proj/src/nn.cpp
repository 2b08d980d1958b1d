#include "rpi/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rpi::nn {

MlpShape::MlpShape(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw std::invalid_argument("MlpShape: need input and output widths");
  for (std::size_t w : widths_) {
    if (w == 0) throw std::invalid_argument("MlpShape: zero-width layer");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(num_params_);
    num_params_ += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
}

void MlpShape::initialize(std::span<double> params, Rng& rng, double output_init_scale) const {
  if (params.size() != num_params_) throw std::invalid_argument("MlpShape::initialize: size mismatch");
  std::fill(params.begin(), params.end(), 0.0);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const bool last = l + 1 == num_layers();
    const double scale = std::sqrt(2.0 / static_cast<double>(in)) * (last ? output_init_scale : 1.0);
    double* w = params.data() + offsets_[l];
    for (std::size_t i = 0; i < out * in; ++i) w[i] = scale * rng.normal();
  }
}

void MlpShape::forward(std::span<const double> params, std::span<const double> x,
                       MlpCache& cache) const {
  if (x.size() != input_dim()) throw std::invalid_argument("Mlp::forward: input width mismatch");
  const std::size_t layers = num_layers();
  cache.inputs.resize(layers);
  cache.inputs[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const double* w = params.data() + offsets_[l];
    const double* b = w + out * in;
    const std::vector<double>& input = cache.inputs[l];
    std::vector<double>& dest = l + 1 < layers ? cache.inputs[l + 1] : cache.output;
    dest.assign(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w + o * in;
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * input[i];
      dest[o] = (l + 1 < layers && acc < 0.0) ? 0.0 : acc;
    }
  }
}

void MlpShape::backward(std::span<const double> params, const MlpCache& cache,
                        std::span<const double> upstream, std::span<double> grad) const {
  if (upstream.size() != output_dim() || grad.size() < num_params_) {
    throw std::invalid_argument("Mlp::backward: dimension mismatch");
  }
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> prev;
  for (std::size_t l = num_layers(); l-- > 0;) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const double* w = params.data() + offsets_[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + out * in;
    const std::vector<double>& input = cache.inputs[l];
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * input[i];
      gb[o] += d;
    }
    if (l == 0) break;
    prev.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    // The cached input of layer l is the ReLU output of layer l-1.
    for (std::size_t i = 0; i < in; ++i) {
      if (input[i] <= 0.0) prev[i] = 0.0;
    }
    delta.swap(prev);
  }
}

Mlp::Mlp(std::vector<std::size_t> widths, Rng& rng, double output_init_scale)
    : shape_(std::move(widths)), params_(shape_.num_params(), 0.0) {
  shape_.initialize(params_, rng, output_init_scale);
}

std::vector<double> Mlp::predict(std::span<const double> x) const {
  MlpCache cache;
  forward(x, cache);
  return cache.output;
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               const AdamConfig& config) {
  if (grad.size() != params.size()) throw std::invalid_argument("adam_step: dimension mismatch");
  if (state.first_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameters");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

}  // namespace rpi::nn
