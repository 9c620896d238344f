#include "cfs/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cfs {

std::size_t MlpShape::param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    n += sizes[i] * sizes[i + 1] + sizes[i + 1];
  }
  return n;
}

Mlp::Mlp(MlpShape shape) : shape_(std::move(shape)) {
  if (shape_.sizes.size() < 2) {
    throw ShapeError("mlp: need at least input and output sizes");
  }
  for (std::size_t s : shape_.sizes) {
    if (s == 0) throw ShapeError("mlp: zero-width layer");
  }
  weight_offset_.resize(shape_.layers());
  bias_offset_.resize(shape_.layers());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < shape_.layers(); ++i) {
    const std::size_t in = shape_.sizes[i];
    const std::size_t out = shape_.sizes[i + 1];
    weight_offset_[i] = offset;
    offset += in * out;
    bias_offset_[i] = offset;
    offset += out;
  }
  params_.assign(offset, 0.0);
}

Mlp Mlp::init(MlpShape shape, Rng& rng) {
  Mlp mlp(std::move(shape));
  const std::size_t layers = mlp.shape_.layers();
  for (std::size_t i = 0; i + 1 < layers; ++i) {
    const std::size_t in = mlp.shape_.sizes[i];
    const std::size_t out = mlp.shape_.sizes[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    double* w = mlp.params_.data() + mlp.weight_offset_[i];
    for (std::size_t j = 0; j < in * out; ++j) {
      w[j] = rng.uniform(-bound, bound);
    }
  }
  // Output layer stays zero.
  return mlp;
}

void Mlp::check_input(std::size_t n) const {
  if (n != shape_.input()) {
    throw ShapeError("mlp: input size " + std::to_string(n) + " != " +
                     std::to_string(shape_.input()));
  }
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Trace trace;
  return forward(input, trace);
}

std::vector<double> Mlp::forward(std::span<const double> input,
                                 Trace& trace) const {
  check_input(input.size());
  const std::size_t layers = shape_.layers();
  trace.acts.assign(layers + 1, {});
  trace.acts[0].assign(input.begin(), input.end());
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t in = shape_.sizes[i];
    const std::size_t out = shape_.sizes[i + 1];
    const double* w = params_.data() + weight_offset_[i];
    const double* b = params_.data() + bias_offset_[i];
    const std::vector<double>& x = trace.acts[i];
    std::vector<double>& y = trace.acts[i + 1];
    y.assign(out, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      const double* row = w + r * in;
      double acc = b[r];
      for (std::size_t c = 0; c < in; ++c) acc += row[c] * x[c];
      y[r] = i + 1 < layers ? std::max(acc, 0.0) : acc;
    }
  }
  return trace.acts.back();
}

std::vector<double> Mlp::backward(const Trace& trace,
                                  std::span<const double> output_grad) const {
  const std::size_t layers = shape_.layers();
  if (trace.acts.size() != layers + 1) {
    throw ShapeError("mlp: trace does not match network depth");
  }
  if (output_grad.size() != shape_.output()) {
    throw ShapeError("mlp: output gradient size mismatch");
  }
  std::vector<double> grad(params_.size(), 0.0);
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t i = layers; i-- > 0;) {
    const std::size_t in = shape_.sizes[i];
    const std::size_t out = shape_.sizes[i + 1];
    const double* w = params_.data() + weight_offset_[i];
    const std::vector<double>& x = trace.acts[i];
    double* gw = grad.data() + weight_offset_[i];
    double* gb = grad.data() + bias_offset_[i];
    for (std::size_t r = 0; r < out; ++r) {
      const double d = delta[r];
      gb[r] = d;
      double* grow = gw + r * in;
      for (std::size_t c = 0; c < in; ++c) grow[c] = d * x[c];
    }
    if (i == 0) break;
    std::vector<double> prev(in, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = delta[r];
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) prev[c] += d * row[c];
    }
    // Hidden activations are post-ReLU, so x > 0 marks active units.
    for (std::size_t c = 0; c < in; ++c) {
      if (!(x[c] > 0.0)) prev[c] = 0.0;
    }
    delta = std::move(prev);
  }
  return grad;
}

Adam::Adam(std::size_t n, AdamParams params)
    : params_(params), m_(n, 0.0), v_(n, 0.0) {}

void Adam::apply(std::span<double> params,
                 std::span<const double> ascent_grad) {
  if (params.size() != m_.size() || ascent_grad.size() != m_.size()) {
    throw ShapeError("adam: parameter/gradient size mismatch");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(params_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(params_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = ascent_grad[i];
    m_[i] = params_.beta1 * m_[i] + (1.0 - params_.beta1) * g;
    v_[i] = params_.beta2 * v_[i] + (1.0 - params_.beta2) * g * g;
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] += params_.lr * mhat / (std::sqrt(vhat) + params_.epsilon);
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    sum += out[i];
  }
  for (double& o : out) o /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  const double log_sum = std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] - peak - log_sum;
  }
  return out;
}

}  // namespace cfs
