#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfs/error.hpp"
#include "cfs/rng.hpp"

namespace cfs {

/// Layer widths including input and output, e.g. {25, 128, 128, 2}.
struct MlpShape {
  std::vector<std::size_t> sizes;

  std::size_t input() const { return sizes.front(); }
  std::size_t output() const { return sizes.back(); }
  std::size_t layers() const { return sizes.size() - 1; }
  std::size_t param_count() const;

  bool operator==(const MlpShape&) const = default;
};

/// Fully connected network with rectified-linear hidden layers and a linear
/// output layer. Parameters live in one flat vector (per layer: row-major
/// weight matrix, then bias), which keeps the optimizer, checkpointing and
/// finite-difference checks trivial.
class Mlp {
 public:
  explicit Mlp(MlpShape shape);

  /// Hidden weights ~ U(+-1/sqrt(fan_in)); biases zero. The output layer is
  /// zeroed so a fresh actor is uniform and a fresh critic predicts 0.
  static Mlp init(MlpShape shape, Rng& rng);

  const MlpShape& shape() const { return shape_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;

  /// Post-activation values per layer; acts[0] is the input copy.
  struct Trace {
    std::vector<std::vector<double>> acts;
  };

  std::vector<double> forward(std::span<const double> input,
                              Trace& trace) const;

  /// Gradient of sum(output * output_grad) with respect to the parameters,
  /// in flat layout.
  std::vector<double> backward(const Trace& trace,
                               std::span<const double> output_grad) const;

 private:
  void check_input(std::size_t n) const;

  MlpShape shape_;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_;  // per layer
  std::vector<std::size_t> bias_offset_;    // per layer
};

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam accumulator applying gradient-ascent steps: params += lr * m^ / ...
/// Callers hand it the ascent direction of their objective.
class Adam {
 public:
  Adam(std::size_t n, AdamParams params);

  void apply(std::span<double> params, std::span<const double> ascent_grad);

  const AdamParams& params() const { return params_; }
  std::uint64_t steps() const { return t_; }

  // Checkpoint access.
  std::vector<double>& m() { return m_; }
  std::vector<double>& v() { return v_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& v() const { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  AdamParams params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

/// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);

/// log(softmax(logits)); finite for any finite logits.
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace cfs
