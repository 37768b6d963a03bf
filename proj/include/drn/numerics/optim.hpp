#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "drn/numerics/tensor.hpp"

namespace drn {

enum class OptimizerKind { Adam, Sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

class MissingGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adam (bias-corrected, Kingma–Ba) or plain SGD over a fixed parameter set.
///
/// `step` consumes the accumulated gradients; clearing them afterwards is the
/// caller's job (`zero_grad`).
template <typename T>
class Optimizer {
 public:
  Optimizer(std::vector<Tensor<T>> params, OptimizerConfig config);

  /// Throws MissingGradientError if any parameter has no gradient.
  void step();
  void zero_grad();

  std::size_t step_count() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const std::vector<Tensor<T>>& parameters() const { return params_; }
  bool manages(const Tensor<T>& t) const;

  std::span<const T> first_moment(std::size_t i) const { return first_[i]; }
  std::span<const T> second_moment(std::size_t i) const { return second_[i]; }

 private:
  std::vector<Tensor<T>> params_;
  OptimizerConfig config_;
  std::vector<std::vector<T>> first_;
  std::vector<std::vector<T>> second_;
  std::size_t steps_ = 0;
};

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm measured before clipping.
template <typename T>
double clip_grad_norm(const std::vector<Tensor<T>>& params, double max_norm);

}  // namespace drn
