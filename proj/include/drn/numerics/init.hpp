#pragma once

#include <cmath>
#include <random>

#include "drn/numerics/tensor.hpp"

namespace drn {

using Rng = std::mt19937_64;

/// Trainable tensor with values drawn from U(-bound, bound).
template <typename T>
Tensor<T> uniform_parameter(Shape shape, double bound, Rng& rng) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : t.mutable_data()) v = static_cast<T>(dist(rng));
  t.set_requires_grad(true);
  return t;
}

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
Tensor<T> fan_in_parameter(Shape shape, std::size_t fan_in, Rng& rng) {
  return uniform_parameter<T>(std::move(shape), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
}

template <typename T>
Tensor<T> zero_parameter(Shape shape) {
  Tensor<T> t(std::move(shape));
  t.set_requires_grad(true);
  return t;
}

}  // namespace drn
