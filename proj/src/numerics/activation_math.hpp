#pragma once

#include <cmath>

#include "drn/numerics/activation.hpp"

namespace drn::detail {

template <typename T>
inline T sigmoid(T x) {
  // Branching keeps exp() from overflowing for large |x|.
  if (x >= T(0)) {
    const T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
inline T apply(Activation f, T x) {
  switch (f) {
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Tanh: return std::tanh(x);
    case Activation::ReLU: return x > T(0) ? x : T(0);
    case Activation::Identity: return x;
  }
  return x;
}

// Derivative expressed through the forward output y = f(x).
template <typename T>
inline T derivative_from_output(Activation f, T y) {
  switch (f) {
    case Activation::Sigmoid: return y * (T(1) - y);
    case Activation::Tanh: return T(1) - y * y;
    case Activation::ReLU: return y > T(0) ? T(1) : T(0);
    case Activation::Identity: return T(1);
  }
  return T(1);
}

}  // namespace drn::detail
