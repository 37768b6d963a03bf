#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

#include "drn/numerics/activation.hpp"

namespace drn {

std::string_view to_string(Activation f) {
  switch (f) {
    case Activation::Sigmoid: return "Sigmoid";
    case Activation::Tanh: return "Tanh";
    case Activation::ReLU: return "ReLU";
    case Activation::Identity: return "Identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Activation f : kAllActivations) {
    std::string canon(to_string(f));
    std::transform(canon.begin(), canon.end(), canon.begin(), [](unsigned char c) { return std::tolower(c); });
    if (canon == lower) return f;
  }
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

}  // namespace drn
