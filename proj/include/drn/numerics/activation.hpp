#pragma once

#include <array>
#include <string_view>

namespace drn {

/// Candidate activation set searched over by the cell relaxation.
enum class Activation { Sigmoid = 0, Tanh = 1, ReLU = 2, Identity = 3 };

inline constexpr std::size_t kNumActivations = 4;
inline constexpr std::array<Activation, kNumActivations> kAllActivations = {
    Activation::Sigmoid, Activation::Tanh, Activation::ReLU, Activation::Identity};

std::string_view to_string(Activation f);
/// Accepts the canonical names (`Sigmoid`, `Tanh`, `ReLU`, `Identity`), case-insensitive.
Activation parse_activation(std::string_view name);

}  // namespace drn
