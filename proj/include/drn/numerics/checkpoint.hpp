#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "drn/numerics/tensor.hpp"

namespace drn {

/// Binary tensor archive.
///
///   magic   "DRNT"
///   version u16 (1)
///   count   u32
///   per tensor: name length u32, UTF-8 name bytes, rank u8, extents u32[rank],
///               payload f32[numel]
///
/// All integers and floats little-endian.
inline constexpr char kCheckpointMagic[4] = {'D', 'R', 'N', 'T'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<float>>& tensors);
std::vector<NamedTensor<float>> load_checkpoint(const std::filesystem::path& path);

}  // namespace drn
