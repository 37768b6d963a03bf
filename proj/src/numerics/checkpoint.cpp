#include "drn/numerics/checkpoint.hpp"

#include <fstream>

#include "drn/util/byte_io.hpp"

namespace drn {

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor<float>>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  os.write(kCheckpointMagic, 4);
  io::put_u16(os, kCheckpointVersion);
  io::put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    io::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    if (tensor.rank() > 255) throw FormatError("tensor rank exceeds 255: " + name);
    io::put_u8(os, static_cast<std::uint8_t>(tensor.rank()));
    for (std::size_t extent : tensor.shape()) io::put_u32(os, static_cast<std::uint32_t>(extent));
    for (float v : tensor.data()) io::put_f32(os, v);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<NamedTensor<float>> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  io::Reader in(is, path.string());
  char magic[4];
  in.bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError(path.string() + ": bad checkpoint magic");
  const std::uint16_t version = in.u16();
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  std::vector<NamedTensor<float>> out;
  out.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    std::string name(in.u32(), '\0');
    in.bytes(name.data(), name.size());
    Shape shape(in.u8());
    for (auto& extent : shape) extent = in.u32();
    std::vector<float> values(numel(shape));
    for (auto& v : values) v = in.f32();
    out.push_back({std::move(name), Tensor<float>(std::move(shape), std::move(values))});
  }
  return out;
}

}  // namespace drn
