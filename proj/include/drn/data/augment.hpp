#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace drn {

struct AugmentConfig {
  bool enabled = true;
  double hflip_prob = 0.5;
  std::size_t crop_pad = 4;
  std::size_t cutout_size = 16;
};

/// Image view: planar C×H×W floats.
struct ImageView {
  std::span<float> data;
  std::size_t channels;
  std::size_t height;
  std::size_t width;
};

void hflip(ImageView img);
/// Zero-pads by `pad` on every side and keeps the window whose top-left
/// corner sits at (offset_y, offset_x) of the padded image. Offsets are in
/// [0, 2·pad]; (pad, pad) leaves the image unchanged.
void pad_crop(ImageView img, std::size_t pad, std::size_t offset_y, std::size_t offset_x);
/// Zeroes the size×size square centred at (center_y, center_x), clipped to
/// the image. size 0 is a no-op.
void cutout(ImageView img, std::size_t size, std::size_t center_y, std::size_t center_x);

/// Flip, then pad-crop, then cutout, drawing from `rng`.
void augment(ImageView img, const AugmentConfig& config, std::mt19937_64& rng);

std::uint64_t splitmix64(std::uint64_t x);
/// Independent stream per (seed, epoch, item), so results do not depend on
/// which worker handles an item.
std::mt19937_64 item_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t item);

}  // namespace drn
