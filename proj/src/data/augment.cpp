#include "drn/data/augment.hpp"

#include <algorithm>
#include <vector>

namespace drn {

namespace {

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void hflip(ImageView img) {
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < img.height; ++y) {
      float* row = img.data.data() + (c * img.height + y) * img.width;
      std::reverse(row, row + img.width);
    }
}

void pad_crop(ImageView img, std::size_t pad, std::size_t offset_y, std::size_t offset_x) {
  if (offset_y > 2 * pad || offset_x > 2 * pad) throw std::out_of_range("crop offset beyond the padded image");
  if (offset_y == pad && offset_x == pad) return;
  const std::size_t h = img.height, w = img.width;
  std::vector<float> src(img.data.begin(), img.data.end());
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        // Output (y, x) reads padded (y + offset_y, x + offset_x) = source (.. - pad).
        const auto sy = static_cast<std::ptrdiff_t>(y + offset_y) - static_cast<std::ptrdiff_t>(pad);
        const auto sx = static_cast<std::ptrdiff_t>(x + offset_x) - static_cast<std::ptrdiff_t>(pad);
        const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(h) && sx < static_cast<std::ptrdiff_t>(w);
        img.data[(c * h + y) * w + x] = inside ? src[(c * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)] : 0.0f;
      }
}

void cutout(ImageView img, std::size_t size, std::size_t center_y, std::size_t center_x) {
  if (size == 0) return;
  const auto half = static_cast<std::ptrdiff_t>(size / 2);
  const auto y0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(center_y) - half);
  const auto x0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(center_x) - half);
  const auto y1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(img.height),
                                           static_cast<std::ptrdiff_t>(center_y) - half + static_cast<std::ptrdiff_t>(size));
  const auto x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(img.width),
                                           static_cast<std::ptrdiff_t>(center_x) - half + static_cast<std::ptrdiff_t>(size));
  for (std::size_t c = 0; c < img.channels; ++c)
    for (auto y = y0; y < y1; ++y)
      for (auto x = x0; x < x1; ++x) img.data[(c * img.height + static_cast<std::size_t>(y)) * img.width + static_cast<std::size_t>(x)] = 0.0f;
}

void augment(ImageView img, const AugmentConfig& config, std::mt19937_64& rng) {
  if (!config.enabled) return;
  // Every draw happens unconditionally so the stream layout is fixed.
  const bool flip = unit(rng) < config.hflip_prob;
  const std::size_t oy = below(rng, 2 * config.crop_pad + 1);
  const std::size_t ox = below(rng, 2 * config.crop_pad + 1);
  const std::size_t cy = below(rng, img.height);
  const std::size_t cx = below(rng, img.width);
  if (flip) hflip(img);
  pad_crop(img, config.crop_pad, oy, ox);
  cutout(img, config.cutout_size, cy, cx);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 item_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t item) {
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed) ^ epoch) ^ item));
}

}  // namespace drn
