#include "drn/data/batches.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace drn {

template <typename T>
Batch<T> make_batch(const Dataset& data, std::span<const std::size_t> indices, const NormStats& stats,
                    const AugmentConfig* augment_config, std::uint64_t seed, std::uint64_t epoch) {
  if (indices.empty()) throw std::invalid_argument("empty batch");
  Batch<T> out;
  out.images = Tensor<T>(Shape{indices.size(), kImageChannels, kImageSide, kImageSide});
  out.labels.reserve(indices.size());
  std::vector<float> scratch(kImageBytes);
  auto dst = out.images.mutable_data();
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const std::size_t i = indices[b];
    if (i >= data.size()) throw std::out_of_range("batch index " + std::to_string(i));
    normalize_image(data.image(i), stats, scratch);
    if (augment_config && augment_config->enabled) {
      auto rng = item_rng(seed, epoch, i);
      augment(ImageView{scratch, kImageChannels, kImageSide, kImageSide}, *augment_config, rng);
    }
    for (std::size_t k = 0; k < kImageBytes; ++k) dst[b * kImageBytes + k] = static_cast<T>(scratch[k]);
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> shuffled_batches(std::span<const std::size_t> indices, std::size_t batch_size,
                                                       std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(indices.begin(), indices.end());
  auto rng = item_rng(seed, epoch, ~std::uint64_t{0});
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * i) >> 64);
    std::swap(order[i - 1], order[j]);
  }
  return sequential_batches(order, batch_size);
}

std::vector<std::vector<std::size_t>> sequential_batches(std::span<const std::size_t> indices,
                                                         std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < indices.size(); s += batch_size) {
    const std::size_t e = std::min(indices.size(), s + batch_size);
    out.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(s), indices.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

template Batch<float> make_batch<float>(const Dataset&, std::span<const std::size_t>, const NormStats&,
                                        const AugmentConfig*, std::uint64_t, std::uint64_t);
template Batch<double> make_batch<double>(const Dataset&, std::span<const std::size_t>, const NormStats&,
                                          const AugmentConfig*, std::uint64_t, std::uint64_t);

}  // namespace drn
