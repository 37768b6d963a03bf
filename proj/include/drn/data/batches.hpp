#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drn/data/augment.hpp"
#include "drn/data/dataset.hpp"
#include "drn/numerics/tensor.hpp"

namespace drn {

template <typename T>
struct Batch {
  Tensor<T> images;  // N×3×32×32, normalized
  std::vector<int> labels;
};

/// Normalized batch of the listed items. `augment` null means an evaluation
/// batch; otherwise each item gets its own item_rng(seed, epoch, index).
template <typename T>
Batch<T> make_batch(const Dataset& data, std::span<const std::size_t> indices, const NormStats& stats,
                    const AugmentConfig* augment = nullptr, std::uint64_t seed = 0, std::uint64_t epoch = 0);

/// Seeded permutation of `indices`, cut into batches of at most `batch_size`.
std::vector<std::vector<std::size_t>> shuffled_batches(std::span<const std::size_t> indices, std::size_t batch_size,
                                                       std::uint64_t seed, std::uint64_t epoch);
/// Contiguous, unshuffled batches.
std::vector<std::vector<std::size_t>> sequential_batches(std::span<const std::size_t> indices,
                                                         std::size_t batch_size);

std::vector<std::size_t> iota_indices(std::size_t n);

}  // namespace drn
