#pragma once

// Small networks and synthetic datasets shared by the slower test suites.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "drn/data/dataset.hpp"
#include "drn/model/network.hpp"

namespace fixture {

/// Same topology as the default network, every width shrunk.
inline drn::NetworkConfig tiny_network(std::size_t vertices = 3) {
  drn::NetworkConfig c;
  for (auto& s : c.stem) s.out_channels = 4;
  c.set_hidden(4);
  c.head_hidden = 16;
  c.search_vertices = vertices;
  return c;
}

inline drn::Genotype tiny_genotype() {
  using drn::Activation;
  return drn::Genotype({{0, Activation::ReLU}, {1, Activation::Sigmoid}, {1, Activation::Identity}});
}

/// Uniform random bytes and labels.
inline drn::Dataset random_dataset(std::size_t n, std::uint64_t seed, drn::SplitTag tag = drn::SplitTag::Train) {
  std::mt19937_64 rng(seed);
  drn::Dataset d;
  d.tag = tag;
  d.images.resize(n * drn::kImageBytes);
  for (auto& b : d.images) b = static_cast<std::uint8_t>(rng() & 0xFF);
  d.labels.resize(n);
  for (auto& l : d.labels) l = static_cast<std::uint8_t>(rng() % drn::kNumClasses);
  return d;
}

/// Learnable toy task: the label picks which horizontal band of the image is
/// bright and the dominant channel, on top of noise.
inline drn::Dataset banded_dataset(std::size_t n, std::uint64_t seed, drn::SplitTag tag = drn::SplitTag::Train) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(0, 60);
  drn::Dataset d;
  d.tag = tag;
  d.images.resize(n * drn::kImageBytes);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % drn::kNumClasses;
    d.labels[i] = static_cast<std::uint8_t>(label);
    auto img = d.image(i);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x) {
          int v = noise(rng);
          if (y / 7 == label % 5 && c == (label < 5 ? 0u : 2u)) v += 180;
          img[(c * 32 + y) * 32 + x] = static_cast<std::uint8_t>(v);
        }
  }
  return d;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("drn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixture
