#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "drn/data/batches.hpp"
#include "drn/renet/renet.hpp"

namespace drn {

struct ConvSpec {
  std::size_t out_channels = 64;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
};

/// Conv stem → three ReNet layers → linear/ReLU/linear head.
struct NetworkConfig {
  std::size_t in_channels = kImageChannels;
  std::size_t image_size = kImageSide;
  std::vector<ConvSpec> stem{ConvSpec{}, ConvSpec{}, ConvSpec{}};
  std::vector<ReNetLayerConfig> renet{ReNetLayerConfig{}, ReNetLayerConfig{}, ReNetLayerConfig{}};
  std::size_t head_hidden = 1024;
  std::size_t num_classes = kNumClasses;
  /// Vertex count of a search cell's alpha table.
  std::size_t search_vertices = Genotype::kDefaultVertices;
  double alpha_init_range = 1e-3;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  void set_variant(ReNetVariant v);
  void set_cell(CellKind k);
  void set_hidden(std::size_t hidden);
};

/// Intermediate shapes of one forward pass.
struct ForwardTrace {
  Shape stem_output;                // N×H×W×C
  std::vector<Shape> renet_output;  // per layer, N×H'×W'×2H
};

struct ParameterReport {
  std::size_t stem = 0;
  std::vector<std::size_t> renet_rnn;  // cell weights per ReNet layer
  std::size_t rnn = 0;                 // sum of renet_rnn
  std::size_t sigmoid_weights = 0;
  std::size_t head = 0;
  std::size_t alpha = 0;
  std::size_t total = 0;

  double millions() const { return static_cast<double>(total) / 1e6; }
  std::string format() const;
};

template <typename T>
class Network {
 public:
  /// `source` supplies the genotype for CellKind::Genotype layers. Mixed
  /// layers use source.alpha, or a fresh random table if it is null.
  Network(NetworkConfig config, CellSource<T> source, std::uint64_t seed);

  /// N×C×H×W → N×num_classes logits.
  Tensor<T> forward(const Tensor<T>& images, ForwardTrace* trace = nullptr,
                    const SweepObserver<T>& observer = {}) const;

  const NetworkConfig& config() const { return config_; }
  const ReNetLayer<T>& renet_layer(std::size_t k) const { return *renet_.at(k); }
  std::shared_ptr<AlphaTable<T>> alpha() const { return alpha_; }
  const std::optional<Genotype>& genotype() const { return genotype_; }

  /// Every unique trainable tensor with its checkpoint name. Alpha tensors
  /// come last.
  std::vector<NamedTensor<T>> named_parameters() const;
  std::vector<Tensor<T>> weight_parameters() const;
  std::vector<Tensor<T>> alpha_parameters() const;

 private:
  NetworkConfig config_;
  std::optional<Genotype> genotype_;
  std::shared_ptr<AlphaTable<T>> alpha_;
  std::vector<Tensor<T>> conv_w_, conv_b_;
  std::vector<std::unique_ptr<ReNetLayer<T>>> renet_;
  Tensor<T> fc1_w_, fc1_b_, fc2_w_, fc2_b_;
};

/// Counts each distinct tensor once.
template <typename T>
ParameterReport count_parameters(const Network<T>& net);

/// Inference-mode logits (no tape).
template <typename T>
Tensor<T> classify(const Network<T>& net, const Tensor<T>& images);

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
template <typename T>
double accuracy(const Tensor<T>& logits, std::span<const int> labels);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
  std::size_t count = 0;
};

/// One deterministic, augmentation-free pass over the listed items.
template <typename T>
EvalResult evaluate(const Network<T>& net, const Dataset& data, std::span<const std::size_t> indices,
                    const NormStats& stats, std::size_t batch_size);

/// Writes every named parameter as f32.
template <typename T>
void save_network(const std::filesystem::path& path, const Network<T>& net);
/// Loads values into an already built network. Throws FormatError on a
/// missing tensor, an unknown name or a shape mismatch.
template <typename T>
void load_network(const std::filesystem::path& path, const Network<T>& net);

}  // namespace drn
