#include "drn/model/network.hpp"

#include <map>
#include <sstream>
#include <unordered_set>

#include "drn/numerics/checkpoint.hpp"

namespace drn {

void NetworkConfig::validate() const {
  if (stem.size() != 3) throw std::invalid_argument("stem must have exactly 3 conv layers, got " + std::to_string(stem.size()));
  if (renet.size() != 3) throw std::invalid_argument("renet must have exactly 3 layers, got " + std::to_string(renet.size()));
  if (num_classes < 2) throw std::invalid_argument("num_classes must be at least 2");
  if (head_hidden == 0) throw std::invalid_argument("head_hidden must be positive");
  if (in_channels == 0 || image_size == 0) throw std::invalid_argument("input geometry must be non-empty");
  std::size_t side = image_size;
  for (std::size_t k = 0; k < stem.size(); ++k) {
    const auto& c = stem[k];
    if (c.out_channels == 0 || c.kernel == 0 || c.stride == 0) {
      throw std::invalid_argument("stem conv " + std::to_string(k + 1) + " needs positive channels, kernel and stride");
    }
    if (side + 2 * c.padding < c.kernel) {
      throw std::invalid_argument("stem conv " + std::to_string(k + 1) + " kernel does not fit its input");
    }
    side = (side + 2 * c.padding - c.kernel) / c.stride + 1;
  }
  for (const auto& r : renet) r.validate();
  if (search_vertices == 0) throw std::invalid_argument("search_vertices must be positive");
}

void NetworkConfig::set_variant(ReNetVariant v) {
  for (auto& r : renet) r.variant = v;
}
void NetworkConfig::set_cell(CellKind k) {
  for (auto& r : renet) r.cell = k;
}
void NetworkConfig::set_hidden(std::size_t hidden) {
  for (auto& r : renet) r.hidden_dim = hidden;
}

std::string ParameterReport::format() const {
  std::ostringstream os;
  os << "stem " << stem << '\n';
  for (std::size_t k = 0; k < renet_rnn.size(); ++k) os << "renet" << k + 1 << " " << renet_rnn[k] << '\n';
  os << "rnn " << rnn << '\n' << "sigmoid_weights " << sigmoid_weights << '\n' << "head " << head << '\n';
  os << "alpha " << alpha << '\n' << "total " << total << '\n';
  return os.str();
}

template <typename T>
Network<T>::Network(NetworkConfig config, CellSource<T> source, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  bool mixed = false;
  for (const auto& r : config_.renet) mixed = mixed || r.cell == CellKind::Mixed;
  if (mixed) {
    if (!source.alpha) {
      source.alpha = std::make_shared<AlphaTable<T>>(
          AlphaTable<T>::random(config_.search_vertices, config_.alpha_init_range, rng));
    }
    alpha_ = source.alpha;
  }
  genotype_ = source.genotype;

  std::size_t channels = config_.in_channels, side = config_.image_size;
  for (const auto& c : config_.stem) {
    const std::size_t fan_in = channels * c.kernel * c.kernel;
    conv_w_.push_back(fan_in_parameter<T>(Shape{c.out_channels, channels, c.kernel, c.kernel}, fan_in, rng));
    conv_b_.push_back(zero_parameter<T>(Shape{c.out_channels}));
    channels = c.out_channels;
    side = (side + 2 * c.padding - c.kernel) / c.stride + 1;
  }
  std::size_t height = side, width = side;
  for (const auto& r : config_.renet) {
    renet_.push_back(std::make_unique<ReNetLayer<T>>(r, source, height, width, channels, rng));
    height = renet_.back()->grid_height();
    width = renet_.back()->grid_width();
    channels = renet_.back()->output_channels();
  }
  const std::size_t flat = height * width * channels;
  fc1_w_ = fan_in_parameter<T>(Shape{flat, config_.head_hidden}, flat, rng);
  fc1_b_ = zero_parameter<T>(Shape{config_.head_hidden});
  fc2_w_ = fan_in_parameter<T>(Shape{config_.head_hidden, config_.num_classes}, config_.head_hidden, rng);
  fc2_b_ = zero_parameter<T>(Shape{config_.num_classes});
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& images, ForwardTrace* trace, const SweepObserver<T>& observer) const {
  if (images.rank() != 4 || images.dim(1) != config_.in_channels || images.dim(2) != config_.image_size ||
      images.dim(3) != config_.image_size) {
    throw DimensionError("network expects N x " + std::to_string(config_.in_channels) + " x " +
                         std::to_string(config_.image_size) + " x " + std::to_string(config_.image_size) + ", got " +
                         to_string(images.shape()));
  }
  Tensor<T> x = images;
  for (std::size_t k = 0; k < conv_w_.size(); ++k) {
    x = relu(conv2d(x, conv_w_[k], conv_b_[k], config_.stem[k].stride, config_.stem[k].padding));
  }
  x = nchw_to_nhwc(x);
  if (trace) {
    trace->stem_output = x.shape();
    trace->renet_output.clear();
  }
  for (const auto& layer : renet_) {
    x = layer->forward(x, observer);
    if (trace) trace->renet_output.push_back(x.shape());
  }
  const std::size_t n = x.dim(0);
  x = reshape(x, Shape{n, x.numel() / n});
  x = relu(add_bias(matmul(x, fc1_w_), fc1_b_));
  return add_bias(matmul(x, fc2_w_), fc2_b_);
}

template <typename T>
std::vector<NamedTensor<T>> Network<T>::named_parameters() const {
  std::vector<NamedTensor<T>> out;
  for (std::size_t k = 0; k < conv_w_.size(); ++k) {
    out.push_back({"stem" + std::to_string(k + 1) + ".w", conv_w_[k]});
    out.push_back({"stem" + std::to_string(k + 1) + ".b", conv_b_[k]});
  }
  for (std::size_t k = 0; k < renet_.size(); ++k) {
    for (auto& p : renet_[k]->parameters()) out.push_back({"renet" + std::to_string(k + 1) + "." + p.name, p.tensor});
  }
  out.push_back({"head.fc1.w", fc1_w_});
  out.push_back({"head.fc1.b", fc1_b_});
  out.push_back({"head.fc2.w", fc2_w_});
  out.push_back({"head.fc2.b", fc2_b_});
  if (alpha_) {
    for (auto& p : alpha_->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::weight_parameters() const {
  std::vector<Tensor<T>> out;
  const std::size_t skip = alpha_ ? alpha_->num_vertices() : 0;
  auto all = named_parameters();
  for (std::size_t i = 0; i + skip < all.size(); ++i) out.push_back(all[i].tensor);
  return out;
}

template <typename T>
std::vector<Tensor<T>> Network<T>::alpha_parameters() const {
  return alpha_ ? alpha_->tensors() : std::vector<Tensor<T>>{};
}

template <typename T>
ParameterReport count_parameters(const Network<T>& net) {
  ParameterReport r;
  std::unordered_set<const void*> seen;
  auto fresh = [&seen](const Tensor<T>& t) { return seen.insert(t.node_ptr().get()).second; };
  for (const auto& p : net.named_parameters()) {
    if (!fresh(p.tensor)) continue;
    const std::size_t n = p.tensor.numel();
    const std::string& name = p.name;
    if (name.rfind("stem", 0) == 0) {
      r.stem += n;
    } else if (name.rfind("head.", 0) == 0) {
      r.head += n;
    } else if (name.rfind("alpha.", 0) == 0) {
      r.alpha += n;
    } else if (name.rfind("renet", 0) == 0) {
      const std::size_t k = static_cast<std::size_t>(name[5] - '1');
      if (r.renet_rnn.size() <= k) r.renet_rnn.resize(k + 1, 0);
      if (name.size() >= 3 && name.compare(name.size() - 3, 3, ".sw") == 0) {
        r.sigmoid_weights += n;
      } else {
        r.renet_rnn[k] += n;
      }
    }
    r.total += n;
  }
  for (std::size_t v : r.renet_rnn) r.rnn += v;
  return r;
}

template <typename T>
Tensor<T> classify(const Network<T>& net, const Tensor<T>& images) {
  NoGradScope<T> no_grad;
  return net.forward(images);
}

template <typename T>
double accuracy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) throw DimensionError("accuracy: logits/labels mismatch");
  if (labels.empty()) throw std::invalid_argument("accuracy of an empty batch");
  const std::size_t k = logits.dim(1);
  std::size_t correct = 0;
  auto d = logits.data();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (d[i * k + c] > d[i * k + best]) best = c;
    }
    correct += static_cast<int>(best) == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

template <typename T>
EvalResult evaluate(const Network<T>& net, const Dataset& data, std::span<const std::size_t> indices,
                    const NormStats& stats, std::size_t batch_size) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty split");
  NoGradScope<T> no_grad;
  EvalResult r;
  double correct = 0.0, loss = 0.0;
  for (const auto& batch_idx : sequential_batches(indices, batch_size)) {
    Batch<T> b = make_batch<T>(data, batch_idx, stats);
    Tensor<T> logits = net.forward(b.images);
    const double n = static_cast<double>(batch_idx.size());
    correct += accuracy(logits, b.labels) * n;
    loss += static_cast<double>(cross_entropy(logits, std::span<const int>(b.labels)).item()) * n;
    r.count += batch_idx.size();
  }
  r.accuracy = correct / static_cast<double>(r.count);
  r.loss = loss / static_cast<double>(r.count);
  return r;
}

template <typename T>
void save_network(const std::filesystem::path& path, const Network<T>& net) {
  std::vector<NamedTensor<float>> out;
  for (const auto& p : net.named_parameters()) {
    Tensor<float> t(p.tensor.shape());
    auto dst = t.mutable_data();
    auto src = p.tensor.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]);
    out.push_back({p.name, t});
  }
  save_checkpoint(path, out);
}

template <typename T>
void load_network(const std::filesystem::path& path, const Network<T>& net) {
  std::map<std::string, Tensor<float>> stored;
  for (auto& t : load_checkpoint(path)) stored.emplace(t.name, t.tensor);
  auto params = net.named_parameters();
  for (const auto& p : params) {
    auto it = stored.find(p.name);
    if (it == stored.end()) throw FormatError(path.string() + ": missing tensor " + p.name);
    if (it->second.shape() != p.tensor.shape()) {
      throw FormatError(path.string() + ": tensor " + p.name + " has shape " + to_string(it->second.shape()) +
                        ", network expects " + to_string(p.tensor.shape()));
    }
  }
  if (stored.size() != params.size()) {
    for (const auto& [name, t] : stored) {
      bool known = false;
      for (const auto& p : params) known = known || p.name == name;
      if (!known) throw FormatError(path.string() + ": unexpected tensor " + name);
    }
  }
  for (const auto& p : params) {
    auto src = stored.at(p.name).data();
    Tensor<T> dst = p.tensor;
    auto d = dst.mutable_data();
    for (std::size_t i = 0; i < src.size(); ++i) d[i] = static_cast<T>(src[i]);
  }
}

#define DRN_INSTANTIATE_NETWORK(T)                                                                              \
  template class Network<T>;                                                                                    \
  template ParameterReport count_parameters<T>(const Network<T>&);                                              \
  template Tensor<T> classify<T>(const Network<T>&, const Tensor<T>&);                                          \
  template double accuracy<T>(const Tensor<T>&, std::span<const int>);                                          \
  template EvalResult evaluate<T>(const Network<T>&, const Dataset&, std::span<const std::size_t>,              \
                                  const NormStats&, std::size_t);                                               \
  template void save_network<T>(const std::filesystem::path&, const Network<T>&);                               \
  template void load_network<T>(const std::filesystem::path&, const Network<T>&);

DRN_INSTANTIATE_NETWORK(float)
DRN_INSTANTIATE_NETWORK(double)

}  // namespace drn
