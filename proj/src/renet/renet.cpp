#include "drn/renet/renet.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace drn {

std::string to_string(ReNetVariant v) {
  switch (v) {
    case ReNetVariant::Vanilla: return "vanilla";
    case ReNetVariant::SigmoidWeighting: return "sigmoid_weighting";
    case ReNetVariant::DirectionalWeightSharing: return "dws";
  }
  return "?";
}

std::string to_string(CellKind k) {
  switch (k) {
    case CellKind::Genotype: return "genotype";
    case CellKind::Mixed: return "mixed";
    case CellKind::Gru: return "gru";
    case CellKind::Lstm: return "lstm";
  }
  return "?";
}

namespace {
std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}
}  // namespace

ReNetVariant parse_variant(std::string_view text) {
  const std::string s = lower(text);
  if (s == "vanilla") return ReNetVariant::Vanilla;
  if (s == "sigmoid_weighting" || s == "sw") return ReNetVariant::SigmoidWeighting;
  if (s == "dws" || s == "directional_weight_sharing") return ReNetVariant::DirectionalWeightSharing;
  throw std::invalid_argument("unknown variant '" + std::string(text) + "'");
}

CellKind parse_cell_kind(std::string_view text) {
  const std::string s = lower(text);
  if (s == "genotype") return CellKind::Genotype;
  if (s == "mixed") return CellKind::Mixed;
  if (s == "gru") return CellKind::Gru;
  if (s == "lstm") return CellKind::Lstm;
  throw std::invalid_argument("unknown cell kind '" + std::string(text) + "'");
}

void ReNetLayerConfig::validate() const {
  if (window_h == 0 || window_w == 0) throw std::invalid_argument("renet window must be at least 1x1");
  if (hidden_dim == 0) throw std::invalid_argument("renet hidden_dim must be positive");
}

namespace {

template <typename T>
CellWeights<T> darts_weights(const CellSource<T>& source, std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t vertices, Rng& rng) {
  auto w = CellWeights<T>::init(input_dim, hidden_dim, vertices, rng);
  if (source.init_gain != 1.0) {
    for (auto& m : w.matrices)
      for (auto& v : m.mutable_data()) v = static_cast<T>(v * source.init_gain);
  }
  return w;
}

}  // namespace

template <typename T>
std::shared_ptr<RecurrentCell<T>> make_cell(CellKind kind, const CellSource<T>& source, std::size_t input_dim,
                                            std::size_t hidden_dim, Rng& rng) {
  switch (kind) {
    case CellKind::Genotype: {
      if (!source.genotype) throw std::invalid_argument("genotype cell requested without a genotype");
      const Genotype& g = *source.genotype;
      return std::make_shared<GenotypeCell<T>>(g, darts_weights(source, input_dim, hidden_dim, g.num_vertices(), rng),
                                               source.feed);
    }
    case CellKind::Mixed: {
      if (!source.alpha) throw std::invalid_argument("mixed cell requested without an alpha table");
      auto w = darts_weights(source, input_dim, hidden_dim, source.alpha->num_vertices(), rng);
      return std::make_shared<MixedCell<T>>(source.alpha, std::move(w), source.feed);
    }
    case CellKind::Gru:
      return std::make_shared<GruCell<T>>(GruWeights<T>::init(input_dim, hidden_dim, rng));
    case CellKind::Lstm:
      return std::make_shared<LstmCell<T>>(LstmWeights<T>::init(input_dim, hidden_dim, rng));
  }
  throw std::invalid_argument("unknown cell kind");
}

template <typename T>
Tensor<T> horizontal_sweep(const Tensor<T>& grid, const RecurrentCell<T>& forward, const RecurrentCell<T>& backward,
                           const SweepObserver<T>& observer) {
  if (grid.rank() != 4) throw DimensionError("sweep input must be N x A x B x D, got " + to_string(grid.shape()));
  const std::size_t n = grid.dim(0), a = grid.dim(1), b = grid.dim(2), d = grid.dim(3);
  if (d != forward.input_dim() || d != backward.input_dim()) {
    throw DimensionError("sweep input has " + std::to_string(d) + " channels, cells expect " +
                         std::to_string(forward.input_dim()) + "/" + std::to_string(backward.input_dim()));
  }
  // All rows of all images advance together as one batch of n*a sequences.
  std::vector<Tensor<T>> columns;
  columns.reserve(b);
  for (std::size_t j = 0; j < b; ++j) columns.push_back(grid_column(grid, j));

  std::vector<Tensor<T>> fwd(b), bwd(b);
  CellState<T> state = forward.initial_state(n * a);
  for (std::size_t j = 0; j < b; ++j) {
    if (observer) observer(SweepDirection::Forward, j, state);
    state = forward.step(columns[j], state);
    fwd[j] = state.output;
  }
  state = backward.initial_state(n * a);
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t j = b - 1 - k;
    if (observer) observer(SweepDirection::Backward, k, state);
    state = backward.step(columns[j], state);
    bwd[j] = state.output;
  }
  return assemble_bidirectional(fwd, bwd, n, a);
}

template <typename T>
Tensor<T> vertical_sweep(const Tensor<T>& grid, const RecurrentCell<T>& forward, const RecurrentCell<T>& backward,
                         const SweepObserver<T>& observer) {
  return grid_transpose(horizontal_sweep(grid_transpose(grid), forward, backward, observer));
}

template <typename T>
Tensor<T> apply_sigmoid_weighting(const Tensor<T>& patches, const Tensor<T>& sw) {
  return grid_scale(patches, sigmoid(sw));
}

template <typename T>
Tensor<T> reconstruct_patches(const Tensor<T>& patches, std::size_t wh, std::size_t ww, std::size_t height,
                              std::size_t width) {
  if (patches.rank() != 4 || wh == 0 || ww == 0 || patches.dim(3) % (wh * ww) != 0) {
    throw DimensionError("reconstruct_patches: bad patch grid " + to_string(patches.shape()));
  }
  const std::size_t n = patches.dim(0), gh = patches.dim(1), gw = patches.dim(2), pd = patches.dim(3);
  const std::size_t d = pd / (wh * ww);
  if (height > gh * wh || width > gw * ww) throw DimensionError("reconstruct_patches: target larger than the grid");
  Tensor<T> out(Shape{n, height, width, d});
  auto y = out.mutable_data();
  auto p = patches.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t yy = 0; yy < height; ++yy)
      for (std::size_t xx = 0; xx < width; ++xx)
        for (std::size_t c = 0; c < d; ++c) {
          const std::size_t i = yy / wh, r = yy % wh, j = xx / ww, s = xx % ww;
          y[((b * height + yy) * width + xx) * d + c] = p[((b * gh + i) * gw + j) * pd + (c * wh + r) * ww + s];
        }
  return out;
}

template <typename T>
ReNetLayer<T>::ReNetLayer(ReNetLayerConfig config, const CellSource<T>& source, std::size_t input_height,
                          std::size_t input_width, std::size_t input_channels, Rng& rng)
    : config_(config), in_h_(input_height), in_w_(input_width), in_c_(input_channels) {
  config_.validate();
  if (in_h_ == 0 || in_w_ == 0 || in_c_ == 0) throw std::invalid_argument("renet input grid must be non-empty");
  grid_h_ = (in_h_ + config_.window_h - 1) / config_.window_h;
  grid_w_ = (in_w_ + config_.window_w - 1) / config_.window_w;
  const std::size_t patch_dim = in_c_ * config_.window_h * config_.window_w;
  const std::size_t hidden = config_.hidden_dim;
  h_f_ = make_cell<T>(config_.cell, source, patch_dim, hidden, rng);
  h_b_ = shares_directions() ? h_f_ : make_cell<T>(config_.cell, source, patch_dim, hidden, rng);
  v_f_ = make_cell<T>(config_.cell, source, 2 * hidden, hidden, rng);
  v_b_ = shares_directions() ? v_f_ : make_cell<T>(config_.cell, source, 2 * hidden, hidden, rng);
  if (config_.variant == ReNetVariant::SigmoidWeighting) sw_ = zero_parameter<T>(Shape{grid_h_, grid_w_});
}

template <typename T>
Tensor<T> ReNetLayer<T>::forward(const Tensor<T>& x, const SweepObserver<T>& observer) const {
  if (x.rank() != 4 || x.dim(1) != in_h_ || x.dim(2) != in_w_ || x.dim(3) != in_c_) {
    throw DimensionError("renet layer expects N x " + std::to_string(in_h_) + " x " + std::to_string(in_w_) + " x " +
                         std::to_string(in_c_) + ", got " + to_string(x.shape()));
  }
  Tensor<T> patches = extract_patches(x, config_.window_h, config_.window_w);
  if (sw_.defined()) patches = apply_sigmoid_weighting(patches, sw_);
  Tensor<T> h = horizontal_sweep(patches, *h_f_, *h_b_, observer);
  return vertical_sweep(h, *v_f_, *v_b_, observer);
}

template <typename T>
RecurrentCell<T>& ReNetLayer<T>::cell(bool vertical, bool backward) const {
  if (vertical) return backward ? *v_b_ : *v_f_;
  return backward ? *h_b_ : *h_f_;
}

template <typename T>
std::vector<NamedTensor<T>> ReNetLayer<T>::parameters() const {
  std::vector<NamedTensor<T>> out;
  auto add_cell = [&out](const std::string& prefix, const RecurrentCell<T>& c) {
    for (auto& p : c.parameters()) out.push_back({prefix + p.name, p.tensor});
  };
  add_cell("h.f.", *h_f_);
  if (!shares_directions()) add_cell("h.b.", *h_b_);
  add_cell("v.f.", *v_f_);
  if (!shares_directions()) add_cell("v.b.", *v_b_);
  if (sw_.defined()) out.push_back({"sw", sw_});
  return out;
}

#define DRN_INSTANTIATE_RENET(T)                                                                             \
  template std::shared_ptr<RecurrentCell<T>> make_cell<T>(CellKind, const CellSource<T>&, std::size_t,       \
                                                          std::size_t, Rng&);                                \
  template Tensor<T> horizontal_sweep<T>(const Tensor<T>&, const RecurrentCell<T>&, const RecurrentCell<T>&, \
                                         const SweepObserver<T>&);                                           \
  template Tensor<T> vertical_sweep<T>(const Tensor<T>&, const RecurrentCell<T>&, const RecurrentCell<T>&,   \
                                       const SweepObserver<T>&);                                             \
  template Tensor<T> apply_sigmoid_weighting<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> reconstruct_patches<T>(const Tensor<T>&, std::size_t, std::size_t, std::size_t,         \
                                            std::size_t);                                                    \
  template class ReNetLayer<T>;

DRN_INSTANTIATE_RENET(float)
DRN_INSTANTIATE_RENET(double)

}  // namespace drn
