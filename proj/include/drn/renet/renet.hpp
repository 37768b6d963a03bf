#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drn/cells/baseline_cells.hpp"
#include "drn/cells/cell.hpp"

namespace drn {

enum class ReNetVariant { Vanilla, SigmoidWeighting, DirectionalWeightSharing };
enum class CellKind { Genotype, Mixed, Gru, Lstm };

std::string to_string(ReNetVariant v);
std::string to_string(CellKind k);
/// Accepts vanilla | sigmoid_weighting | dws | directional_weight_sharing.
ReNetVariant parse_variant(std::string_view text);
/// Accepts genotype | mixed | gru | lstm.
CellKind parse_cell_kind(std::string_view text);

struct ReNetLayerConfig {
  std::size_t window_h = 2;
  std::size_t window_w = 2;
  std::size_t hidden_dim = 256;
  ReNetVariant variant = ReNetVariant::Vanilla;
  CellKind cell = CellKind::Genotype;

  /// Throws std::invalid_argument on a zero window or hidden size.
  void validate() const;
};

/// What a cell of kind Genotype or Mixed needs beyond its dimensions.
template <typename T>
struct CellSource {
  std::optional<Genotype> genotype;
  std::shared_ptr<AlphaTable<T>> alpha;
  FeedMode feed = FeedMode::CurrentStep;
  /// Multiplies the fan-in uniform init of DARTS cell matrices.
  double init_gain = 1.0;
};

template <typename T>
std::shared_ptr<RecurrentCell<T>> make_cell(CellKind kind, const CellSource<T>& source, std::size_t input_dim,
                                            std::size_t hidden_dim, Rng& rng);

enum class SweepDirection { Forward, Backward };

/// Called before every cell step of a sweep with the state the step consumes.
template <typename T>
using SweepObserver = std::function<void(SweepDirection, std::size_t step, const CellState<T>& previous)>;

/// Bidirectional sweep along the second spatial axis of an N×A×B×D grid.
/// Every row is an independent sequence starting from the cell's zero state.
/// Returns N×A×B×(Hf+Hb), forward half first.
template <typename T>
Tensor<T> horizontal_sweep(const Tensor<T>& grid, const RecurrentCell<T>& forward, const RecurrentCell<T>& backward,
                           const SweepObserver<T>& observer = {});

/// Same along the first spatial axis.
template <typename T>
Tensor<T> vertical_sweep(const Tensor<T>& grid, const RecurrentCell<T>& forward, const RecurrentCell<T>& backward,
                         const SweepObserver<T>& observer = {});

/// Scales patch (i, j) by σ(sw[i, j]).
template <typename T>
Tensor<T> apply_sigmoid_weighting(const Tensor<T>& patches, const Tensor<T>& sw);

/// Inverse of extract_patches for data only: N×H'×W'×(D·hp·wp) back to the
/// N×height×width×D grid (padding dropped).
template <typename T>
Tensor<T> reconstruct_patches(const Tensor<T>& patches, std::size_t window_h, std::size_t window_w,
                              std::size_t height, std::size_t width);

/// Patching, optional sigmoid weighting, horizontal then vertical sweep.
/// Under directional weight sharing the backward cell of each sweep is the
/// forward cell object itself.
template <typename T>
class ReNetLayer {
 public:
  /// input_* describe the channels-last grid this layer will receive.
  ReNetLayer(ReNetLayerConfig config, const CellSource<T>& source, std::size_t input_height, std::size_t input_width,
             std::size_t input_channels, Rng& rng);

  /// N×input_height×input_width×input_channels → N×H'×W'×(2·hidden).
  Tensor<T> forward(const Tensor<T>& x, const SweepObserver<T>& observer = {}) const;

  const ReNetLayerConfig& config() const { return config_; }
  std::size_t grid_height() const { return grid_h_; }
  std::size_t grid_width() const { return grid_w_; }
  std::size_t output_channels() const { return 2 * config_.hidden_dim; }

  RecurrentCell<T>& cell(bool vertical, bool backward) const;
  bool shares_directions() const { return config_.variant == ReNetVariant::DirectionalWeightSharing; }
  /// Present only for the sigmoid weighting variant (grid_height × grid_width).
  const Tensor<T>& sigmoid_weights() const { return sw_; }

  /// Unique trainable tensors named `<h|v>.<f|b>.<tensor>` and `sw`. Shared
  /// direction weights appear once, under `f`.
  std::vector<NamedTensor<T>> parameters() const;

 private:
  ReNetLayerConfig config_;
  std::size_t in_h_, in_w_, in_c_;
  std::size_t grid_h_, grid_w_;
  std::shared_ptr<RecurrentCell<T>> h_f_, h_b_, v_f_, v_b_;
  Tensor<T> sw_;
};

}  // namespace drn
