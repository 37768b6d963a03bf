#pragma once

#include <memory>
#include <vector>

#include "drn/cells/alpha_table.hpp"
#include "drn/cells/genotype.hpp"
#include "drn/numerics/init.hpp"
#include "drn/numerics/ops.hpp"

namespace drn {

/// Recurrent state carried between time steps for a batch of sequences.
/// `output` is the cell output h_t (batch × hidden). `slots` holds any extra
/// per-cell memory: the per-vertex states of a DARTS cell, the LSTM cell state.
template <typename T>
struct CellState {
  Tensor<T> output;
  std::vector<Tensor<T>> slots;
};

/// Common interface of every cell a ReNet sweep can run.
template <typename T>
class RecurrentCell {
 public:
  virtual ~RecurrentCell() = default;

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t hidden_dim() const = 0;
  /// All-zero state for `batch` sequences.
  virtual CellState<T> initial_state(std::size_t batch) const = 0;
  /// x is batch × input_dim.
  virtual CellState<T> step(const Tensor<T>& x, const CellState<T>& previous) const = 0;
  /// Trainable tensors, names relative to the cell.
  virtual std::vector<NamedTensor<T>> parameters() const = 0;
};

/// Which step of a predecessor's state feeds an internal vertex.
/// CurrentStep: vertex i reads h_{j,t} (within-step chain).
/// PreviousStep: vertex i reads h_{j,t-1}.
enum class FeedMode { CurrentStep, PreviousStep };

/// One matrix per vertex. W_0 maps (input + hidden) → 2·hidden, W_i (i > 0)
/// maps hidden → 2·hidden; the first hidden columns drive the update gate c,
/// the rest the candidate h~.
template <typename T>
struct CellWeights {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::vector<Tensor<T>> matrices;

  std::size_t num_vertices() const { return matrices.empty() ? 0 : matrices.size() - 1; }
  /// Throws DimensionError if a matrix has the wrong extents.
  void validate() const;
  std::vector<NamedTensor<T>> parameters() const;

  static CellWeights init(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_vertices, Rng& rng);
};

/// Gate, candidate and blended state of one vertex update.
template <typename T>
struct VertexOutput {
  Tensor<T> gate;       // c, detached
  Tensor<T> candidate;  // h~, detached
  Tensor<T> state;      // h_new, differentiable
};

/// (c, h~) = (σ, f)(x_in · W), h_new = (1 - c) h_prev + c h~.
template <typename T>
VertexOutput<T> vertex_step(const Tensor<T>& x_in, const Tensor<T>& h_prev, const Tensor<T>& weight, Activation f);

/// Discrete cell evaluation. Returns the new state; `output` is the mean of
/// the vertex states 1..n, `slots[i]` is h_{i,t}.
template <typename T>
CellState<T> genotype_cell_forward(const Genotype& genotype, const CellWeights<T>& weights, const Tensor<T>& x,
                                   const CellState<T>& state, FeedMode mode = FeedMode::CurrentStep);

/// Relaxed cell evaluation over all predecessors and activations.
template <typename T>
CellState<T> mixed_cell_forward(const AlphaTable<T>& alpha, const CellWeights<T>& weights, const Tensor<T>& x,
                                const CellState<T>& state, FeedMode mode = FeedMode::CurrentStep);

/// Zero state shared by both DARTS cell flavours.
template <typename T>
CellState<T> darts_initial_state(std::size_t batch, std::size_t hidden, std::size_t num_vertices);

template <typename T>
class GenotypeCell final : public RecurrentCell<T> {
 public:
  GenotypeCell(Genotype genotype, CellWeights<T> weights, FeedMode mode = FeedMode::CurrentStep);

  std::size_t input_dim() const override { return weights_.input_dim; }
  std::size_t hidden_dim() const override { return weights_.hidden_dim; }
  CellState<T> initial_state(std::size_t batch) const override;
  CellState<T> step(const Tensor<T>& x, const CellState<T>& previous) const override;
  std::vector<NamedTensor<T>> parameters() const override { return weights_.parameters(); }

  const Genotype& genotype() const { return genotype_; }
  const CellWeights<T>& weights() const { return weights_; }

 private:
  Genotype genotype_;
  CellWeights<T> weights_;
  FeedMode mode_;
};

/// Search-time cell. The AlphaTable is shared by every mixed cell of a
/// network and is not reported by `parameters()`.
template <typename T>
class MixedCell final : public RecurrentCell<T> {
 public:
  MixedCell(std::shared_ptr<const AlphaTable<T>> alpha, CellWeights<T> weights, FeedMode mode = FeedMode::CurrentStep);

  std::size_t input_dim() const override { return weights_.input_dim; }
  std::size_t hidden_dim() const override { return weights_.hidden_dim; }
  CellState<T> initial_state(std::size_t batch) const override;
  CellState<T> step(const Tensor<T>& x, const CellState<T>& previous) const override;
  std::vector<NamedTensor<T>> parameters() const override { return weights_.parameters(); }

  const CellWeights<T>& weights() const { return weights_; }

 private:
  std::shared_ptr<const AlphaTable<T>> alpha_;
  CellWeights<T> weights_;
  FeedMode mode_;
};

}  // namespace drn
