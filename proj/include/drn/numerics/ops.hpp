#pragma once

// Differentiable primitives. Every op records itself on the calling thread's
// active Tape when at least one input requires a gradient; otherwise it is a
// plain forward computation. Outputs are scanned for NaN/Inf.

#include <span>
#include <vector>

#include "drn/numerics/activation.hpp"
#include "drn/numerics/tape.hpp"
#include "drn/numerics/tensor.hpp"

namespace drn {

// ---- dense algebra --------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
/// Elementwise (Hadamard) product.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
/// x (m×n) plus bias (n) broadcast over rows.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);
/// Elementwise mean of equally shaped tensors.
template <typename T>
Tensor<T> average(const std::vector<Tensor<T>>& xs);

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation f);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) { return activation(x, Activation::Sigmoid); }
template <typename T>
Tensor<T> tanh(const Tensor<T>& x) { return activation(x, Activation::Tanh); }
template <typename T>
Tensor<T> relu(const Tensor<T>& x) { return activation(x, Activation::ReLU); }

/// Softmax along `axis` of a rank-1 or rank-2 tensor.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

/// Mean over the batch of -log softmax(logits)[label]. Throws
/// std::out_of_range for labels outside [0, K).
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// ---- layout ---------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end);
/// Stacks rank-2 tensors with equal column counts on top of each other.
template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& xs);

// ---- recurrent cell blocks ------------------------------------------------

/// Saved gate / candidate values of a gated update (detached copies).
template <typename T>
struct GatedTrace {
  Tensor<T> gate;
  Tensor<T> candidate;
};

/// h = (1 - σ(pre[:, :H])) ⊙ h_prev + σ(pre[:, :H]) ⊙ f(pre[:, H:]).
template <typename T>
Tensor<T> gated_update(const Tensor<T>& pre, const Tensor<T>& h_prev, Activation f,
                       GatedTrace<T>* trace = nullptr);

/// Weighted blend of gated updates over P predecessor edges and all four
/// activations. `pre` stacks the P edge pre-activations (P·B × 2H); `weights`
/// is P × 4.
template <typename T>
Tensor<T> mixed_update(const Tensor<T>& pre, const Tensor<T>& h_prev, const Tensor<T>& weights);

// ---- convolution and grids ------------------------------------------------

/// Cross-correlation: x (N×C×H×W), w (O×C×k×k), bias (O).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding);

/// N×C×H×W → N×H×W×C.
template <typename T>
Tensor<T> nchw_to_nhwc(const Tensor<T>& x);

/// Non-overlapping patches of a channels-last grid (N×H×W×D). Pads with zeros
/// on the right/bottom when the window does not divide the grid. Each patch is
/// flattened channel-major, then intra-patch row, then column, giving
/// N×⌈H/hp⌉×⌈W/wp⌉×(D·hp·wp).
template <typename T>
Tensor<T> extract_patches(const Tensor<T>& grid, std::size_t window_h, std::size_t window_w);

/// Scales grid position (i, j) of every batch element by gate[i, j].
template <typename T>
Tensor<T> grid_scale(const Tensor<T>& grid, const Tensor<T>& gate);

/// Swaps the two spatial axes of N×A×B×D.
template <typename T>
Tensor<T> grid_transpose(const Tensor<T>& grid);

/// Column j of N×A×B×D as an (N·A)×D matrix, rows ordered (n, a).
template <typename T>
Tensor<T> grid_column(const Tensor<T>& grid, std::size_t column);

/// Inverse of per-column slicing for a bidirectional sweep: fwd[j] and bwd[j]
/// are (N·A)×Df and (N·A)×Db matrices for column j; returns N×A×L×(Df+Db).
template <typename T>
Tensor<T> assemble_bidirectional(const std::vector<Tensor<T>>& fwd, const std::vector<Tensor<T>>& bwd,
                                 std::size_t batch, std::size_t rows);

}  // namespace drn
