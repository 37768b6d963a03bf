#pragma once

// Raw compute kernels behind the differentiable ops.
//
// `drn::kernels` holds the OpenMP-parallel versions used at runtime; the
// serial `drn::reference` versions (reference_kernels.hpp) share these
// signatures and are kept as the test oracle and benchmark baseline.
//
// All matrices are dense row-major. Reductions always run in a fixed order
// so results do not depend on the thread count.

#include <cstddef>

#include "drn/numerics/activation.hpp"

namespace drn {

struct GemmShape {
  std::size_t m;  // rows of op(A) and C
  std::size_t n;  // cols of op(B) and C
  std::size_t k;  // inner extent
  bool trans_a = false;
  bool trans_b = false;
};

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kernel, stride, padding;
  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
  std::size_t col_rows() const { return channels * kernel * kernel; }
  std::size_t col_cols() const { return out_height() * out_width(); }
};

namespace kernels {

/// C (+)= op(A) * op(B). A is m×k (k×m when transposed), B is k×n (n×k).
template <typename T>
void gemm(const GemmShape& s, const T* a, const T* b, T* c, bool accumulate);

template <typename T>
void activation_forward(Activation f, const T* x, T* y, std::size_t n);
/// dx += dy * f'(x), with f' evaluated from the forward output y.
template <typename T>
void activation_backward(Activation f, const T* y, const T* dy, T* dx, std::size_t n);

/// Row softmax over `cols` entries, max-subtracted.
template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols);

/// Gated blend for a batch of `rows` vectors of width `hidden`:
/// c = σ(pre[:, :H]), h~ = f(pre[:, H:]), h = (1 - c) h_prev + c h~.
template <typename T>
void gated_update_forward(Activation f, const T* pre, const T* h_prev, T* c, T* h_tilde, T* h,
                          std::size_t rows, std::size_t hidden);
/// Accumulates into d_pre (rows × 2H) and d_h_prev (may be null).
template <typename T>
void gated_update_backward(Activation f, const T* c, const T* h_tilde, const T* h_prev, const T* d_h,
                           T* d_pre, T* d_h_prev, std::size_t rows, std::size_t hidden);

/// Relaxed blend over P predecessor edges and the 4 activations:
/// h = Σ_p Σ_f w[p,f] ((1 - c_p) h_prev + c_p f(a_p)), with
/// pre stacked as P blocks of rows × 2H.
template <typename T>
void mixed_update_forward(const T* pre, const T* h_prev, const T* weights, T* h, std::size_t edges,
                          std::size_t rows, std::size_t hidden);
template <typename T>
void mixed_update_backward(const T* pre, const T* h_prev, const T* weights, const T* d_h, T* d_pre,
                           T* d_h_prev, T* d_weights, std::size_t edges, std::size_t rows,
                           std::size_t hidden);

/// Single image (C×H×W) to column matrix (C·k·k × Ho·Wo).
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols);
/// Accumulating inverse of im2col.
template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image);

/// Batched conv2d forward: x (N×C×H×W), w (O×C·k·k), bias (O) → y (N×O×Ho×Wo).
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::size_t batch, std::size_t out_channels, const T* x,
                    const T* w, const T* bias, T* y);
/// Accumulates gradients; any of dx/dw/dbias may be null.
template <typename T>
void conv2d_backward(const ConvGeometry& g, std::size_t batch, std::size_t out_channels, const T* x,
                     const T* w, const T* dy, T* dx, T* dw, T* dbias);

}  // namespace kernels
}  // namespace drn
