#include "drn/numerics/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstring>
#include <vector>

#include "activation_math.hpp"

namespace drn::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

using Index = Eigen::Index;

inline Index idx(std::size_t v) { return static_cast<Index>(v); }

}  // namespace

template <typename T>
void gemm(const GemmShape& s, const T* a, const T* b, T* c, bool accumulate) {
  if (s.m == 0 || s.n == 0) return;
  MutMap<T> C(c, idx(s.m), idx(s.n));
  if (s.k == 0) {
    if (!accumulate) C.setZero();
    return;
  }
  const ConstMap<T> A(a, idx(s.trans_a ? s.k : s.m), idx(s.trans_a ? s.m : s.k));
  const ConstMap<T> B(b, idx(s.trans_b ? s.n : s.k), idx(s.trans_b ? s.k : s.n));
  auto run = [&](const auto& lhs, const auto& rhs) {
    if (accumulate) {
      C.noalias() += lhs * rhs;
    } else {
      C.noalias() = lhs * rhs;
    }
  };
  if (!s.trans_a && !s.trans_b) run(A, B);
  else if (s.trans_a && !s.trans_b) run(A.transpose(), B);
  else if (!s.trans_a && s.trans_b) run(A, B.transpose());
  else run(A.transpose(), B.transpose());
}

template <typename T>
void activation_forward(Activation f, const T* x, T* y, std::size_t n) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::ptrdiff_t i = 0; i < count; ++i) y[i] = detail::apply(f, x[i]);
}

template <typename T>
void activation_backward(Activation f, const T* y, const T* dy, T* dx, std::size_t n) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n > 16384)
  for (std::ptrdiff_t i = 0; i < count; ++i) dx[i] += dy[i] * detail::derivative_from_output(f, y[i]);
}

template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols) {
  const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * cols > 16384)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const T* xr = x + r * cols;
    T* yr = y + r * cols;
    const T mx = *std::max_element(xr, xr + cols);
    T total = T(0);
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < cols; ++j) yr[j] /= total;
  }
}

template <typename T>
void gated_update_forward(Activation f, const T* pre, const T* h_prev, T* c, T* h_tilde, T* h,
                          std::size_t rows, std::size_t hidden) {
  const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * hidden > 8192)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const T* pr = pre + r * 2 * hidden;
    const std::size_t o = static_cast<std::size_t>(r) * hidden;
    for (std::size_t k = 0; k < hidden; ++k) {
      const T gate = detail::sigmoid(pr[k]);
      const T cand = detail::apply(f, pr[hidden + k]);
      c[o + k] = gate;
      h_tilde[o + k] = cand;
      h[o + k] = (T(1) - gate) * h_prev[o + k] + gate * cand;
    }
  }
}

template <typename T>
void gated_update_backward(Activation f, const T* c, const T* h_tilde, const T* h_prev, const T* d_h,
                           T* d_pre, T* d_h_prev, std::size_t rows, std::size_t hidden) {
  const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * hidden > 8192)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const std::size_t o = static_cast<std::size_t>(r) * hidden;
    T* dp = d_pre + r * 2 * hidden;
    for (std::size_t k = 0; k < hidden; ++k) {
      const T g = d_h[o + k];
      const T gate = c[o + k];
      const T cand = h_tilde[o + k];
      const T d_gate = g * (cand - h_prev[o + k]);
      dp[k] += d_gate * gate * (T(1) - gate);
      dp[hidden + k] += g * gate * detail::derivative_from_output(f, cand);
      if (d_h_prev) d_h_prev[o + k] += g * (T(1) - gate);
    }
  }
}

template <typename T>
void mixed_update_forward(const T* pre, const T* h_prev, const T* weights, T* h, std::size_t edges,
                          std::size_t rows, std::size_t hidden) {
  const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * hidden * edges > 8192)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const std::size_t o = static_cast<std::size_t>(r) * hidden;
    for (std::size_t k = 0; k < hidden; ++k) h[o + k] = T(0);
    for (std::size_t p = 0; p < edges; ++p) {
      const T* pr = pre + (p * rows + static_cast<std::size_t>(r)) * 2 * hidden;
      const T* w = weights + p * kNumActivations;
      const T edge_mass = w[0] + w[1] + w[2] + w[3];
      for (std::size_t k = 0; k < hidden; ++k) {
        const T gate = detail::sigmoid(pr[k]);
        const T a = pr[hidden + k];
        T mix = T(0);
        for (std::size_t fi = 0; fi < kNumActivations; ++fi) mix += w[fi] * detail::apply(kAllActivations[fi], a);
        h[o + k] += edge_mass * (T(1) - gate) * h_prev[o + k] + gate * mix;
      }
    }
  }
}

template <typename T>
void mixed_update_backward(const T* pre, const T* h_prev, const T* weights, const T* d_h, T* d_pre,
                           T* d_h_prev, T* d_weights, std::size_t edges, std::size_t rows,
                           std::size_t hidden) {
  const auto count = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * hidden * edges > 8192)
  for (std::ptrdiff_t r = 0; r < count; ++r) {
    const std::size_t o = static_cast<std::size_t>(r) * hidden;
    for (std::size_t p = 0; p < edges; ++p) {
      const T* pr = pre + (p * rows + static_cast<std::size_t>(r)) * 2 * hidden;
      T* dp = d_pre + (p * rows + static_cast<std::size_t>(r)) * 2 * hidden;
      const T* w = weights + p * kNumActivations;
      const T edge_mass = w[0] + w[1] + w[2] + w[3];
      for (std::size_t k = 0; k < hidden; ++k) {
        const T g = d_h[o + k];
        const T gate = detail::sigmoid(pr[k]);
        const T a = pr[hidden + k];
        T mix = T(0);
        T dmix = T(0);
        for (std::size_t fi = 0; fi < kNumActivations; ++fi) {
          const Activation act = kAllActivations[fi];
          const T y = detail::apply(act, a);
          mix += w[fi] * y;
          dmix += w[fi] * detail::derivative_from_output(act, y);
        }
        const T d_gate = g * (mix - edge_mass * h_prev[o + k]);
        dp[k] += d_gate * gate * (T(1) - gate);
        dp[hidden + k] += g * gate * dmix;
        if (d_h_prev) d_h_prev[o + k] += g * edge_mass * (T(1) - gate);
      }
    }
  }
  if (!d_weights) return;
  // One (edge, activation) pair per iteration; each sum runs serially.
  const auto pairs = static_cast<std::ptrdiff_t>(edges * kNumActivations);
#pragma omp parallel for schedule(static) if (rows * hidden * edges > 8192)
  for (std::ptrdiff_t q = 0; q < pairs; ++q) {
    const std::size_t p = static_cast<std::size_t>(q) / kNumActivations;
    const Activation act = kAllActivations[static_cast<std::size_t>(q) % kNumActivations];
    T acc = T(0);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* pr = pre + (p * rows + r) * 2 * hidden;
      for (std::size_t k = 0; k < hidden; ++k) {
        const T gate = detail::sigmoid(pr[k]);
        acc += d_h[r * hidden + k] *
               ((T(1) - gate) * h_prev[r * hidden + k] + gate * detail::apply(act, pr[hidden + k]));
      }
    }
    d_weights[q] += acc;
  }
}

template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        T* row = cols + ((c * g.kernel + ky) * g.kernel + kx) * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const auto iy = static_cast<std::ptrdiff_t>(y * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
          for (std::size_t x = 0; x < ow; ++x) {
            const auto ix = static_cast<std::ptrdiff_t>(x * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.height) &&
                                ix < static_cast<std::ptrdiff_t>(g.width);
            row[y * ow + x] = inside ? image[(c * g.height + static_cast<std::size_t>(iy)) * g.width +
                                             static_cast<std::size_t>(ix)]
                                     : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const T* row = cols + ((c * g.kernel + ky) * g.kernel + kx) * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
          const auto iy = static_cast<std::ptrdiff_t>(y * g.stride + ky) - static_cast<std::ptrdiff_t>(g.padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          for (std::size_t x = 0; x < ow; ++x) {
            const auto ix = static_cast<std::ptrdiff_t>(x * g.stride + kx) - static_cast<std::ptrdiff_t>(g.padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.width)) continue;
            image[(c * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)] +=
                row[y * ow + x];
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::size_t batch, std::size_t out_channels, const T* x,
                    const T* w, const T* bias, T* y) {
  const std::size_t in_size = g.channels * g.height * g.width;
  const std::size_t pixels = g.col_cols();
  const auto count = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel
  {
    std::vector<T> cols(g.col_rows() * pixels);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < count; ++n) {
      im2col(g, x + n * in_size, cols.data());
      T* yn = y + n * out_channels * pixels;
      gemm(GemmShape{out_channels, pixels, g.col_rows()}, w, cols.data(), yn, false);
      if (bias) {
        for (std::size_t o = 0; o < out_channels; ++o) {
          for (std::size_t p = 0; p < pixels; ++p) yn[o * pixels + p] += bias[o];
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::size_t batch, std::size_t out_channels, const T* x,
                     const T* w, const T* dy, T* dx, T* dw, T* dbias) {
  const std::size_t in_size = g.channels * g.height * g.width;
  const std::size_t pixels = g.col_cols();
  const std::size_t wsize = out_channels * g.col_rows();
  std::vector<T> partial(dw ? batch * wsize : 0, T(0));
  const auto count = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel
  {
    std::vector<T> cols(g.col_rows() * pixels);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < count; ++n) {
      const T* dyn = dy + n * out_channels * pixels;
      if (dw) {
        im2col(g, x + n * in_size, cols.data());
        gemm(GemmShape{out_channels, g.col_rows(), pixels, false, true}, dyn, cols.data(),
             partial.data() + n * wsize, false);
      }
      if (dx) {
        gemm(GemmShape{g.col_rows(), pixels, out_channels, true, false}, w, dyn, cols.data(), false);
        col2im(g, cols.data(), dx + n * in_size);
      }
    }
  }
  if (dw) {
    for (std::size_t n = 0; n < batch; ++n) {
      const T* pn = partial.data() + n * wsize;
      for (std::size_t i = 0; i < wsize; ++i) dw[i] += pn[i];
    }
  }
  if (dbias) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      T acc = T(0);
      for (std::size_t n = 0; n < batch; ++n) {
        const T* dyn = dy + (n * out_channels + o) * pixels;
        for (std::size_t p = 0; p < pixels; ++p) acc += dyn[p];
      }
      dbias[o] += acc;
    }
  }
}

#define DRN_INSTANTIATE_KERNELS(T)                                                                       \
  template void gemm<T>(const GemmShape&, const T*, const T*, T*, bool);                                 \
  template void activation_forward<T>(Activation, const T*, T*, std::size_t);                            \
  template void activation_backward<T>(Activation, const T*, const T*, T*, std::size_t);                 \
  template void softmax_rows<T>(const T*, T*, std::size_t, std::size_t);                                 \
  template void gated_update_forward<T>(Activation, const T*, const T*, T*, T*, T*, std::size_t,         \
                                        std::size_t);                                                    \
  template void gated_update_backward<T>(Activation, const T*, const T*, const T*, const T*, T*, T*,     \
                                         std::size_t, std::size_t);                                      \
  template void mixed_update_forward<T>(const T*, const T*, const T*, T*, std::size_t, std::size_t,      \
                                        std::size_t);                                                    \
  template void mixed_update_backward<T>(const T*, const T*, const T*, const T*, T*, T*, T*,             \
                                         std::size_t, std::size_t, std::size_t);                         \
  template void im2col<T>(const ConvGeometry&, const T*, T*);                                            \
  template void col2im<T>(const ConvGeometry&, const T*, T*);                                            \
  template void conv2d_forward<T>(const ConvGeometry&, std::size_t, std::size_t, const T*, const T*,     \
                                  const T*, T*);                                                         \
  template void conv2d_backward<T>(const ConvGeometry&, std::size_t, std::size_t, const T*, const T*,    \
                                   const T*, T*, T*, T*);

DRN_INSTANTIATE_KERNELS(float)
DRN_INSTANTIATE_KERNELS(double)

}  // namespace drn::kernels
