#include "drn/numerics/reference_kernels.hpp"

#include <cmath>
#include <vector>

#include "activation_math.hpp"

namespace drn::reference {

template <typename T>
void gemm(const GemmShape& s, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = 0; i < s.m; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) {
      T acc = T(0);
      for (std::size_t p = 0; p < s.k; ++p) {
        const T av = s.trans_a ? a[p * s.m + i] : a[i * s.k + p];
        const T bv = s.trans_b ? b[j * s.k + p] : b[p * s.n + j];
        acc += av * bv;
      }
      c[i * s.n + j] = accumulate ? c[i * s.n + j] + acc : acc;
    }
  }
}

template <typename T>
void activation_forward(Activation f, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = detail::apply(f, x[i]);
}

template <typename T>
void activation_backward(Activation f, const T* y, const T* dy, T* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * detail::derivative_from_output(f, y[i]);
}

template <typename T>
void softmax_rows(const T* x, T* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    T mx = x[r * cols];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, x[r * cols + j]);
    T total = T(0);
    for (std::size_t j = 0; j < cols; ++j) total += std::exp(x[r * cols + j] - mx);
    for (std::size_t j = 0; j < cols; ++j) y[r * cols + j] = std::exp(x[r * cols + j] - mx) / total;
  }
}

template <typename T>
void gated_update_forward(Activation f, const T* pre, const T* h_prev, T* c, T* h_tilde, T* h,
                          std::size_t rows, std::size_t hidden) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < hidden; ++k) {
      const std::size_t o = r * hidden + k;
      c[o] = detail::sigmoid(pre[r * 2 * hidden + k]);
      h_tilde[o] = detail::apply(f, pre[r * 2 * hidden + hidden + k]);
      h[o] = (T(1) - c[o]) * h_prev[o] + c[o] * h_tilde[o];
    }
  }
}

template <typename T>
void gated_update_backward(Activation f, const T* c, const T* h_tilde, const T* h_prev, const T* d_h,
                           T* d_pre, T* d_h_prev, std::size_t rows, std::size_t hidden) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < hidden; ++k) {
      const std::size_t o = r * hidden + k;
      d_pre[r * 2 * hidden + k] += d_h[o] * (h_tilde[o] - h_prev[o]) * c[o] * (T(1) - c[o]);
      d_pre[r * 2 * hidden + hidden + k] += d_h[o] * c[o] * detail::derivative_from_output(f, h_tilde[o]);
      if (d_h_prev) d_h_prev[o] += d_h[o] * (T(1) - c[o]);
    }
  }
}

template <typename T>
void mixed_update_forward(const T* pre, const T* h_prev, const T* weights, T* h, std::size_t edges,
                          std::size_t rows, std::size_t hidden) {
  for (std::size_t i = 0; i < rows * hidden; ++i) h[i] = T(0);
  for (std::size_t p = 0; p < edges; ++p) {
    for (std::size_t fi = 0; fi < kNumActivations; ++fi) {
      const T w = weights[p * kNumActivations + fi];
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < hidden; ++k) {
          const T* pr = pre + (p * rows + r) * 2 * hidden;
          const T gate = detail::sigmoid(pr[k]);
          const T cand = detail::apply(kAllActivations[fi], pr[hidden + k]);
          h[r * hidden + k] += w * ((T(1) - gate) * h_prev[r * hidden + k] + gate * cand);
        }
      }
    }
  }
}

template <typename T>
void mixed_update_backward(const T* pre, const T* h_prev, const T* weights, const T* d_h, T* d_pre,
                           T* d_h_prev, T* d_weights, std::size_t edges, std::size_t rows,
                           std::size_t hidden) {
  for (std::size_t p = 0; p < edges; ++p) {
    for (std::size_t fi = 0; fi < kNumActivations; ++fi) {
      const Activation act = kAllActivations[fi];
      const T w = weights[p * kNumActivations + fi];
      T acc = T(0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < hidden; ++k) {
          const T* pr = pre + (p * rows + r) * 2 * hidden;
          T* dp = d_pre + (p * rows + r) * 2 * hidden;
          const T g = d_h[r * hidden + k];
          const T hp = h_prev[r * hidden + k];
          const T gate = detail::sigmoid(pr[k]);
          const T cand = detail::apply(act, pr[hidden + k]);
          acc += g * ((T(1) - gate) * hp + gate * cand);
          dp[k] += w * g * (cand - hp) * gate * (T(1) - gate);
          dp[hidden + k] += w * g * gate * detail::derivative_from_output(act, cand);
          if (d_h_prev) d_h_prev[r * hidden + k] += w * g * (T(1) - gate);
        }
      }
      if (d_weights) d_weights[p * kNumActivations + fi] += acc;
    }
  }
}

template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t row = 0; row < g.col_rows(); ++row) {
    const std::size_t c = row / (g.kernel * g.kernel);
    const std::size_t ky = (row / g.kernel) % g.kernel;
    const std::size_t kx = row % g.kernel;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const long iy = static_cast<long>(y * g.stride + ky) - static_cast<long>(g.padding);
        const long ix = static_cast<long>(x * g.stride + kx) - static_cast<long>(g.padding);
        T v = T(0);
        if (iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) && ix < static_cast<long>(g.width)) {
          v = image[(c * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)];
        }
        cols[row * oh * ow + y * ow + x] = v;
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t row = 0; row < g.col_rows(); ++row) {
    const std::size_t c = row / (g.kernel * g.kernel);
    const std::size_t ky = (row / g.kernel) % g.kernel;
    const std::size_t kx = row % g.kernel;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        const long iy = static_cast<long>(y * g.stride + ky) - static_cast<long>(g.padding);
        const long ix = static_cast<long>(x * g.stride + kx) - static_cast<long>(g.padding);
        if (iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) && ix < static_cast<long>(g.width)) {
          image[(c * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix)] +=
              cols[row * oh * ow + y * ow + x];
        }
      }
    }
  }
}

// Direct convolution, no im2col.
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::size_t batch, std::size_t out_channels, const T* x,
                    const T* w, const T* bias, T* y) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T acc = bias ? bias[o] : T(0);
          for (std::size_t c = 0; c < g.channels; ++c) {
            for (std::size_t ky = 0; ky < g.kernel; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
                const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.height) || ix >= static_cast<long>(g.width)) continue;
                acc += w[((o * g.channels + c) * g.kernel + ky) * g.kernel + kx] *
                       x[((n * g.channels + c) * g.height + static_cast<std::size_t>(iy)) * g.width +
                         static_cast<std::size_t>(ix)];
              }
            }
          }
          y[((n * out_channels + o) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::size_t batch, std::size_t out_channels, const T* x,
                     const T* w, const T* dy, T* dx, T* dw, T* dbias) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T g_out = dy[((n * out_channels + o) * oh + oy) * ow + ox];
          if (dbias) dbias[o] += g_out;
          for (std::size_t c = 0; c < g.channels; ++c) {
            for (std::size_t ky = 0; ky < g.kernel; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel; ++kx) {
                const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
                const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.height) || ix >= static_cast<long>(g.width)) continue;
                const std::size_t wi = ((o * g.channels + c) * g.kernel + ky) * g.kernel + kx;
                const std::size_t xi = ((n * g.channels + c) * g.height + static_cast<std::size_t>(iy)) * g.width +
                                       static_cast<std::size_t>(ix);
                if (dw) dw[wi] += g_out * x[xi];
                if (dx) dx[xi] += g_out * w[wi];
              }
            }
          }
        }
      }
    }
  }
}

#define DRN_INSTANTIATE_REFERENCE(T)                                                                     \
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

DRN_INSTANTIATE_REFERENCE(float)
DRN_INSTANTIATE_REFERENCE(double)

}  // namespace drn::reference
