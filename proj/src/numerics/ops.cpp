#include "drn/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "drn/numerics/kernels.hpp"

namespace drn {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

template <typename T>
bool recording(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>* t) { return t->requires_grad(); });
}

template <typename T>
bool recording(const std::vector<Tensor<T>>& inputs) {
  if (Tape<T>::active() == nullptr) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) { return t.requires_grad(); });
}

template <typename T>
Tensor<T> finish(Tensor<T> out, const char* op, bool record, std::function<void(TensorNode<T>&)> backward) {
  check_finite<T>(out.data(), op);
  if (record) {
    out.set_requires_grad(true);
    Tape<T>::active()->record(op, out.node_ptr(), std::move(backward));
  }
  return out;
}

// Gradient sink of an input, or null when the input is not tracked.
template <typename T>
T* sink(const NodePtr<T>& node) {
  return node->requires_grad ? node->grad_buffer() : nullptr;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw DimensionError(message);
}

template <typename T>
void require_rank(const Tensor<T>& x, std::size_t rank, const char* op) {
  require(x.defined() && x.rank() == rank,
          std::string(op) + ": expected rank " + std::to_string(rank) + " input, got " +
              (x.defined() ? to_string(x.shape()) : std::string("undefined")));
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.shape() == b.shape(),
          std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner dimensions differ " + to_string(a.shape()) + " · " + to_string(b.shape()));
  Tensor<T> out(Shape{m, n});
  kernels::gemm<T>(GemmShape{m, n, k}, a.data().data(), b.data().data(), out.mutable_data().data(), false);
  const bool rec = recording<T>({&a, &b});
  auto na = a.node_ptr(), nb = b.node_ptr();
  return finish<T>(std::move(out), "matmul", rec, [na, nb, m, n, k](TensorNode<T>& o) {
    if (T* da = sink(na)) kernels::gemm<T>(GemmShape{m, k, n, false, true}, o.grad.data(), nb->data.data(), da, true);
    if (T* db = sink(nb)) kernels::gemm<T>(GemmShape{k, n, m, true, false}, na->data.data(), o.grad.data(), db, true);
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "add");
  Tensor<T> out(a.shape());
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + b.data()[i];
  auto na = a.node_ptr(), nb = b.node_ptr();
  return finish<T>(std::move(out), "add", recording<T>({&a, &b}), [na, nb](TensorNode<T>& o) {
    const std::size_t n = o.grad.size();
    if (T* da = sink(na)) for (std::size_t i = 0; i < n; ++i) da[i] += o.grad[i];
    if (T* db = sink(nb)) for (std::size_t i = 0; i < n; ++i) db[i] += o.grad[i];
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "sub");
  Tensor<T> out(a.shape());
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] - b.data()[i];
  auto na = a.node_ptr(), nb = b.node_ptr();
  return finish<T>(std::move(out), "sub", recording<T>({&a, &b}), [na, nb](TensorNode<T>& o) {
    const std::size_t n = o.grad.size();
    if (T* da = sink(na)) for (std::size_t i = 0; i < n; ++i) da[i] += o.grad[i];
    if (T* db = sink(nb)) for (std::size_t i = 0; i < n; ++i) db[i] -= o.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same(a, b, "mul");
  Tensor<T> out(a.shape());
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * b.data()[i];
  auto na = a.node_ptr(), nb = b.node_ptr();
  return finish<T>(std::move(out), "mul", recording<T>({&a, &b}), [na, nb](TensorNode<T>& o) {
    const std::size_t n = o.grad.size();
    if (T* da = sink(na)) for (std::size_t i = 0; i < n; ++i) da[i] += o.grad[i] * nb->data[i];
    if (T* db = sink(nb)) for (std::size_t i = 0; i < n; ++i) db[i] += o.grad[i] * na->data[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  Tensor<T> out(x.shape());
  auto y = out.mutable_data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x.data()[i] * factor;
  auto nx = x.node_ptr();
  return finish<T>(std::move(out), "scale", recording<T>({&x}), [nx, factor](TensorNode<T>& o) {
    T* dx = nx->grad_buffer();
    for (std::size_t i = 0; i < o.grad.size(); ++i) dx[i] += o.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  require_rank(x, 2, "add_bias");
  require_rank(bias, 1, "add_bias");
  const std::size_t m = x.dim(0), n = x.dim(1);
  require(bias.dim(0) == n, "add_bias: bias " + to_string(bias.shape()) + " vs input " + to_string(x.shape()));
  Tensor<T> out(x.shape());
  auto y = out.mutable_data();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) y[r * n + c] = x.data()[r * n + c] + bias.data()[c];
  auto nx = x.node_ptr(), nb = bias.node_ptr();
  return finish<T>(std::move(out), "add_bias", recording<T>({&x, &bias}), [nx, nb, m, n](TensorNode<T>& o) {
    if (T* dx = sink(nx)) for (std::size_t i = 0; i < m * n; ++i) dx[i] += o.grad[i];
    if (T* db = sink(nb)) {
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) db[c] += o.grad[r * n + c];
    }
  });
}

template <typename T>
Tensor<T> average(const std::vector<Tensor<T>>& xs) {
  require(!xs.empty(), "average: no inputs");
  for (const auto& x : xs) require_same(x, xs.front(), "average");
  Tensor<T> out(xs.front().shape());
  auto y = out.mutable_data();
  const T inv = T(1) / static_cast<T>(xs.size());
  for (const auto& x : xs)
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x.data()[i];
  for (auto& v : y) v *= inv;
  std::vector<NodePtr<T>> nodes;
  for (const auto& x : xs) nodes.push_back(x.node_ptr());
  return finish<T>(std::move(out), "average", recording<T>(xs), [nodes, inv](TensorNode<T>& o) {
    for (const auto& nx : nodes) {
      if (T* dx = sink(nx)) for (std::size_t i = 0; i < o.grad.size(); ++i) dx[i] += o.grad[i] * inv;
    }
  });
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation f) {
  Tensor<T> out(x.shape());
  kernels::activation_forward<T>(f, x.data().data(), out.mutable_data().data(), x.numel());
  auto nx = x.node_ptr();
  return finish<T>(std::move(out), "activation", recording<T>({&x}), [nx, f](TensorNode<T>& o) {
    kernels::activation_backward<T>(f, o.data.data(), o.grad.data(), nx->grad_buffer(), o.data.size());
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  require(x.defined() && (x.rank() == 1 || x.rank() == 2), "softmax: rank-1 or rank-2 input required");
  require(axis < x.rank(), "softmax: axis out of range");
  const bool by_rows = x.rank() == 1 || axis == 1;
  const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
  const std::size_t cols = x.rank() == 1 ? x.dim(0) : x.dim(1);
  Tensor<T> out(x.shape());
  if (by_rows) {
    kernels::softmax_rows<T>(x.data().data(), out.mutable_data().data(), rows, cols);
  } else {
    // Along axis 0: softmax of each column.
    std::vector<T> xt(rows * cols), yt(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) xt[c * rows + r] = x.data()[r * cols + c];
    kernels::softmax_rows<T>(xt.data(), yt.data(), cols, rows);
    auto y = out.mutable_data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = yt[c * rows + r];
  }
  auto nx = x.node_ptr();
  return finish<T>(std::move(out), "softmax", recording<T>({&x}), [nx, by_rows, rows, cols](TensorNode<T>& o) {
    T* dx = nx->grad_buffer();
    const std::size_t groups = by_rows ? rows : cols;
    const std::size_t len = by_rows ? cols : rows;
    for (std::size_t g = 0; g < groups; ++g) {
      auto at = [&](std::size_t i) { return by_rows ? g * cols + i : i * cols + g; };
      T dot = T(0);
      for (std::size_t i = 0; i < len; ++i) dot += o.grad[at(i)] * o.data[at(i)];
      for (std::size_t i = 0; i < len; ++i) dx[at(i)] += o.data[at(i)] * (o.grad[at(i)] - dot);
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  auto nx = x.node_ptr();
  return finish<T>(Tensor<T>::scalar(acc), "sum", recording<T>({&x}), [nx](TensorNode<T>& o) {
    T* dx = nx->grad_buffer();
    for (std::size_t i = 0; i < nx->data.size(); ++i) dx[i] += o.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  require(k >= 2, "cross_entropy: need at least two classes");
  require(labels.size() == n, "cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                  std::to_string(n) + " rows");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(k) + ")");
    }
  }
  auto probs = std::make_shared<std::vector<T>>(n * k);
  kernels::softmax_rows<T>(logits.data().data(), probs->data(), n, k);
  T loss = T(0);
  for (std::size_t r = 0; r < n; ++r) {
    const T* row = logits.data().data() + r * k;
    const T mx = *std::max_element(row, row + k);
    T total = T(0);
    for (std::size_t c = 0; c < k; ++c) total += std::exp(row[c] - mx);
    loss += (mx + std::log(total)) - row[labels[r]];
  }
  loss /= static_cast<T>(n);
  std::vector<int> targets(labels.begin(), labels.end());
  auto nl = logits.node_ptr();
  return finish<T>(Tensor<T>::scalar(loss), "cross_entropy", recording<T>({&logits}),
                   [nl, probs, targets, n, k](TensorNode<T>& o) {
                     T* dl = nl->grad_buffer();
                     const T g = o.grad[0] / static_cast<T>(n);
                     for (std::size_t r = 0; r < n; ++r) {
                       for (std::size_t c = 0; c < k; ++c) {
                         const T onehot = static_cast<int>(c) == targets[r] ? T(1) : T(0);
                         dl[r * k + c] += g * ((*probs)[r * k + c] - onehot);
                       }
                     }
                   });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(numel(shape) == x.numel(), "reshape: " + to_string(x.shape()) + " to " + to_string(shape));
  Tensor<T> out(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()));
  auto nx = x.node_ptr();
  return finish<T>(std::move(out), "reshape", recording<T>({&x}), [nx](TensorNode<T>& o) {
    T* dx = nx->grad_buffer();
    for (std::size_t i = 0; i < o.grad.size(); ++i) dx[i] += o.grad[i];
  });
}

template <typename T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const std::size_t m = a.dim(0), p = a.dim(1), q = b.dim(1);
  require(b.dim(0) == m, "concat_cols: row counts differ " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> out(Shape{m, p + q});
  auto y = out.mutable_data();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(a.data().data() + r * p, p, y.data() + r * (p + q));
    std::copy_n(b.data().data() + r * q, q, y.data() + r * (p + q) + p);
  }
  auto na = a.node_ptr(), nb = b.node_ptr();
  return finish<T>(std::move(out), "concat_cols", recording<T>({&a, &b}), [na, nb, m, p, q](TensorNode<T>& o) {
    T* da = sink(na);
    T* db = sink(nb);
    for (std::size_t r = 0; r < m; ++r) {
      if (da) for (std::size_t c = 0; c < p; ++c) da[r * p + c] += o.grad[r * (p + q) + c];
      if (db) for (std::size_t c = 0; c < q; ++c) db[r * q + c] += o.grad[r * (p + q) + p + c];
    }
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  const std::size_t m = x.dim(0), n = x.dim(1);
  require(begin <= end && end <= n, "slice_cols: range out of bounds for " + to_string(x.shape()));
  const std::size_t w = end - begin;
  Tensor<T> out(Shape{m, w});
  auto y = out.mutable_data();
  for (std::size_t r = 0; r < m; ++r) std::copy_n(x.data().data() + r * n + begin, w, y.data() + r * w);
  auto nx = x.node_ptr();
  return finish<T>(std::move(out), "slice_cols", recording<T>({&x}), [nx, m, n, w, begin](TensorNode<T>& o) {
    T* dx = nx->grad_buffer();
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < w; ++c) dx[r * n + begin + c] += o.grad[r * w + c];
  });
}

template <typename T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& xs) {
  require(!xs.empty(), "concat_rows: no inputs");
  const std::size_t cols = xs.front().dim(1);
  std::size_t rows = 0;
  for (const auto& x : xs) {
    require_rank(x, 2, "concat_rows");
    require(x.dim(1) == cols, "concat_rows: column counts differ");
    rows += x.dim(0);
  }
  Tensor<T> out(Shape{rows, cols});
  auto y = out.mutable_data();
  std::size_t offset = 0;
  std::vector<NodePtr<T>> nodes;
  for (const auto& x : xs) {
    std::copy(x.data().begin(), x.data().end(), y.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += x.numel();
    nodes.push_back(x.node_ptr());
  }
  return finish<T>(std::move(out), "concat_rows", recording<T>(xs), [nodes](TensorNode<T>& o) {
    std::size_t off = 0;
    for (const auto& nx : nodes) {
      if (T* dx = sink(nx)) for (std::size_t i = 0; i < nx->data.size(); ++i) dx[i] += o.grad[off + i];
      off += nx->data.size();
    }
  });
}

template <typename T>
Tensor<T> gated_update(const Tensor<T>& pre, const Tensor<T>& h_prev, Activation f, GatedTrace<T>* trace) {
  require_rank(pre, 2, "gated_update");
  require_rank(h_prev, 2, "gated_update");
  const std::size_t rows = h_prev.dim(0), hidden = h_prev.dim(1);
  require(pre.dim(0) == rows && pre.dim(1) == 2 * hidden,
          "gated_update: pre " + to_string(pre.shape()) + " incompatible with state " + to_string(h_prev.shape()));
  auto gate = std::make_shared<std::vector<T>>(rows * hidden);
  auto cand = std::make_shared<std::vector<T>>(rows * hidden);
  Tensor<T> out(Shape{rows, hidden});
  kernels::gated_update_forward<T>(f, pre.data().data(), h_prev.data().data(), gate->data(), cand->data(),
                                   out.mutable_data().data(), rows, hidden);
  if (trace) {
    trace->gate = Tensor<T>(Shape{rows, hidden}, *gate);
    trace->candidate = Tensor<T>(Shape{rows, hidden}, *cand);
  }
  auto np = pre.node_ptr(), nh = h_prev.node_ptr();
  return finish<T>(std::move(out), "gated_update", recording<T>({&pre, &h_prev}),
                   [np, nh, gate, cand, f, rows, hidden](TensorNode<T>& o) {
                     std::vector<T> scratch;
                     T* dp = sink(np);
                     if (!dp) {
                       scratch.assign(np->data.size(), T(0));
                       dp = scratch.data();
                     }
                     kernels::gated_update_backward<T>(f, gate->data(), cand->data(), nh->data.data(),
                                                       o.grad.data(), dp, sink(nh), rows, hidden);
                   });
}

template <typename T>
Tensor<T> mixed_update(const Tensor<T>& pre, const Tensor<T>& h_prev, const Tensor<T>& weights) {
  require_rank(pre, 2, "mixed_update");
  require_rank(h_prev, 2, "mixed_update");
  require_rank(weights, 2, "mixed_update");
  const std::size_t rows = h_prev.dim(0), hidden = h_prev.dim(1), edges = weights.dim(0);
  require(weights.dim(1) == kNumActivations, "mixed_update: weights must have one column per activation");
  require(pre.dim(0) == edges * rows && pre.dim(1) == 2 * hidden,
          "mixed_update: pre " + to_string(pre.shape()) + " incompatible with " + std::to_string(edges) +
              " edges of state " + to_string(h_prev.shape()));
  Tensor<T> out(Shape{rows, hidden});
  kernels::mixed_update_forward<T>(pre.data().data(), h_prev.data().data(), weights.data().data(),
                                   out.mutable_data().data(), edges, rows, hidden);
  auto np = pre.node_ptr(), nh = h_prev.node_ptr(), nw = weights.node_ptr();
  return finish<T>(std::move(out), "mixed_update", recording<T>({&pre, &h_prev, &weights}),
                   [np, nh, nw, edges, rows, hidden](TensorNode<T>& o) {
                     std::vector<T> scratch;
                     T* dp = sink(np);
                     if (!dp) {
                       scratch.assign(np->data.size(), T(0));
                       dp = scratch.data();
                     }
                     kernels::mixed_update_backward<T>(np->data.data(), nh->data.data(), nw->data.data(),
                                                       o.grad.data(), dp, sink(nh), sink(nw), edges, rows,
                                                       hidden);
                   });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                 std::size_t padding) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 4, "conv2d");
  require_rank(bias, 1, "conv2d");
  const std::size_t batch = x.dim(0), out_ch = w.dim(0), k = w.dim(2);
  require(w.dim(1) == x.dim(1) && w.dim(3) == k, "conv2d: kernel " + to_string(w.shape()) +
                                                     " incompatible with input " + to_string(x.shape()));
  require(bias.dim(0) == out_ch, "conv2d: bias size mismatch");
  require(stride >= 1, "conv2d: stride must be >= 1");
  require(k >= 1 && x.dim(2) + 2 * padding >= k && x.dim(3) + 2 * padding >= k,
          "conv2d: kernel does not fit the padded input");
  const ConvGeometry g{x.dim(1), x.dim(2), x.dim(3), k, stride, padding};
  Tensor<T> out(Shape{batch, out_ch, g.out_height(), g.out_width()});
  kernels::conv2d_forward<T>(g, batch, out_ch, x.data().data(), w.data().data(), bias.data().data(),
                             out.mutable_data().data());
  auto nx = x.node_ptr(), nw = w.node_ptr(), nb = bias.node_ptr();
  return finish<T>(std::move(out), "conv2d", recording<T>({&x, &w, &bias}),
                   [nx, nw, nb, g, batch, out_ch](TensorNode<T>& o) {
                     kernels::conv2d_backward<T>(g, batch, out_ch, nx->data.data(), nw->data.data(),
                                                 o.grad.data(), sink(nx), sink(nw), sink(nb));
                   });
}

template <typename T>
Tensor<T> nchw_to_nhwc(const Tensor<T>& x) {
  require_rank(x, 4, "nchw_to_nhwc");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> out(Shape{n, h, w, c});
  auto y = out.mutable_data();
  auto src = x.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) y[((b * h + i) * w + j) * c + ch] = src[((b * c + ch) * h + i) * w + j];
  auto nx = x.node_ptr();
  return finish<T>(std::move(out), "nchw_to_nhwc", recording<T>({&x}), [nx, n, c, h, w](TensorNode<T>& o) {
    T* dx = nx->grad_buffer();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) dx[((b * c + ch) * h + i) * w + j] += o.grad[((b * h + i) * w + j) * c + ch];
  });
}

namespace {

// Source offset in an N×H×W×D grid for each output element of extract_patches,
// or npos for zero padding.
std::vector<std::size_t> patch_gather_map(std::size_t n, std::size_t h, std::size_t w, std::size_t d,
                                          std::size_t wh, std::size_t ww) {
  const std::size_t gh = (h + wh - 1) / wh, gw = (w + ww - 1) / ww;
  const std::size_t pd = d * wh * ww;
  std::vector<std::size_t> map(n * gh * gw * pd);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < gh; ++i)
      for (std::size_t j = 0; j < gw; ++j)
        for (std::size_t c = 0; c < d; ++c)
          for (std::size_t r = 0; r < wh; ++r)
            for (std::size_t s = 0; s < ww; ++s) {
              const std::size_t y = i * wh + r, x = j * ww + s;
              const std::size_t dst = ((b * gh + i) * gw + j) * pd + (c * wh + r) * ww + s;
              map[dst] = (y < h && x < w) ? ((b * h + y) * w + x) * d + c : static_cast<std::size_t>(-1);
            }
  return map;
}

}  // namespace

template <typename T>
Tensor<T> extract_patches(const Tensor<T>& grid, std::size_t window_h, std::size_t window_w) {
  require_rank(grid, 4, "extract_patches");
  require(window_h >= 1 && window_w >= 1, "extract_patches: window must be at least 1x1");
  const std::size_t n = grid.dim(0), h = grid.dim(1), w = grid.dim(2), d = grid.dim(3);
  const std::size_t gh = (h + window_h - 1) / window_h, gw = (w + window_w - 1) / window_w;
  auto map = std::make_shared<std::vector<std::size_t>>(patch_gather_map(n, h, w, d, window_h, window_w));
  Tensor<T> out(Shape{n, gh, gw, d * window_h * window_w});
  auto y = out.mutable_data();
  auto src = grid.data();
  for (std::size_t i = 0; i < map->size(); ++i) {
    const std::size_t s = (*map)[i];
    y[i] = s == static_cast<std::size_t>(-1) ? T(0) : src[s];
  }
  auto ng = grid.node_ptr();
  return finish<T>(std::move(out), "extract_patches", recording<T>({&grid}), [ng, map](TensorNode<T>& o) {
    T* dg = ng->grad_buffer();
    for (std::size_t i = 0; i < map->size(); ++i) {
      const std::size_t s = (*map)[i];
      if (s != static_cast<std::size_t>(-1)) dg[s] += o.grad[i];
    }
  });
}

template <typename T>
Tensor<T> grid_scale(const Tensor<T>& grid, const Tensor<T>& gate) {
  require_rank(grid, 4, "grid_scale");
  require_rank(gate, 2, "grid_scale");
  const std::size_t n = grid.dim(0), a = grid.dim(1), b = grid.dim(2), d = grid.dim(3);
  require(gate.dim(0) == a && gate.dim(1) == b,
          "grid_scale: gate " + to_string(gate.shape()) + " vs grid " + to_string(grid.shape()));
  Tensor<T> out(grid.shape());
  auto y = out.mutable_data();
  for (std::size_t bi = 0; bi < n; ++bi)
    for (std::size_t p = 0; p < a * b; ++p) {
      const T g = gate.data()[p];
      for (std::size_t c = 0; c < d; ++c) y[(bi * a * b + p) * d + c] = grid.data()[(bi * a * b + p) * d + c] * g;
    }
  auto ng = grid.node_ptr(), nq = gate.node_ptr();
  return finish<T>(std::move(out), "grid_scale", recording<T>({&grid, &gate}), [ng, nq, n, a, b, d](TensorNode<T>& o) {
    T* dg = sink(ng);
    T* dq = sink(nq);
    for (std::size_t p = 0; p < a * b; ++p) {
      T acc = T(0);
      for (std::size_t bi = 0; bi < n; ++bi)
        for (std::size_t c = 0; c < d; ++c) {
          const std::size_t i = (bi * a * b + p) * d + c;
          if (dg) dg[i] += o.grad[i] * nq->data[p];
          acc += o.grad[i] * ng->data[i];
        }
      if (dq) dq[p] += acc;
    }
  });
}

template <typename T>
Tensor<T> grid_transpose(const Tensor<T>& grid) {
  require_rank(grid, 4, "grid_transpose");
  const std::size_t n = grid.dim(0), a = grid.dim(1), b = grid.dim(2), d = grid.dim(3);
  Tensor<T> out(Shape{n, b, a, d});
  auto y = out.mutable_data();
  for (std::size_t bi = 0; bi < n; ++bi)
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < b; ++j)
        std::copy_n(grid.data().data() + ((bi * a + i) * b + j) * d, d, y.data() + ((bi * b + j) * a + i) * d);
  auto ng = grid.node_ptr();
  return finish<T>(std::move(out), "grid_transpose", recording<T>({&grid}), [ng, n, a, b, d](TensorNode<T>& o) {
    T* dg = ng->grad_buffer();
    for (std::size_t bi = 0; bi < n; ++bi)
      for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
          for (std::size_t c = 0; c < d; ++c) dg[((bi * a + i) * b + j) * d + c] += o.grad[((bi * b + j) * a + i) * d + c];
  });
}

template <typename T>
Tensor<T> grid_column(const Tensor<T>& grid, std::size_t column) {
  require_rank(grid, 4, "grid_column");
  const std::size_t n = grid.dim(0), a = grid.dim(1), b = grid.dim(2), d = grid.dim(3);
  require(column < b, "grid_column: column " + std::to_string(column) + " out of range for " + to_string(grid.shape()));
  Tensor<T> out(Shape{n * a, d});
  auto y = out.mutable_data();
  for (std::size_t r = 0; r < n * a; ++r) std::copy_n(grid.data().data() + (r * b + column) * d, d, y.data() + r * d);
  auto ng = grid.node_ptr();
  return finish<T>(std::move(out), "grid_column", recording<T>({&grid}), [ng, n, a, b, d, column](TensorNode<T>& o) {
    T* dg = ng->grad_buffer();
    for (std::size_t r = 0; r < n * a; ++r)
      for (std::size_t c = 0; c < d; ++c) dg[(r * b + column) * d + c] += o.grad[r * d + c];
  });
}

template <typename T>
Tensor<T> assemble_bidirectional(const std::vector<Tensor<T>>& fwd, const std::vector<Tensor<T>>& bwd,
                                 std::size_t batch, std::size_t rows) {
  require(!fwd.empty() && fwd.size() == bwd.size(), "assemble_bidirectional: direction lengths differ");
  const std::size_t len = fwd.size();
  const std::size_t df = fwd.front().dim(1), db = bwd.front().dim(1), d = df + db;
  for (std::size_t j = 0; j < len; ++j) {
    require(fwd[j].rank() == 2 && fwd[j].dim(0) == batch * rows && fwd[j].dim(1) == df &&
                bwd[j].rank() == 2 && bwd[j].dim(0) == batch * rows && bwd[j].dim(1) == db,
            "assemble_bidirectional: step " + std::to_string(j) + " has inconsistent shape");
  }
  Tensor<T> out(Shape{batch, rows, len, d});
  auto y = out.mutable_data();
  for (std::size_t j = 0; j < len; ++j)
    for (std::size_t r = 0; r < batch * rows; ++r) {
      std::copy_n(fwd[j].data().data() + r * df, df, y.data() + (r * len + j) * d);
      std::copy_n(bwd[j].data().data() + r * db, db, y.data() + (r * len + j) * d + df);
    }
  std::vector<NodePtr<T>> nf, nb;
  std::vector<Tensor<T>> all;
  for (std::size_t j = 0; j < len; ++j) {
    nf.push_back(fwd[j].node_ptr());
    nb.push_back(bwd[j].node_ptr());
    all.push_back(fwd[j]);
    all.push_back(bwd[j]);
  }
  return finish<T>(std::move(out), "assemble_bidirectional", recording<T>(all),
                   [nf, nb, len, df, db, d, batch, rows](TensorNode<T>& o) {
                     for (std::size_t j = 0; j < len; ++j) {
                       T* gf = sink(nf[j]);
                       T* gb = sink(nb[j]);
                       for (std::size_t r = 0; r < batch * rows; ++r) {
                         const T* src = o.grad.data() + (r * len + j) * d;
                         if (gf) for (std::size_t c = 0; c < df; ++c) gf[r * df + c] += src[c];
                         if (gb) for (std::size_t c = 0; c < db; ++c) gb[r * db + c] += src[df + c];
                       }
                     }
                   });
}

#define DRN_INSTANTIATE_OPS(T)                                                                             \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                                        \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                           \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                                        \
  template Tensor<T> add_bias<T>(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> average<T>(const std::vector<Tensor<T>>&);                                            \
  template Tensor<T> activation<T>(const Tensor<T>&, Activation);                                          \
  template Tensor<T> softmax<T>(const Tensor<T>&, std::size_t);                                            \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                             \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                            \
  template Tensor<T> cross_entropy<T>(const Tensor<T>&, std::span<const int>);                             \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                                  \
  template Tensor<T> concat_cols<T>(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> slice_cols<T>(const Tensor<T>&, std::size_t, std::size_t);                            \
  template Tensor<T> concat_rows<T>(const std::vector<Tensor<T>>&);                                        \
  template Tensor<T> gated_update<T>(const Tensor<T>&, const Tensor<T>&, Activation, GatedTrace<T>*);      \
  template Tensor<T> mixed_update<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,          \
                               std::size_t);                                                               \
  template Tensor<T> nchw_to_nhwc<T>(const Tensor<T>&);                                                    \
  template Tensor<T> extract_patches<T>(const Tensor<T>&, std::size_t, std::size_t);                       \
  template Tensor<T> grid_scale<T>(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> grid_transpose<T>(const Tensor<T>&);                                                  \
  template Tensor<T> grid_column<T>(const Tensor<T>&, std::size_t);                                        \
  template Tensor<T> assemble_bidirectional<T>(const std::vector<Tensor<T>>&, const std::vector<Tensor<T>>&, \
                                               std::size_t, std::size_t);

DRN_INSTANTIATE_OPS(float)
DRN_INSTANTIATE_OPS(double)

}  // namespace drn
