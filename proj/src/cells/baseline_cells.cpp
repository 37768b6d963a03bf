#include "drn/cells/baseline_cells.hpp"

namespace drn {

namespace {

template <typename T>
void expect_shape(const Tensor<T>& t, const Shape& want, const char* what) {
  if (!t.defined() || t.shape() != want) {
    throw DimensionError(std::string(what) + " must be " + to_string(want) + ", got " +
                         (t.defined() ? to_string(t.shape()) : std::string("undefined")));
  }
}

void expect_input(std::size_t cols, std::size_t want, const char* cell) {
  if (cols != want) {
    throw DimensionError(std::string(cell) + " input has " + std::to_string(cols) + " columns, expected " +
                         std::to_string(want));
  }
}

}  // namespace

template <typename T>
void GruWeights<T>::validate() const {
  const std::size_t h = hidden_dim;
  expect_shape(wx, Shape{input_dim, 3 * h}, "gru wx");
  expect_shape(u_zr, Shape{h, 2 * h}, "gru u_zr");
  expect_shape(u_n, Shape{h, h}, "gru u_n");
  expect_shape(bias, Shape{3 * h}, "gru bias");
}

template <typename T>
std::vector<NamedTensor<T>> GruWeights<T>::parameters() const {
  return {{"wx", wx}, {"u_zr", u_zr}, {"u_n", u_n}, {"bias", bias}};
}

template <typename T>
GruWeights<T> GruWeights<T>::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  GruWeights g;
  g.input_dim = input_dim;
  g.hidden_dim = hidden_dim;
  g.wx = fan_in_parameter<T>(Shape{input_dim, 3 * hidden_dim}, input_dim, rng);
  g.u_zr = fan_in_parameter<T>(Shape{hidden_dim, 2 * hidden_dim}, hidden_dim, rng);
  g.u_n = fan_in_parameter<T>(Shape{hidden_dim, hidden_dim}, hidden_dim, rng);
  g.bias = zero_parameter<T>(Shape{3 * hidden_dim});
  return g;
}

template <typename T>
void LstmWeights<T>::validate() const {
  expect_shape(w, Shape{input_dim + hidden_dim, 4 * hidden_dim}, "lstm w");
  expect_shape(bias, Shape{4 * hidden_dim}, "lstm bias");
}

template <typename T>
std::vector<NamedTensor<T>> LstmWeights<T>::parameters() const {
  return {{"w", w}, {"bias", bias}};
}

template <typename T>
LstmWeights<T> LstmWeights<T>::init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  LstmWeights l;
  l.input_dim = input_dim;
  l.hidden_dim = hidden_dim;
  l.w = fan_in_parameter<T>(Shape{input_dim + hidden_dim, 4 * hidden_dim}, input_dim + hidden_dim, rng);
  l.bias = zero_parameter<T>(Shape{4 * hidden_dim});
  return l;
}

template <typename T>
Tensor<T> gru_forward(const GruWeights<T>& w, const Tensor<T>& x, const Tensor<T>& h_prev) {
  const std::size_t H = w.hidden_dim;
  if (x.rank() != 2) throw DimensionError("gru input must be rank 2");
  expect_input(x.dim(1), w.input_dim, "gru");
  expect_shape(h_prev, Shape{x.dim(0), H}, "gru h_prev");
  Tensor<T> xw = add_bias(matmul(x, w.wx), w.bias);
  Tensor<T> zr = sigmoid(add(slice_cols(xw, 0, 2 * H), matmul(h_prev, w.u_zr)));
  Tensor<T> z = slice_cols(zr, 0, H);
  Tensor<T> r = slice_cols(zr, H, 2 * H);
  Tensor<T> n = tanh(add(slice_cols(xw, 2 * H, 3 * H), matmul(mul(r, h_prev), w.u_n)));
  return add(h_prev, mul(z, sub(n, h_prev)));
}

template <typename T>
LstmState<T> lstm_forward(const LstmWeights<T>& w, const Tensor<T>& x, const LstmState<T>& prev) {
  const std::size_t H = w.hidden_dim;
  if (x.rank() != 2) throw DimensionError("lstm input must be rank 2");
  expect_input(x.dim(1), w.input_dim, "lstm");
  expect_shape(prev.h, Shape{x.dim(0), H}, "lstm h_prev");
  expect_shape(prev.c, Shape{x.dim(0), H}, "lstm c_prev");
  Tensor<T> gates = add_bias(matmul(concat_cols(x, prev.h), w.w), w.bias);
  Tensor<T> ifo = sigmoid(concat_cols(slice_cols(gates, 0, 2 * H), slice_cols(gates, 3 * H, 4 * H)));
  Tensor<T> g = tanh(slice_cols(gates, 2 * H, 3 * H));
  Tensor<T> c = add(mul(slice_cols(ifo, H, 2 * H), prev.c), mul(slice_cols(ifo, 0, H), g));
  Tensor<T> h = mul(slice_cols(ifo, 2 * H, 3 * H), tanh(c));
  return {h, c};
}

template <typename T>
GruCell<T>::GruCell(GruWeights<T> weights) : weights_(std::move(weights)) {
  weights_.validate();
}

template <typename T>
CellState<T> GruCell<T>::initial_state(std::size_t batch) const {
  return {Tensor<T>(Shape{batch, weights_.hidden_dim}), {}};
}

template <typename T>
CellState<T> GruCell<T>::step(const Tensor<T>& x, const CellState<T>& previous) const {
  return {gru_forward(weights_, x, previous.output), {}};
}

template <typename T>
LstmCell<T>::LstmCell(LstmWeights<T> weights) : weights_(std::move(weights)) {
  weights_.validate();
}

template <typename T>
CellState<T> LstmCell<T>::initial_state(std::size_t batch) const {
  return {Tensor<T>(Shape{batch, weights_.hidden_dim}), {Tensor<T>(Shape{batch, weights_.hidden_dim})}};
}

template <typename T>
CellState<T> LstmCell<T>::step(const Tensor<T>& x, const CellState<T>& previous) const {
  if (previous.slots.size() != 1) throw DimensionError("lstm state needs exactly one memory slot");
  LstmState<T> next = lstm_forward(weights_, x, LstmState<T>{previous.output, previous.slots[0]});
  return {next.h, {next.c}};
}

#define DRN_INSTANTIATE_BASELINES(T)                                                                        \
  template struct GruWeights<T>;                                                                            \
  template struct LstmWeights<T>;                                                                           \
  template Tensor<T> gru_forward<T>(const GruWeights<T>&, const Tensor<T>&, const Tensor<T>&);              \
  template LstmState<T> lstm_forward<T>(const LstmWeights<T>&, const Tensor<T>&, const LstmState<T>&);      \
  template class GruCell<T>;                                                                                \
  template class LstmCell<T>;

DRN_INSTANTIATE_BASELINES(float)
DRN_INSTANTIATE_BASELINES(double)

}  // namespace drn
