#include "drn/cells/cell.hpp"

namespace drn {

template <typename T>
void CellWeights<T>::validate() const {
  if (matrices.size() < 2) throw DimensionError("cell weights need the input vertex and at least one more");
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const std::size_t rows = i == 0 ? input_dim + hidden_dim : hidden_dim;
    const auto& m = matrices[i];
    if (!m.defined() || m.rank() != 2 || m.dim(0) != rows || m.dim(1) != 2 * hidden_dim) {
      throw DimensionError("cell weight W" + std::to_string(i) + " must be " + std::to_string(rows) + "x" +
                           std::to_string(2 * hidden_dim) + ", got " +
                           (m.defined() ? to_string(m.shape()) : std::string("undefined")));
    }
  }
}

template <typename T>
std::vector<NamedTensor<T>> CellWeights<T>::parameters() const {
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 0; i < matrices.size(); ++i) out.push_back({"w" + std::to_string(i), matrices[i]});
  return out;
}

template <typename T>
CellWeights<T> CellWeights<T>::init(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_vertices,
                                    Rng& rng) {
  CellWeights w;
  w.input_dim = input_dim;
  w.hidden_dim = hidden_dim;
  w.matrices.push_back(fan_in_parameter<T>(Shape{input_dim + hidden_dim, 2 * hidden_dim}, input_dim + hidden_dim, rng));
  for (std::size_t i = 1; i <= num_vertices; ++i) {
    w.matrices.push_back(fan_in_parameter<T>(Shape{hidden_dim, 2 * hidden_dim}, hidden_dim, rng));
  }
  return w;
}

template <typename T>
VertexOutput<T> vertex_step(const Tensor<T>& x_in, const Tensor<T>& h_prev, const Tensor<T>& weight, Activation f) {
  GatedTrace<T> trace;
  Tensor<T> state = gated_update(matmul(x_in, weight), h_prev, f, &trace);
  return {trace.gate, trace.candidate, state};
}

template <typename T>
CellState<T> darts_initial_state(std::size_t batch, std::size_t hidden, std::size_t num_vertices) {
  CellState<T> s;
  s.output = Tensor<T>(Shape{batch, hidden});
  for (std::size_t i = 0; i <= num_vertices; ++i) s.slots.emplace_back(Shape{batch, hidden});
  return s;
}

namespace {

template <typename T>
void check_state(const CellWeights<T>& w, const Tensor<T>& x, const CellState<T>& s, std::size_t vertices) {
  if (x.rank() != 2 || x.dim(1) != w.input_dim) {
    throw DimensionError("cell input must be batch x " + std::to_string(w.input_dim) + ", got " + to_string(x.shape()));
  }
  if (s.slots.size() != vertices + 1 || !s.output.defined() || s.output.dim(0) != x.dim(0)) {
    throw DimensionError("cell state does not match the cell or the batch");
  }
}

// Input vertex: x~_0 = [x_t, h_{t-1}], Tanh candidate, own recurrence h_{0,t-1}.
template <typename T>
Tensor<T> input_vertex(const CellWeights<T>& w, const Tensor<T>& x, const CellState<T>& s) {
  return gated_update(matmul(concat_cols(x, s.output), w.matrices[0]), s.slots[0], Genotype::kInputActivation);
}

}  // namespace

template <typename T>
CellState<T> genotype_cell_forward(const Genotype& genotype, const CellWeights<T>& weights, const Tensor<T>& x,
                                   const CellState<T>& state, FeedMode mode) {
  if (weights.num_vertices() != genotype.num_vertices()) {
    throw DimensionError("genotype has " + std::to_string(genotype.num_vertices()) + " vertices, weights have " +
                         std::to_string(weights.num_vertices()));
  }
  check_state(weights, x, state, genotype.num_vertices());
  CellState<T> next;
  next.slots.reserve(state.slots.size());
  next.slots.push_back(input_vertex(weights, x, state));
  for (std::size_t i = 1; i <= genotype.num_vertices(); ++i) {
    const auto& e = genotype.vertex(i);
    const Tensor<T>& feed = mode == FeedMode::CurrentStep ? next.slots[e.predecessor] : state.slots[e.predecessor];
    next.slots.push_back(gated_update(matmul(feed, weights.matrices[i]), state.slots[i], e.activation));
  }
  next.output = average(std::vector<Tensor<T>>(next.slots.begin() + 1, next.slots.end()));
  return next;
}

template <typename T>
CellState<T> mixed_cell_forward(const AlphaTable<T>& alpha, const CellWeights<T>& weights, const Tensor<T>& x,
                                const CellState<T>& state, FeedMode mode) {
  if (weights.num_vertices() != alpha.num_vertices()) {
    throw DimensionError("alpha table has " + std::to_string(alpha.num_vertices()) + " vertices, weights have " +
                         std::to_string(weights.num_vertices()));
  }
  check_state(weights, x, state, alpha.num_vertices());
  CellState<T> next;
  next.slots.reserve(state.slots.size());
  next.slots.push_back(input_vertex(weights, x, state));
  for (std::size_t i = 1; i <= alpha.num_vertices(); ++i) {
    const auto& source = mode == FeedMode::CurrentStep ? next.slots : state.slots;
    // One product for all i predecessor edges, stacked row-wise.
    std::vector<Tensor<T>> preds(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(i));
    Tensor<T> pre = matmul(i == 1 ? preds.front() : concat_rows(preds), weights.matrices[i]);
    next.slots.push_back(mixed_update(pre, state.slots[i], alpha.mixing_weights(i)));
  }
  next.output = average(std::vector<Tensor<T>>(next.slots.begin() + 1, next.slots.end()));
  return next;
}

template <typename T>
GenotypeCell<T>::GenotypeCell(Genotype genotype, CellWeights<T> weights, FeedMode mode)
    : genotype_(std::move(genotype)), weights_(std::move(weights)), mode_(mode) {
  weights_.validate();
  if (weights_.num_vertices() != genotype_.num_vertices()) {
    throw DimensionError("genotype and weights disagree on the vertex count");
  }
}

template <typename T>
CellState<T> GenotypeCell<T>::initial_state(std::size_t batch) const {
  return darts_initial_state<T>(batch, weights_.hidden_dim, genotype_.num_vertices());
}

template <typename T>
CellState<T> GenotypeCell<T>::step(const Tensor<T>& x, const CellState<T>& previous) const {
  return genotype_cell_forward(genotype_, weights_, x, previous, mode_);
}

template <typename T>
MixedCell<T>::MixedCell(std::shared_ptr<const AlphaTable<T>> alpha, CellWeights<T> weights, FeedMode mode)
    : alpha_(std::move(alpha)), weights_(std::move(weights)), mode_(mode) {
  weights_.validate();
  if (!alpha_ || alpha_->num_vertices() != weights_.num_vertices()) {
    throw DimensionError("alpha table and weights disagree on the vertex count");
  }
}

template <typename T>
CellState<T> MixedCell<T>::initial_state(std::size_t batch) const {
  return darts_initial_state<T>(batch, weights_.hidden_dim, weights_.num_vertices());
}

template <typename T>
CellState<T> MixedCell<T>::step(const Tensor<T>& x, const CellState<T>& previous) const {
  return mixed_cell_forward(*alpha_, weights_, x, previous, mode_);
}

#define DRN_INSTANTIATE_CELLS(T)                                                                            \
  template struct CellWeights<T>;                                                                           \
  template VertexOutput<T> vertex_step<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Activation); \
  template CellState<T> darts_initial_state<T>(std::size_t, std::size_t, std::size_t);                      \
  template CellState<T> genotype_cell_forward<T>(const Genotype&, const CellWeights<T>&, const Tensor<T>&,  \
                                                 const CellState<T>&, FeedMode);                            \
  template CellState<T> mixed_cell_forward<T>(const AlphaTable<T>&, const CellWeights<T>&, const Tensor<T>&, \
                                              const CellState<T>&, FeedMode);                               \
  template class GenotypeCell<T>;                                                                           \
  template class MixedCell<T>;

DRN_INSTANTIATE_CELLS(float)
DRN_INSTANTIATE_CELLS(double)

}  // namespace drn
