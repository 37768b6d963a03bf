#include "drn/cells/alpha_table.hpp"

#include <cmath>
#include <stdexcept>

#include "drn/numerics/ops.hpp"

namespace drn {

template <typename T>
AlphaTable<T>::AlphaTable(std::size_t num_vertices) {
  if (num_vertices == 0) throw std::invalid_argument("alpha table needs at least one vertex");
  for (std::size_t i = 1; i <= num_vertices; ++i) per_vertex_.push_back(zero_parameter<T>(Shape{i, kNumActivations}));
}

template <typename T>
AlphaTable<T> AlphaTable<T>::random(std::size_t num_vertices, double range, Rng& rng) {
  AlphaTable table(num_vertices);
  for (std::size_t i = 1; i <= num_vertices; ++i) {
    table.per_vertex_[i - 1] = uniform_parameter<T>(Shape{i, kNumActivations}, range, rng);
  }
  return table;
}

template <typename T>
const Tensor<T>& AlphaTable<T>::vertex(std::size_t i) const {
  if (i == 0 || i > per_vertex_.size()) throw std::out_of_range("alpha vertex " + std::to_string(i));
  return per_vertex_[i - 1];
}

template <typename T>
T AlphaTable<T>::get(std::size_t pred, std::size_t vertex_index, Activation f) const {
  const auto& t = vertex(vertex_index);
  if (pred >= vertex_index) throw std::out_of_range("alpha predecessor must precede its vertex");
  return t.data()[pred * kNumActivations + static_cast<std::size_t>(f)];
}

template <typename T>
void AlphaTable<T>::set(std::size_t pred, std::size_t vertex_index, Activation f, T value) {
  if (vertex_index == 0 || vertex_index > per_vertex_.size() || pred >= vertex_index) {
    throw std::out_of_range("alpha index (" + std::to_string(pred) + ", " + std::to_string(vertex_index) + ")");
  }
  per_vertex_[vertex_index - 1].mutable_data()[pred * kNumActivations + static_cast<std::size_t>(f)] = value;
}

template <typename T>
Tensor<T> AlphaTable<T>::mixing_weights(std::size_t i) const {
  const auto& a = vertex(i);
  return reshape(softmax(reshape(a, Shape{1, i * kNumActivations}), 1), Shape{i, kNumActivations});
}

template <typename T>
std::vector<NamedTensor<T>> AlphaTable<T>::parameters() const {
  std::vector<NamedTensor<T>> out;
  for (std::size_t i = 1; i <= per_vertex_.size(); ++i) out.push_back({"alpha.v" + std::to_string(i), per_vertex_[i - 1]});
  return out;
}

template <typename T>
std::vector<Tensor<T>> AlphaTable<T>::tensors() const {
  return per_vertex_;
}

template <typename T>
AlphaTable<T> AlphaTable<T>::snapshot() const {
  AlphaTable copy(per_vertex_.size());
  copy.assign(*this);
  return copy;
}

template <typename T>
void AlphaTable<T>::assign(const AlphaTable& other) {
  if (other.num_vertices() != num_vertices()) throw std::invalid_argument("alpha table size mismatch");
  for (std::size_t k = 0; k < per_vertex_.size(); ++k) {
    auto dst = per_vertex_[k].mutable_data();
    auto src = other.per_vertex_[k].data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

template <typename T>
Genotype derive_genotype(const AlphaTable<T>& alpha) {
  std::vector<GenotypeEntry> entries;
  for (std::size_t i = 1; i <= alpha.num_vertices(); ++i) {
    auto values = alpha.vertex(i).data();
    std::size_t best_pred = 0;
    std::size_t best_act = 0;
    T best = values[0];
    for (std::size_t j = 0; j < i; ++j) {
      // Strict comparisons keep the lowest index on ties.
      std::size_t row_best = 0;
      for (std::size_t f = 1; f < kNumActivations; ++f) {
        if (values[j * kNumActivations + f] > values[j * kNumActivations + row_best]) row_best = f;
      }
      const T row_max = values[j * kNumActivations + row_best];
      if (j == 0 || row_max > best) {
        best = row_max;
        best_pred = j;
        best_act = row_best;
      }
    }
    entries.push_back({best_pred, kAllActivations[best_act]});
  }
  return Genotype(std::move(entries));
}

template <typename T>
double alpha_entropy(const AlphaTable<T>& alpha) {
  double total = 0.0;
  for (std::size_t i = 1; i <= alpha.num_vertices(); ++i) {
    auto values = alpha.vertex(i).data();
    double mx = static_cast<double>(values[0]);
    for (T v : values) mx = std::max(mx, static_cast<double>(v));
    double z = 0.0;
    for (T v : values) z += std::exp(static_cast<double>(v) - mx);
    double h = 0.0;
    for (T v : values) {
      const double p = std::exp(static_cast<double>(v) - mx) / z;
      if (p > 0.0) h -= p * std::log(p);
    }
    total += h;
  }
  return total / static_cast<double>(alpha.num_vertices());
}

template class AlphaTable<float>;
template class AlphaTable<double>;
template Genotype derive_genotype<float>(const AlphaTable<float>&);
template Genotype derive_genotype<double>(const AlphaTable<double>&);
template double alpha_entropy<float>(const AlphaTable<float>&);
template double alpha_entropy<double>(const AlphaTable<double>&);

}  // namespace drn
