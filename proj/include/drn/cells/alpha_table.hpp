#pragma once

#include <vector>

#include "drn/cells/genotype.hpp"
#include "drn/numerics/init.hpp"
#include "drn/numerics/tensor.hpp"

namespace drn {

/// Architecture parameters α^{(j,i)}_f for every vertex i in 1..n, every
/// predecessor j < i and every activation f. Vertex i owns one trainable
/// i×4 tensor (row j, column f).
template <typename T>
class AlphaTable {
 public:
  explicit AlphaTable(std::size_t num_vertices = Genotype::kDefaultVertices);

  /// Entries drawn from U(-range, range).
  static AlphaTable random(std::size_t num_vertices, double range, Rng& rng);

  std::size_t num_vertices() const { return per_vertex_.size(); }
  const Tensor<T>& vertex(std::size_t i) const;

  T get(std::size_t pred, std::size_t vertex, Activation f) const;
  void set(std::size_t pred, std::size_t vertex, Activation f, T value);

  /// Differentiable mixing weights of vertex i: a softmax taken jointly over
  /// all (predecessor, activation) pairs, returned as i×4. Row j equals the
  /// per-edge activation softmax scaled by that edge's share of the mass.
  Tensor<T> mixing_weights(std::size_t vertex) const;

  std::vector<NamedTensor<T>> parameters() const;
  std::vector<Tensor<T>> tensors() const;

  /// Deep copy detached from the current parameter nodes.
  AlphaTable snapshot() const;
  /// Overwrites values in place, keeping the parameter nodes.
  void assign(const AlphaTable& other);

 private:
  std::vector<Tensor<T>> per_vertex_;
};

/// Per vertex: j* = argmax_j max_f α^{(j,i)}_f, f* = argmax_f α^{(j*,i)}_f.
/// Ties resolve to the lowest index.
template <typename T>
Genotype derive_genotype(const AlphaTable<T>& alpha);

/// Mean over vertices of the entropy (nats) of each vertex's mixing weights.
template <typename T>
double alpha_entropy(const AlphaTable<T>& alpha);

}  // namespace drn
