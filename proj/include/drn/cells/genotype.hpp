#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "drn/numerics/activation.hpp"

namespace drn {

class GenotypeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GenotypeEntry {
  std::size_t predecessor;
  Activation activation;
  bool operator==(const GenotypeEntry&) const = default;
};

/// Discrete cell: for each non-input vertex i = 1..n, exactly one predecessor
/// j < i and the activation on that edge. Vertex 0 (the input vertex) always
/// uses Tanh.
class Genotype {
 public:
  static constexpr Activation kInputActivation = Activation::Tanh;
  static constexpr std::size_t kDefaultVertices = 8;

  /// entries[i - 1] describes vertex i. Throws GenotypeError on a predecessor
  /// that is not strictly earlier, or on an empty list.
  explicit Genotype(std::vector<GenotypeEntry> entries);

  std::size_t num_vertices() const { return entries_.size(); }
  const std::vector<GenotypeEntry>& entries() const { return entries_; }
  /// Entry of vertex i, 1-based.
  const GenotypeEntry& vertex(std::size_t i) const;
  std::size_t count(Activation f) const;

  bool operator==(const Genotype&) const = default;

 private:
  std::vector<GenotypeEntry> entries_;
};

/// `vertices=<n>` followed by n lines `v<i> pred=<j> act=<Name>`.
std::string format_genotype(const Genotype& g);
Genotype parse_genotype(std::string_view text);
void save_genotype(const std::filesystem::path& path, const Genotype& g);
Genotype load_genotype(const std::filesystem::path& path);

/// Graphviz digraph of the cell; vertex 0 is drawn as `x_t,h_{t-1}` and every
/// edge carries its activation name.
std::string genotype_to_dot(const Genotype& g, std::string_view graph_name = "cell");

namespace presets {
/// Vanilla ReNet cell.
Genotype vanilla();
/// Cell found with Sigmoid Weighting enabled.
Genotype sigmoid_weighting();
/// Cell found with Directional Weight Sharing enabled.
Genotype directional_weight_sharing();
/// Lookup by name: vanilla | sigmoid_weighting | dws (alias directional_weight_sharing).
Genotype by_name(std::string_view name);
bool exists(std::string_view name);
}  // namespace presets

}  // namespace drn
