#include "drn/cells/genotype.hpp"

#include <fstream>
#include <sstream>

namespace drn {

Genotype::Genotype(std::vector<GenotypeEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw GenotypeError("genotype needs at least one non-input vertex");
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const std::size_t vertex = k + 1;
    if (entries_[k].predecessor >= vertex) {
      throw GenotypeError("vertex " + std::to_string(vertex) + " has predecessor " +
                          std::to_string(entries_[k].predecessor) + " which is not an earlier vertex");
    }
  }
}

const GenotypeEntry& Genotype::vertex(std::size_t i) const {
  if (i == 0 || i > entries_.size()) throw std::out_of_range("genotype vertex " + std::to_string(i));
  return entries_[i - 1];
}

std::size_t Genotype::count(Activation f) const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.activation == f ? 1 : 0;
  return n;
}

std::string format_genotype(const Genotype& g) {
  std::ostringstream os;
  os << "vertices=" << g.num_vertices() << '\n';
  for (std::size_t i = 1; i <= g.num_vertices(); ++i) {
    os << 'v' << i << " pred=" << g.vertex(i).predecessor << " act=" << to_string(g.vertex(i).activation) << '\n';
  }
  return os.str();
}

namespace {

std::size_t parse_count(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(text, &used);
  } catch (const std::exception&) {
    throw GenotypeError(context + ": expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw GenotypeError(context + ": expected a number, got '" + text + "'");
  return value;
}

std::string after_prefix(const std::string& token, std::string_view prefix, const std::string& context) {
  if (token.rfind(prefix, 0) != 0) {
    throw GenotypeError(context + ": expected '" + std::string(prefix) + "...', got '" + token + "'");
  }
  return token.substr(prefix.size());
}

}  // namespace

Genotype parse_genotype(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw GenotypeError("empty genotype text");
  const std::size_t n = parse_count(after_prefix(lines[0], "vertices=", "line 1"), "line 1");
  if (lines.size() != n + 1) {
    throw GenotypeError("declared " + std::to_string(n) + " vertices but found " +
                        std::to_string(lines.size() - 1) + " vertex lines");
  }
  std::vector<GenotypeEntry> entries;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::string ctx = "vertex line " + std::to_string(i);
    std::istringstream ls(lines[i]);
    std::string vtok, ptok, atok, extra;
    ls >> vtok >> ptok >> atok;
    if (atok.empty() || (ls >> extra)) throw GenotypeError(ctx + ": expected 'v<i> pred=<j> act=<name>'");
    if (parse_count(after_prefix(vtok, "v", ctx), ctx) != i) {
      throw GenotypeError(ctx + ": vertices must be listed in order, expected v" + std::to_string(i));
    }
    const std::size_t pred = parse_count(after_prefix(ptok, "pred=", ctx), ctx);
    Activation act;
    try {
      act = parse_activation(after_prefix(atok, "act=", ctx));
    } catch (const std::invalid_argument& e) {
      throw GenotypeError(ctx + ": " + e.what());
    }
    entries.push_back({pred, act});
  }
  return Genotype(std::move(entries));
}

void save_genotype(const std::filesystem::path& path, const Genotype& g) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write genotype file " + path.string());
  os << format_genotype(g);
}

Genotype load_genotype(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read genotype file " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_genotype(buf.str());
}

std::string genotype_to_dot(const Genotype& g, std::string_view graph_name) {
  std::ostringstream os;
  os << "digraph " << graph_name << " {\n";
  os << "  rankdir=LR;\n";
  os << "  node [shape=circle];\n";
  os << "  v0 [label=\"x_t,h_{t-1}\", shape=box];\n";
  for (std::size_t i = 1; i <= g.num_vertices(); ++i) os << "  v" << i << " [label=\"" << i << "\"];\n";
  for (std::size_t i = 1; i <= g.num_vertices(); ++i) {
    os << "  v" << g.vertex(i).predecessor << " -> v" << i << " [label=\"" << to_string(g.vertex(i).activation)
       << "\"];\n";
  }
  os << "}\n";
  return os.str();
}

namespace presets {

namespace {
using A = Activation;
Genotype chain(std::initializer_list<std::pair<std::size_t, A>> spec) {
  std::vector<GenotypeEntry> entries;
  for (const auto& [pred, act] : spec) entries.push_back({pred, act});
  return Genotype(std::move(entries));
}
}  // namespace

Genotype vanilla() {
  // Two Sigmoids, alternating ReLU/Sigmoid up to vertex 5, an Identity, then
  // an Identity and a ReLU both reading vertex 6.
  return chain({{0, A::Sigmoid}, {1, A::Sigmoid}, {2, A::ReLU}, {3, A::Sigmoid},
                {4, A::ReLU}, {5, A::Identity}, {6, A::Identity}, {6, A::ReLU}});
}

Genotype sigmoid_weighting() {
  // ReLU, Sigmoid, Identity, Identity; vertex 4 then fans out to three
  // Identity vertices and one Sigmoid vertex.
  return chain({{0, A::ReLU}, {1, A::Sigmoid}, {2, A::Identity}, {3, A::Identity},
                {4, A::Identity}, {4, A::Identity}, {4, A::Identity}, {4, A::Sigmoid}});
}

Genotype directional_weight_sharing() {
  return chain({{0, A::ReLU}, {1, A::Sigmoid}, {2, A::ReLU}, {3, A::ReLU},
                {4, A::ReLU}, {5, A::ReLU}, {6, A::ReLU}, {7, A::Sigmoid}});
}

bool exists(std::string_view name) {
  return name == "vanilla" || name == "sigmoid_weighting" || name == "dws" || name == "directional_weight_sharing";
}

Genotype by_name(std::string_view name) {
  if (name == "vanilla") return vanilla();
  if (name == "sigmoid_weighting") return sigmoid_weighting();
  if (name == "dws" || name == "directional_weight_sharing") return directional_weight_sharing();
  throw GenotypeError("unknown preset genotype '" + std::string(name) + "'");
}

}  // namespace presets
}  // namespace drn
