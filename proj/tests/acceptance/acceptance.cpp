// Acceptance suite. One PASS/FAIL line per criterion.
//
//   acceptance                      run every criterion
//   acceptance --criterion <name>   run one; exit 0 pass, 1 fail, 77 skipped
//
// smoke_learning needs the CIFAR-10 binary release under DARTSRENET_DATA and
// is skipped (77) otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "drn/data/augment.hpp"
#include "drn/numerics/gradcheck.hpp"
#include "drn/search/search.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace drn;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- gradient suite ---------------------------------------------------------

constexpr double kTol64 = 1e-4;
constexpr double kTol32 = 1e-2;

// Loss builders receive the parameter list and work at either precision.
struct GradCase {
  std::string name;
  std::vector<Shape> shapes;
  std::function<Tensor<double>(const std::vector<Tensor<double>>&)> loss64;
  std::function<Tensor<float>(const std::vector<Tensor<float>>&)> loss32;
};

#define DRN_CASE(name, shapes, ...)                                                                  \
  GradCase {                                                                                          \
    name, shapes, [](const std::vector<Tensor<double>>& p) -> Tensor<double> { using T [[maybe_unused]] = double; __VA_ARGS__ }, \
        [](const std::vector<Tensor<float>>& p) -> Tensor<float> { using T [[maybe_unused]] = float; __VA_ARGS__ }            \
  }

// Fixed pseudo-random projection so each output entry weighs differently.
template <typename T>
Tensor<T> project(const Tensor<T>& y) {
  Tensor<T> r(y.shape());
  auto d = r.mutable_data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<T>(std::sin(0.7 * static_cast<double>(i) + 0.3));
  return sum(mul(y, r));
}

std::vector<GradCase> primitive_cases() {
  std::vector<GradCase> c;
  c.push_back(DRN_CASE("matmul", (std::vector<Shape>{{3, 4}, {4, 5}}), return project(matmul(p[0], p[1]));));
  c.push_back(DRN_CASE("add/sub/mul/scale", (std::vector<Shape>{{3, 4}, {3, 4}}),
                       return project(scale(sub(mul(p[0], p[1]), add(p[0], p[1])), T(1.5)));));
  c.push_back(DRN_CASE("add_bias", (std::vector<Shape>{{3, 4}, {4}}), return project(add_bias(p[0], p[1]));));
  c.push_back(DRN_CASE("average", (std::vector<Shape>{{2, 3}, {2, 3}}),
                       return project(average(std::vector<Tensor<T>>{p[0], mul(p[1], p[0])}));));
  c.push_back(DRN_CASE("sigmoid", (std::vector<Shape>{{4, 5}}), return project(sigmoid(p[0]));));
  c.push_back(DRN_CASE("tanh", (std::vector<Shape>{{4, 5}}), return project(tanh(p[0]));));
  c.push_back(DRN_CASE("relu", (std::vector<Shape>{{4, 5}}), return project(relu(p[0]));));
  c.push_back(DRN_CASE("identity", (std::vector<Shape>{{4, 5}}),
                       return project(activation(p[0], Activation::Identity));));
  c.push_back(DRN_CASE("softmax", (std::vector<Shape>{{3, 6}}), return project(softmax(p[0], 1));));
  c.push_back(DRN_CASE("sum/mean", (std::vector<Shape>{{3, 6}}), return add(sum(mul(p[0], p[0])), mean(p[0]));));
  c.push_back(DRN_CASE("cross_entropy", (std::vector<Shape>{{5, 10}}), {
    static const std::vector<int> labels{0, 9, 3, 3, 7};
    return cross_entropy(p[0], std::span<const int>(labels));
  }));
  c.push_back(DRN_CASE("conv2d", (std::vector<Shape>{{2, 3, 6, 5}, {4, 3, 3, 3}, {4}}),
                       return project(conv2d(p[0], p[1], p[2], 1, 1));));
  c.push_back(DRN_CASE("conv2d strided", (std::vector<Shape>{{1, 2, 7, 7}, {3, 2, 3, 3}, {3}}),
                       return project(conv2d(p[0], p[1], p[2], 2, 0));));
  c.push_back(DRN_CASE("reshape/concat/slice", (std::vector<Shape>{{4, 3}, {4, 2}}),
                       return project(reshape(slice_cols(concat_cols(p[0], p[1]), 1, 4), {2, 6}));));
  c.push_back(DRN_CASE("concat_rows", (std::vector<Shape>{{2, 3}, {3, 3}}),
                       return project(concat_rows(std::vector<Tensor<T>>{p[0], p[1]}));));
  for (Activation f : kAllActivations) {
    GradCase g = DRN_CASE("gated_update", (std::vector<Shape>{{3, 8}, {3, 4}}), return p[0];);
    g.name = "gated_update " + std::string(to_string(f));
    g.loss64 = [f](const std::vector<Tensor<double>>& p) { return project(gated_update(p[0], p[1], f)); };
    g.loss32 = [f](const std::vector<Tensor<float>>& p) { return project(gated_update(p[0], p[1], f)); };
    c.push_back(g);
  }
  c.push_back(DRN_CASE("mixed_update", (std::vector<Shape>{{6, 8}, {2, 4}, {12}}),
                       return project(mixed_update(p[0], p[1], reshape(softmax(p[2], 0), {3, 4})));));
  c.push_back(DRN_CASE("nchw_to_nhwc", (std::vector<Shape>{{2, 3, 2, 2}}), return project(nchw_to_nhwc(p[0]));));
  c.push_back(DRN_CASE("extract_patches/grid_scale", (std::vector<Shape>{{2, 3, 5, 2}, {2, 3}}),
                       return project(grid_scale(extract_patches(p[0], 2, 2), sigmoid(p[1])));));
  c.push_back(DRN_CASE("grid_transpose/grid_column", (std::vector<Shape>{{2, 3, 4, 2}}),
                       return project(grid_column(grid_transpose(p[0]), 2));));
  c.push_back(DRN_CASE("assemble_bidirectional", (std::vector<Shape>{{4, 2}, {4, 2}, {4, 3}, {4, 3}}),
                       return project(assemble_bidirectional(std::vector<Tensor<T>>{p[0], p[1]},
                                                             std::vector<Tensor<T>>{p[2], p[3]}, 2, 2));));
  return c;
}

struct GradStats {
  double worst64 = 0.0;
  double worst32 = 0.0;
  std::size_t probes = 0;
  std::size_t resolved = 0;
  bool agree = true;
};

void check_case(const GradCase& c, std::uint64_t seed, GradStats& stats, std::ostream& log) {
  Rng rng(seed);
  std::vector<NamedTensor<double>> p64;
  std::vector<NamedTensor<float>> p32;
  for (std::size_t k = 0; k < c.shapes.size(); ++k) {
    auto t = uniform_parameter<double>(c.shapes[k], 1.5, rng);
    // Keep probes clear of the ReLU kink.
    for (auto& v : t.mutable_data())
      if (std::abs(v) < 0.05) v = v < 0 ? -0.3 : 0.3;
    p64.push_back({"p" + std::to_string(k), t});
    p32.push_back({"p" + std::to_string(k), zero_parameter<float>(c.shapes[k])});
  }
  copy_values(p64, p32);
  std::vector<Tensor<double>> t64 = tensors_of(p64);
  std::vector<Tensor<float>> t32 = tensors_of(p32);
  GradCheckOptions opt;
  opt.probes = 20;
  opt.seed = seed;
  const auto r64 = check_gradients<double>([&] { return c.loss64(t64); }, p64, opt);
  const auto r32 = compare_to_differences([&] { return c.loss32(t32); }, p32, r64);
  stats.probes += r64.probes.size();
  stats.resolved += r64.resolved_count(kTol64);
  stats.agree = stats.agree && r64.agrees(kTol64) && r32.agrees(kTol32) && r64.probes.size() >= 20;
  stats.worst64 = std::max(stats.worst64, r64.max_resolved_rel_error(kTol64));
  stats.worst32 = std::max(stats.worst32, r32.max_resolved_rel_error(kTol32));
  log << "  " << std::left << std::setw(30) << c.name << " 64-bit " << fmt(r64.max_rel_error) << "  32-bit "
      << fmt(r32.max_rel_error) << '\n';
}

std::size_t tiny_tensor_count(const NetworkConfig& cfg) {
  CellSource<float> src;
  src.genotype = presets::vanilla();
  return Network<float>(cfg, src, 1).named_parameters().size();
}

Outcome gradient_suite(std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  GradStats prim;
  std::uint64_t seed = 100;
  for (const auto& c : primitive_cases()) check_case(c, ++seed, prim, log);

  // Composed tiny network: small enough that gradients reach every tensor.
  const auto data = fixture::random_dataset(4, 9);
  const auto idx = iota_indices(4);
  const auto stats = NormStats::compute(data);
  const auto b64 = make_batch<double>(data, idx, stats);
  const auto b32 = make_batch<float>(data, idx, stats);
  auto model_check = [&](const NetworkConfig& cfg, std::size_t probes, const std::string& prefix_filter,
                         std::uint64_t seed, double weight_scale) {
    CellSource<double> src64;
    src64.genotype = presets::vanilla();
    CellSource<float> src32;
    src32.genotype = src64.genotype;
    Network<double> net64(cfg, src64, 1);
    Network<float> net32(cfg, src32, 2);
    auto named64 = net64.named_parameters();
    auto named32 = net32.named_parameters();
    for (auto& p : named64)
      for (auto& v : p.tensor.mutable_data()) v *= weight_scale;
    copy_values(named64, named32);
    if (!prefix_filter.empty()) {
      auto keep = [&](const auto& p) { return p.name.rfind("head", 0) != 0 && p.name.rfind(prefix_filter, 0) != 0; };
      std::erase_if(named64, keep);
      std::erase_if(named32, keep);
    }
    GradCheckOptions opt;
    opt.probes = probes;
    opt.seed = seed;
    const auto r64 = check_gradients<double>(
        [&] { return cross_entropy(net64.forward(b64.images), std::span<const int>(b64.labels)); }, named64, opt);
    const auto r32 = compare_to_differences(
        [&] { return cross_entropy(net32.forward(b32.images), std::span<const int>(b32.labels)); }, named32, r64);
    return std::make_pair(r64, r32);
  };
  auto report = [&](const std::string& label, const GradCheckResult& r64, const GradCheckResult& r32) {
    std::map<std::string, int> touched;
    for (const auto& p : r64.probes) ++touched[p.tensor];
    log << "  " << label << ": " << r64.probes.size() << " probes over " << touched.size() << " tensors, "
        << r64.resolved_count(kTol64) << " above 64-bit resolution, " << r32.resolved_count(kTol32)
        << " above 32-bit resolution\n";
    for (std::size_t k = 0; k < r64.probes.size(); ++k) {
      const auto& p = r64.probes[k];
      log << "    " << std::left << std::setw(20) << p.tensor << " analytic " << std::setw(10) << fmt(p.analytic)
          << " numeric " << std::setw(10) << fmt(p.numeric) << " resolution " << std::setw(9) << fmt(p.resolution)
          << (p.resolved(kTol64) ? " rel " + fmt(p.rel_error) : std::string(" unresolved, |diff| ") + fmt(p.abs_error()))
          << "  32-bit rel " << fmt(r32.probes[k].rel_error)
          << (p.agrees(kTol64) && r32.probes[k].agrees(kTol32) ? "" : "  MISMATCH") << '\n';
    }
  };

  // At its own init the tiny network loses gradient too (stem grads near
  // 1e-17); weights scaled by 6 carry it through every layer.
  NetworkConfig tiny = fixture::tiny_network(8);
  const auto [t64, t32] = model_check(tiny, 2 * tiny_tensor_count(tiny), "", 4, 6.0);
  report("tiny model x6 weights, every tensor twice", t64, t32);

  // Default network. A uniform draw lands mostly in the lower layers, where
  // gradients at init sit below what differencing can resolve, so a second
  // draw covers the tensors that carry gradient: the last vertical sweep and the head.
  const NetworkConfig full;
  const auto [u64, u32] = model_check(full, 30, "", 3, 1.0);
  report("default model, uniform over tensors", u64, u32);
  const auto [h64, h32] = model_check(full, 60, "renet3.v", 5, 1.0);
  report("default model, renet3.v and head", h64, h32);

  const double secs = seconds_since(t0);
  auto all_agree = [](const GradCheckResult& a, const GradCheckResult& b) { return a.agrees(kTol64) && b.agrees(kTol32); };
  const std::size_t resolved = h64.resolved_count(kTol64);
  const bool tiny_ok = all_agree(t64, t32) && 2 * t64.resolved_count(kTol64) >= t64.probes.size();
  const bool model_ok = all_agree(u64, u32) && all_agree(h64, h32) && resolved >= 20;
  const double worst64 = std::max({t64.max_resolved_rel_error(kTol64), u64.max_resolved_rel_error(kTol64),
                                   h64.max_resolved_rel_error(kTol64)});
  const double worst32 = std::max({t32.max_resolved_rel_error(kTol32), u32.max_resolved_rel_error(kTol32),
                                   h32.max_resolved_rel_error(kTol32)});
  const bool ok = prim.agree && tiny_ok && model_ok && secs < 300.0;
  return verdict(ok, std::to_string(primitive_cases().size()) + " primitives x 20 probes: max rel err 64-bit " +
                         fmt(prim.worst64) + ", 32-bit " + fmt(prim.worst32) + "; tiny model " +
                         std::to_string(t64.probes.size()) + " probes (" + std::to_string(t64.resolved_count(kTol64)) +
                         " resolved), default model 90 probes (" + std::to_string(resolved) +
                         "/60 gradient-carrying probes resolved): max rel err 64-bit " +
                         fmt(worst64) + ", 32-bit " + fmt(worst32) + ", unresolved probes agree to resolution: " +
                         (tiny_ok && model_ok ? "yes" : "no") + "; " + fmt(secs) + " s (limits 1e-4 / 1e-2 / 300 s)");
}

// ---- relaxation vs discrete -----------------------------------------------------

Outcome relaxation_oracle(std::ostream& log) {
  Rng rng(21);
  const std::size_t n = 8, in = 5, hidden = 6, batch = 3;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto w = CellWeights<double>::init(in, hidden, n, rng);
    auto alpha = AlphaTable<double>::random(n, 1.0, rng);
    for (std::size_t i = 1; i <= n; ++i) alpha.set(rng() % i, i, kAllActivations[rng() % kNumActivations], 1e4);
    const Genotype g = derive_genotype(alpha);
    auto sm = darts_initial_state<double>(batch, hidden, n), sd = sm;
    for (int t = 0; t < 4; ++t) {
      auto x = uniform_parameter<double>(Shape{batch, in}, 2.0, rng);
      x.set_requires_grad(false);
      sm = mixed_cell_forward(alpha, w, x, sm);
      sd = genotype_cell_forward(g, w, x, sd);
      for (std::size_t k = 0; k < sm.output.numel(); ++k)
        worst = std::max(worst, std::abs(sm.output.data()[k] - sd.output.data()[k]));
    }
  }
  log << "  50 saturated tables, 4 steps each: max |mixed - discrete| = " << fmt(worst) << '\n';

  std::size_t mismatches = 0;
  std::uniform_int_distribution<int> coarse(-2, 2);
  std::normal_distribution<double> fine(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    AlphaTable<double> a(3);
    std::vector<oracle::Vec> rows;
    for (std::size_t i = 1; i <= 3; ++i) {
      oracle::Vec row;
      for (std::size_t j = 0; j < i; ++j)
        for (Activation f : kAllActivations) {
          // Half the trials on a coarse grid so ties are exercised.
          const double v = trial % 2 ? fine(rng) : static_cast<double>(coarse(rng));
          a.set(j, i, f, v);
          row.push_back(v);
        }
      rows.push_back(row);
    }
    const auto expect = oracle::derive(rows);
    const Genotype got = derive_genotype(a);
    for (std::size_t i = 1; i <= 3; ++i) {
      if (got.vertex(i).predecessor != expect[i - 1].first ||
          static_cast<int>(got.vertex(i).activation) != expect[i - 1].second)
        ++mismatches;
    }
  }
  log << "  1000 random 3-vertex tables: " << mismatches << " derivation mismatches\n";
  return verdict(worst <= 1e-4 && mismatches == 0,
                 "saturated max diff " + fmt(worst) + " (<= 1e-4); derive mismatches " + std::to_string(mismatches) +
                     "/1000 tables");
}

// ---- cell oracle ---------------------------------------------------------------------

Outcome cell_oracle(std::ostream& log) {
  const std::size_t in = 12, hidden = 16, batch = 2;
  double worst = 0.0;
  std::size_t inputs = 0;
  for (const char* name : {"vanilla", "sigmoid_weighting", "dws"}) {
    const Genotype g = presets::by_name(name);
    std::vector<std::size_t> preds;
    std::vector<int> acts;
    for (const auto& e : g.entries()) {
      preds.push_back(e.predecessor);
      acts.push_back(static_cast<int>(e.activation));
    }
    Rng rng(std::hash<std::string>{}(name) % 1000);
    double local = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      auto w = CellWeights<float>::init(in, hidden, g.num_vertices(), rng);
      GenotypeCell<float> cell(g, w);
      const auto ow = oracle::weights_of(w);
      auto s = cell.initial_state(batch);
      auto o = oracle::zero_state(g.num_vertices(), batch, hidden);
      for (int t = 0; t < 3; ++t) {
        auto x = uniform_parameter<float>(Shape{batch, in}, 2.0, rng);
        x.set_requires_grad(false);
        s = cell.step(x, s);
        o = oracle::genotype_cell(preds, acts, ow, oracle::values(x), o, batch);
        for (std::size_t k = 0; k < o.output.size(); ++k)
          local = std::max(local, std::abs(static_cast<double>(s.output.data()[k]) - o.output[k]));
      }
      ++inputs;
    }
    log << "  " << name << ": 100 random inputs, max |cell - oracle| = " << fmt(local) << '\n';
    worst = std::max(worst, local);
  }
  return verdict(worst <= 1e-5, std::to_string(inputs) + " inputs over 3 presets (32-bit cells vs 64-bit oracle): max diff " +
                                    fmt(worst) + " (<= 1e-5)");
}

// ---- range invariants --------------------------------------------------------------------

Outcome range_invariants(std::ostream& log) {
  Rng rng(31);
  std::size_t sequences = 0, sigmoid_bad = 0, relu_bad = 0, convex_bad = 0, recompute_bad = 0, checked = 0;
  const std::size_t in = 6, hidden = 8, batch = 10, steps = 6;
  const std::vector<Genotype> genotypes{presets::vanilla(), presets::sigmoid_weighting(),
                                        presets::directional_weight_sharing()};
  for (int round = 0; round < 100; ++round) {
    const Genotype& g = genotypes[static_cast<std::size_t>(round) % genotypes.size()];
    // Wide weights push the gates and candidates into saturation.
    CellWeights<double> w{in, hidden, {}};
    w.matrices.push_back(uniform_parameter<double>(Shape{in + hidden, 2 * hidden}, 2.0, rng));
    for (std::size_t i = 1; i <= g.num_vertices(); ++i)
      w.matrices.push_back(uniform_parameter<double>(Shape{hidden, 2 * hidden}, 2.0, rng));
    auto s = darts_initial_state<double>(batch, hidden, g.num_vertices());
    for (std::size_t t = 0; t < steps; ++t) {
      auto x = uniform_parameter<double>(Shape{batch, in}, 3.0, rng);
      x.set_requires_grad(false);
      auto next = genotype_cell_forward(g, w, x, s);
      for (std::size_t i = 1; i <= g.num_vertices(); ++i) {
        const auto& e = g.vertex(i);
        const auto v = vertex_step(next.slots[e.predecessor], s.slots[i], w.matrices[i], e.activation);
        for (std::size_t k = 0; k < batch * hidden; ++k) {
          const double h = next.slots[i].data()[k], prev = s.slots[i].data()[k], cand = v.candidate.data()[k];
          ++checked;
          if (v.state.data()[k] != h) ++recompute_bad;
          if (h < std::min(prev, cand) - 1e-12 || h > std::max(prev, cand) + 1e-12) ++convex_bad;
          if (e.activation == Activation::Sigmoid && (h < 0.0 || h > 1.0)) ++sigmoid_bad;
          if (e.activation == Activation::ReLU && h < 0.0) ++relu_bad;
        }
      }
      s = next;
    }
    sequences += batch;
  }
  log << "  " << sequences << " sequences x " << steps << " steps, " << checked << " vertex coordinates checked\n";
  return verdict(sigmoid_bad + relu_bad + convex_bad + recompute_bad == 0 && sequences >= 1000,
                 std::to_string(sequences) + " sequences: sigmoid out of [0,1] " + std::to_string(sigmoid_bad) +
                     ", relu negative " + std::to_string(relu_bad) + ", non-convex " + std::to_string(convex_bad));
}

// ---- shape law -----------------------------------------------------------------------

Outcome shape_law(std::ostream& log) {
  bool ok = true;
  std::string failures;
  struct Variant {
    const char* name;
    CellKind cell;
    ReNetVariant variant;
  };
  const Variant variants[] = {{"vanilla", CellKind::Genotype, ReNetVariant::Vanilla},
                              {"sigmoid_weighting", CellKind::Genotype, ReNetVariant::SigmoidWeighting},
                              {"dws", CellKind::Genotype, ReNetVariant::DirectionalWeightSharing},
                              {"gru", CellKind::Gru, ReNetVariant::Vanilla},
                              {"lstm", CellKind::Lstm, ReNetVariant::Vanilla}};
  const std::size_t n = 2;
  Rng rng(41);
  auto images = uniform_parameter<float>(Shape{n, 3, 32, 32}, 1.0, rng);
  images.set_requires_grad(false);
  for (const auto& v : variants) {
    NetworkConfig cfg;
    cfg.set_cell(v.cell);
    cfg.set_variant(v.variant);
    CellSource<float> src;
    src.genotype = presets::vanilla();
    Network<float> net(cfg, src, 1);
    ForwardTrace trace;
    const auto logits = classify(net, images);
    net.forward(images, &trace);
    const std::vector<Shape> expect{{n, 16, 16, 512}, {n, 8, 8, 512}, {n, 4, 4, 512}};
    const bool good = trace.renet_output == expect && logits.shape() == Shape{n, 10} &&
                      trace.stem_output == Shape{n, 32, 32, 64};
    log << "  " << v.name << ": stem " << to_string(trace.stem_output) << ", renet " << to_string(trace.renet_output[0])
        << " " << to_string(trace.renet_output[1]) << " " << to_string(trace.renet_output[2]) << ", logits "
        << to_string(logits.shape()) << '\n';
    if (!good) failures += std::string(" ") + v.name;
    ok = ok && good;
  }
  return verdict(ok, ok ? "32x32x3 -> 16x16 -> 8x8 -> 4x4 grids, 512 channels, logits Nx10 for 5 model kinds"
                        : "shape mismatch in" + failures);
}

// ---- parameter ordering -------------------------------------------------------------

Outcome parameter_ordering(std::ostream& log) {
  auto count = [](CellKind kind, ReNetVariant variant) {
    NetworkConfig cfg;
    cfg.set_cell(kind);
    cfg.set_variant(variant);
    CellSource<float> src;
    src.genotype = presets::vanilla();
    return count_parameters(Network<float>(cfg, src, 1));
  };
  const auto vanilla = count(CellKind::Genotype, ReNetVariant::Vanilla);
  const auto sw = count(CellKind::Genotype, ReNetVariant::SigmoidWeighting);
  const auto dws = count(CellKind::Genotype, ReNetVariant::DirectionalWeightSharing);
  const auto gru = count(CellKind::Gru, ReNetVariant::Vanilla);
  const auto lstm = count(CellKind::Lstm, ReNetVariant::Vanilla);
  auto row = [&](const char* name, const ParameterReport& r) {
    log << "  " << std::left << std::setw(18) << name << " total " << std::setw(10) << r.total << " ("
        << fmt(r.millions()) << " M)  rnn " << r.rnn << '\n';
  };
  row("dws", dws);
  row("gru", gru);
  row("lstm", lstm);
  row("vanilla", vanilla);
  row("sigmoid_weighting", sw);
  const bool order = dws.total < gru.total && gru.total < lstm.total && lstm.total < vanilla.total;
  const bool half = 2 * dws.rnn == vanilla.rnn;
  return verdict(order && half, "DWS " + fmt(dws.millions()) + "M < GRU " + fmt(gru.millions()) + "M < LSTM " +
                                    fmt(lstm.millions()) + "M < Vanilla " + fmt(vanilla.millions()) +
                                    "M: " + (order ? "yes" : "no") + "; DWS rnn " + std::to_string(dws.rnn) +
                                    " x 2 == vanilla rnn " + std::to_string(vanilla.rnn) + ": " + (half ? "yes" : "no"));
}

// ---- bilevel protocol ------------------------------------------------------------------

Outcome bilevel_protocol(std::ostream& log) {
  SearchConfig cfg;
  cfg.batch_size = 4;
  cfg.seed = 5;
  SearchState state(fixture::tiny_network(), cfg);
  state.record_steps = true;
  const bool partition = optimizers_partition(state);
  const auto data = fixture::random_dataset(64, 6);
  const auto split = make_search_split(data.size(), 0.5, cfg.seed);
  const auto stats = NormStats::compute(data);
  std::size_t batches = 0;
  for (std::size_t epoch = 0; batches < 100; ++epoch) {
    const auto tb = shuffled_batches(split.train_cs, cfg.batch_size, cfg.seed, epoch);
    const auto vb = shuffled_batches(split.val_cs, cfg.batch_size, cfg.seed + 1, epoch);
    for (std::size_t b = 0; b < tb.size() && batches < 100; ++b, ++batches) {
      search_step(state, make_batch<float>(data, tb[b], stats, &cfg.augment, cfg.seed, epoch),
                  make_batch<float>(data, vb[b % vb.size()], stats));
    }
  }
  bool alternating = state.step_log.size() == 200;
  for (std::size_t i = 0; alternating && i < state.step_log.size(); ++i)
    alternating = state.step_log[i] == (i % 2 == 0 ? StepKind::Alpha : StepKind::Weight);
  log << "  100 paired batches: " << state.alpha_steps << " alpha steps, " << state.weight_steps
      << " weight steps, strictly alternating: " << (alternating ? "yes" : "no") << '\n';

  // Two full searches from the same seed must agree bit for bit.
  SearchConfig run;
  run.batch_size = 4;
  run.max_epochs = 3;
  run.max_batches_per_epoch = 4;
  run.seed = 7;
  const auto r1 = run_search(fixture::tiny_network(), run, data);
  const auto r2 = run_search(fixture::tiny_network(), run, data);
  bool same = r1.genotype == r2.genotype && r1.epochs.size() == r2.epochs.size();
  for (std::size_t e = 0; same && e < r1.epochs.size(); ++e)
    same = std::memcmp(&r1.epochs[e].val_loss, &r2.epochs[e].val_loss, sizeof(double)) == 0 &&
           std::memcmp(&r1.epochs[e].train_loss, &r2.epochs[e].train_loss, sizeof(double)) == 0;
  for (std::size_t i = 1; same && i <= r1.best_alpha.num_vertices(); ++i) {
    const auto a = r1.best_alpha.vertex(i).data(), b = r2.best_alpha.vertex(i).data();
    same = std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
  }
  log << "  repeated seeded search identical: " << (same ? "yes" : "no") << '\n';
  const bool ratio = state.alpha_steps == 100 && state.weight_steps == 100;
  return verdict(partition && alternating && ratio && same,
                 std::string("step ratio ") + std::to_string(state.alpha_steps) + ":" +
                     std::to_string(state.weight_steps) + ", optimizer sets disjoint and covering: " +
                     (partition ? "yes" : "no") + ", bit-reproducible: " + (same ? "yes" : "no"));
}

// ---- smoke learning ----------------------------------------------------------------------

Outcome smoke_learning(std::ostream& log) {
  const char* env = std::getenv("DARTSRENET_DATA");
  const auto dir = env ? find_cifar10(env) : std::filesystem::path();
  if (dir.empty()) {
    return {Status::Skip, "CIFAR-10 binary batches not found under DARTSRENET_DATA; criterion not run"};
  }
  const auto t0 = std::chrono::steady_clock::now();
  const Cifar10 full = load_cifar10(dir);
  const auto first = iota_indices(2000);
  const Dataset train = full.train.subset(first);
  RetrainConfig cfg;
  cfg.max_epochs = 10;
  cfg.patience = 10;
  cfg.validation_count = 200;
  cfg.test_limit = 2000;
  std::string detail;
  bool ok = true;
  for (const char* cell : {"dws", "gru"}) {
    NetworkConfig net;
    CellSource<float> src;
    if (std::string(cell) == "gru") {
      net.set_cell(CellKind::Gru);
    } else {
      net.set_variant(ReNetVariant::DirectionalWeightSharing);
      src.genotype = presets::directional_weight_sharing();
    }
    const auto r = retrain(net, src, cfg, train, full.test, [&](const std::string& l) { log << "  " << cell << ": " << l << '\n'; });
    ok = ok && r.test_accuracy > 0.25;
    detail += std::string(cell) + " test accuracy " + fmt(100 * r.test_accuracy) + "% ";
  }
  const double secs = seconds_since(t0);
  return verdict(ok, detail + "(> 25%), " + fmt(secs / 60) + " min");
}

// ---- data pipeline -------------------------------------------------------------------------

void write_synthetic_batch(const std::filesystem::path& path, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<char> buf(kCifarRecordsPerBatch * kCifarRecordBytes);
  for (std::size_t r = 0; r < kCifarRecordsPerBatch; ++r) {
    char* rec = buf.data() + r * kCifarRecordBytes;
    rec[0] = static_cast<char>(rng() % kNumClasses);
    for (std::size_t i = 1; i < kCifarRecordBytes; i += 8) {
      const std::uint64_t v = rng();
      std::memcpy(rec + i, &v, std::min<std::size_t>(8, kCifarRecordBytes - i));
    }
  }
  std::ofstream(path, std::ios::binary).write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

Outcome data_pipeline(std::ostream& log) {
  const auto root = std::filesystem::temp_directory_path() / "drn_acceptance_cifar";
  std::filesystem::remove_all(root);
  const auto dir = root / "cifar-10-batches-bin";
  std::filesystem::create_directories(dir);
  for (int b = 1; b <= 5; ++b) write_synthetic_batch(dir / ("data_batch_" + std::to_string(b) + ".bin"), b);
  write_synthetic_batch(dir / "test_batch.bin", 99);
  bool sizes_ok = true;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    sizes_ok = sizes_ok && std::filesystem::file_size(e.path()) == 30730000u;

  bool counts_ok = true;
  std::string detail;
  auto check_corpus = [&](const std::filesystem::path& where, const std::string& label) {
    const Cifar10 c = load_cifar10(where);
    const bool counts = c.train.size() == 50000 && c.test.size() == 10000;
    const NormStats stats = NormStats::compute(c.train);
    double worst_mean = 0, worst_std = 0;
    std::vector<float> img(kImageBytes);
    std::array<double, 3> sum{}, sq{};
    for (std::size_t i = 0; i < c.train.size(); ++i) {
      normalize_image(c.train.image(i), stats, img);
      for (std::size_t ch = 0; ch < 3; ++ch)
        for (std::size_t p = 0; p < 1024; ++p) {
          const double v = img[ch * 1024 + p];
          sum[ch] += v;
          sq[ch] += v * v;
        }
    }
    const double n = static_cast<double>(c.train.size()) * 1024;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double m = sum[ch] / n;
      worst_mean = std::max(worst_mean, std::abs(m));
      worst_std = std::max(worst_std, std::abs(1.0 - std::sqrt(sq[ch] / n - m * m)));
    }
    log << "  " << label << ": " << c.train.size() << " train / " << c.test.size()
        << " test; normalized |mean| " << fmt(worst_mean) << ", |1 - std| " << fmt(worst_std) << '\n';
    counts_ok = counts_ok && counts && worst_mean < 1e-3 && worst_std < 1e-3;
    detail += label + " " + std::to_string(c.train.size()) + "/" + std::to_string(c.test.size()) + ", stats dev " +
              fmt(std::max(worst_mean, worst_std)) + "; ";
  };
  check_corpus(root, "synthetic");
  if (const char* env = std::getenv("DARTSRENET_DATA")) {
    const auto real = find_cifar10(env);
    if (!real.empty()) check_corpus(real, "CIFAR-10");
  }
  std::filesystem::remove_all(root);

  // Augmentation identities on a normalized-looking ramp image.
  std::vector<float> img(kImageBytes);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(std::sin(0.1 * static_cast<double>(i)));
  const auto orig = img;
  ImageView v{img, 3, 32, 32};
  hflip(v);
  const bool flip_changes = img != orig;
  hflip(v);
  const bool involution = img == orig && flip_changes;
  cutout(v, 0, 5, 7);
  const bool cutout_identity = img == orig;
  pad_crop(v, 4, 4, 4);
  const bool crop_identity = img == orig;
  AugmentConfig off;
  off.hflip_prob = 0.0;
  off.crop_pad = 0;
  off.cutout_size = 0;
  auto rng = item_rng(1, 0, 0);
  augment(v, off, rng);
  const bool degenerate = img == orig;
  log << "  flip twice = identity: " << involution << ", cutout 0: " << cutout_identity
      << ", centred crop: " << crop_identity << ", all-off augment: " << degenerate << '\n';
  const bool aug_ok = involution && cutout_identity && crop_identity && degenerate;
  return verdict(sizes_ok && counts_ok && aug_ok,
                 detail + "batch files 30,730,000 bytes: " + (sizes_ok ? "yes" : "no") +
                     "; augmentation identities: " + (aug_ok ? "hold" : "broken"));
}

using Criterion = Outcome (*)(std::ostream&);

const std::vector<std::pair<std::string, Criterion>>& criteria() {
  static const std::vector<std::pair<std::string, Criterion>> all = {
      {"gradient_suite", gradient_suite},       {"relaxation_oracle", relaxation_oracle},
      {"cell_oracle", cell_oracle},             {"range_invariants", range_invariants},
      {"shape_law", shape_law},                 {"parameter_ordering", parameter_ordering},
      {"bilevel_protocol", bilevel_protocol},   {"smoke_learning", smoke_learning},
      {"data_pipeline", data_pipeline},
  };
  return all;
}

Status run_one(const std::string& name, Criterion fn) {
  Outcome o;
  try {
    o = fn(std::cout);
  } catch (const std::exception& e) {
    o = {Status::Fail, std::string("exception: ") + e.what()};
  }
  const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
  std::cout << tag << " " << name << ": " << o.detail << std::endl;
  return o.status;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = argv[++i];
    } else if (a == "--list") {
      for (const auto& [name, fn] : criteria()) std::cout << name << '\n';
      return 0;
    } else {
      std::cerr << "usage: acceptance [--criterion <name>] [--list]\n";
      return 2;
    }
  }
  if (!only.empty()) {
    for (const auto& [name, fn] : criteria()) {
      if (name != only) continue;
      const Status s = run_one(name, fn);
      return s == Status::Pass ? 0 : s == Status::Skip ? 77 : 1;
    }
    std::cerr << "unknown criterion " << only << '\n';
    return 2;
  }
  bool failed = false;
  for (const auto& [name, fn] : criteria()) failed |= run_one(name, fn) == Status::Fail;
  return failed ? 1 : 0;
}
