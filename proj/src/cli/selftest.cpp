#include <cmath>
#include <random>
#include <sstream>

#include "drn/cli/commands.hpp"
#include "drn/numerics/gradcheck.hpp"
#include "drn/numerics/kernels.hpp"
#include "drn/numerics/reference_kernels.hpp"

namespace drn {

namespace {

using D = double;

Tensor<D> random_tensor(Shape shape, Rng& rng, double bound = 1.0) { return uniform_parameter<D>(std::move(shape), bound, rng); }

std::string sci(double v) {
  std::ostringstream os;
  os.precision(2);
  os << std::scientific << v;
  return os.str();
}

struct Outcome {
  std::string name;
  bool pass;
  std::string detail;
};

Outcome grad_case(const std::string& name, const std::function<Tensor<D>()>& loss, std::vector<NamedTensor<D>> params) {
  GradCheckOptions opt;
  opt.probes = 20;
  const auto r = check_gradients<D>(loss, params, opt);
  return {name, r.max_rel_error <= 1e-4, "max rel err " + sci(r.max_rel_error)};
}

std::vector<Outcome> gradient_cases() {
  Rng rng(11);
  std::vector<Outcome> out;
  auto a = random_tensor({4, 5}, rng), b = random_tensor({5, 3}, rng);
  out.push_back(grad_case("matmul", [=] { return sum(matmul(a, b)); }, {{"a", a}, {"b", b}}));
  for (Activation f : kAllActivations) {
    auto x = random_tensor({3, 4}, rng, 2.0);
    out.push_back(grad_case("activation " + std::string(to_string(f)), [=] { return sum(mul(activation(x, f), x)); }, {{"x", x}}));
  }
  auto s = random_tensor({3, 6}, rng, 2.0), w = random_tensor({3, 6}, rng);
  out.push_back(grad_case("softmax", [=] { return sum(mul(softmax(s, 1), w)); }, {{"s", s}}));
  auto logits = random_tensor({5, 4}, rng, 2.0);
  const std::vector<int> labels{0, 3, 1, 2, 3};
  out.push_back(grad_case("cross_entropy", [=] { return cross_entropy(logits, std::span<const int>(labels)); },
                          {{"logits", logits}}));
  auto x = random_tensor({2, 3, 5, 5}, rng), k = random_tensor({4, 3, 3, 3}, rng), bias = random_tensor({4}, rng);
  out.push_back(grad_case("conv2d", [=] { return sum(mul(conv2d(x, k, bias, 1, 1), conv2d(x, k, bias, 1, 1))); },
                          {{"x", x}, {"w", k}, {"b", bias}}));
  auto pre = random_tensor({3, 8}, rng, 2.0), hp = random_tensor({3, 4}, rng);
  for (Activation f : kAllActivations) {
    out.push_back(grad_case("gated_update " + std::string(to_string(f)), [=] { return sum(mul(gated_update(pre, hp, f), hp)); },
                            {{"pre", pre}, {"h_prev", hp}}));
  }
  auto mpre = random_tensor({9, 8}, rng, 2.0), mh = random_tensor({3, 4}, rng), mw = random_tensor({3, 4}, rng);
  out.push_back(grad_case("mixed_update", [=] { return sum(mul(mixed_update(mpre, mh, mw), mh)); },
                          {{"pre", mpre}, {"h_prev", mh}, {"weights", mw}}));
  auto grid = random_tensor({2, 5, 4, 3}, rng), gate = random_tensor({3, 2}, rng);
  out.push_back(grad_case("patches+scale", [=] {
    Tensor<D> p = grid_scale(extract_patches(grid, 2, 2), sigmoid(gate));
    return sum(mul(p, p));
  }, {{"grid", grid}, {"gate", gate}}));
  return out;
}

Outcome relaxation_case() {
  Rng rng(5);
  const std::size_t n = 4, in = 3, hidden = 5, batch = 2;
  auto weights = CellWeights<D>::init(in, hidden, n, rng);
  D worst = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto alpha = AlphaTable<D>::random(n, 1.0, rng);
    for (std::size_t i = 1; i <= n; ++i) {
      const std::size_t j = rng() % i;
      alpha.set(j, i, kAllActivations[rng() % kNumActivations], D(1e4));
    }
    const Genotype g = derive_genotype(alpha);
    auto x = random_tensor({batch, in}, rng);
    auto s_mixed = darts_initial_state<D>(batch, hidden, n);
    auto s_disc = s_mixed;
    for (int t = 0; t < 3; ++t) {
      s_mixed = mixed_cell_forward(alpha, weights, x, s_mixed);
      s_disc = genotype_cell_forward(g, weights, x, s_disc);
    }
    for (std::size_t k = 0; k < s_mixed.output.numel(); ++k) {
      worst = std::max(worst, std::abs(s_mixed.output.data()[k] - s_disc.output.data()[k]));
    }
  }
  return {"relaxation saturation", worst <= 1e-4, "max abs diff " + sci(worst)};
}

Outcome kernel_case() {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t m = 37, n = 29, k = 41;
  std::vector<float> a(m * k), b(k * n), c1(m * n), c2(m * n);
  for (auto& v : a) v = static_cast<float>(u(rng));
  for (auto& v : b) v = static_cast<float>(u(rng));
  kernels::gemm<float>({m, n, k, false, false}, a.data(), b.data(), c1.data(), false);
  reference::gemm<float>({m, n, k, false, false}, a.data(), b.data(), c2.data(), false);
  double worst = 0;
  for (std::size_t i = 0; i < c1.size(); ++i) worst = std::max(worst, static_cast<double>(std::abs(c1[i] - c2[i])));
  return {"parallel gemm vs reference", worst <= 1e-4, "max abs diff " + sci(worst)};
}

}  // namespace

int cmd_selftest(std::ostream& log) {
  std::vector<Outcome> all = gradient_cases();
  all.push_back(relaxation_case());
  all.push_back(kernel_case());
  bool ok = true;
  for (const auto& o : all) {
    log << (o.pass ? "PASS " : "FAIL ") << o.name << " (" << o.detail << ")\n";
    ok = ok && o.pass;
  }
  log << (ok ? "selftest passed" : "selftest FAILED") << std::endl;
  return ok ? 0 : 1;
}

}  // namespace drn
