#include "drn/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "drn/numerics/tape.hpp"

namespace drn {

const GradProbe* GradCheckResult::worst() const {
  const GradProbe* w = nullptr;
  for (const auto& p : probes) {
    if (!w || p.rel_error > w->rel_error) w = &p;
  }
  return w;
}

double GradProbe::abs_error() const { return std::abs(analytic - numeric); }

bool GradProbe::resolved(double tol) const {
  return tol * std::max(std::abs(analytic), std::abs(numeric)) >= resolution;
}

bool GradProbe::agrees(double tol) const {
  return resolved(tol) ? rel_error <= tol : abs_error() <= resolution;
}

bool GradCheckResult::agrees(double tol) const {
  return std::all_of(probes.begin(), probes.end(), [&](const GradProbe& p) { return p.agrees(tol); });
}

std::size_t GradCheckResult::resolved_count(double tol) const {
  return static_cast<std::size_t>(
      std::count_if(probes.begin(), probes.end(), [&](const GradProbe& p) { return p.resolved(tol); }));
}

double GradCheckResult::max_resolved_rel_error(double tol) const {
  double worst = 0.0;
  for (const auto& p : probes)
    if (p.resolved(tol)) worst = std::max(worst, p.rel_error);
  return worst;
}

namespace {

// Ulps of |loss| assumed lost to rounding in each evaluation.
constexpr double kNoiseUlps = 8.0;

template <typename T>
std::vector<std::vector<double>> analytic_gradients(const std::function<Tensor<T>()>& loss,
                                                    const std::vector<NamedTensor<T>>& params) {
  for (auto p : params) p.tensor.zero_grad();
  {
    Tape<T> tape;
    TapeScope<T> scope(tape);
    backward(loss());
  }
  std::vector<std::vector<double>> out;
  for (const auto& p : params) {
    std::vector<double> g(p.tensor.numel(), 0.0);
    if (p.tensor.has_grad()) {
      auto src = p.tensor.grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(src[i]);
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct Difference {
  double value;
  double resolution;
};

template <typename T>
Difference central_difference(const std::function<Tensor<T>()>& loss, Tensor<T> param, std::size_t index,
                              double step) {
  NoGradScope<T> no_grad;
  auto data = param.mutable_data();
  const T saved = data[index];
  data[index] = static_cast<T>(static_cast<double>(saved) + step);
  const double plus = static_cast<double>(loss().item());
  data[index] = static_cast<T>(static_cast<double>(saved) - step);
  const double minus = static_cast<double>(loss().item());
  data[index] = saved;
  const double ulp = 2.0 * std::numeric_limits<T>::epsilon() * std::max(std::abs(plus), std::abs(minus));
  return {(plus - minus) / (2.0 * step), kNoiseUlps * ulp / (2.0 * step)};
}

std::vector<std::pair<std::size_t, std::size_t>> pick_probes(const std::vector<std::size_t>& sizes,
                                                             const GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::vector<std::size_t> usable;
  for (std::size_t t = 0; t < sizes.size(); ++t) {
    if (sizes[t] > 0) usable.push_back(t);
  }
  if (usable.empty()) return out;
  // Random tensor order so a short probe budget still spreads over the model.
  std::shuffle(usable.begin(), usable.end(), rng);
  for (std::size_t k = 0; k < options.probes; ++k) {
    const std::size_t t = usable[k % usable.size()];
    out.emplace_back(t, static_cast<std::size_t>(rng() % sizes[t]));
  }
  return out;
}

GradProbe make_probe(const std::string& name, std::size_t index, double a, Difference n, double floor) {
  const double denom = std::max({std::abs(a), std::abs(n.value), floor});
  return {name, index, a, n.value, std::abs(a - n.value) / denom, n.resolution};
}

}  // namespace

template <typename T>
GradCheckResult check_gradients(const std::function<Tensor<T>()>& loss, const std::vector<NamedTensor<T>>& params,
                                const GradCheckOptions& options) {
  const auto grads = analytic_gradients(loss, params);
  std::vector<std::size_t> sizes;
  for (const auto& p : params) sizes.push_back(p.tensor.numel());
  GradCheckResult r;
  for (auto [t, i] : pick_probes(sizes, options)) {
    const Difference n = central_difference(loss, params[t].tensor, i, options.step);
    r.probes.push_back(make_probe(params[t].name, i, grads[t][i], n, options.floor));
    r.max_rel_error = std::max(r.max_rel_error, r.probes.back().rel_error);
  }
  return r;
}

GradCheckResult check_gradients_mixed(const std::function<Tensor<float>()>& loss32,
                                      const std::vector<NamedTensor<float>>& params32,
                                      const std::function<Tensor<double>()>& loss64,
                                      const std::vector<NamedTensor<double>>& params64,
                                      const GradCheckOptions& options) {
  if (params32.size() != params64.size()) throw std::invalid_argument("mixed gradient check: tensor lists differ");
  const auto grads = analytic_gradients(loss32, params32);
  std::vector<std::size_t> sizes;
  for (const auto& p : params32) sizes.push_back(p.tensor.numel());
  GradCheckResult r;
  for (auto [t, i] : pick_probes(sizes, options)) {
    const Difference n = central_difference(loss64, params64[t].tensor, i, options.step);
    r.probes.push_back(make_probe(params32[t].name, i, grads[t][i], n, options.floor));
    r.max_rel_error = std::max(r.max_rel_error, r.probes.back().rel_error);
  }
  return r;
}

GradCheckResult compare_to_differences(const std::function<Tensor<float>()>& loss,
                                       const std::vector<NamedTensor<float>>& params, const GradCheckResult& reference,
                                       double floor) {
  const auto grads = analytic_gradients(loss, params);
  std::map<std::string, std::size_t> index_of;
  for (std::size_t t = 0; t < params.size(); ++t) index_of[params[t].name] = t;
  GradCheckResult r;
  for (const auto& probe : reference.probes) {
    const auto it = index_of.find(probe.tensor);
    if (it == index_of.end()) throw std::invalid_argument("no tensor named " + probe.tensor);
    r.probes.push_back(make_probe(probe.tensor, probe.index, grads[it->second][probe.index],
                                    Difference{probe.numeric, probe.resolution}, floor));
    r.max_rel_error = std::max(r.max_rel_error, r.probes.back().rel_error);
  }
  return r;
}

template <typename From, typename To>
void copy_values(const std::vector<NamedTensor<From>>& from, const std::vector<NamedTensor<To>>& to) {
  if (from.size() != to.size()) throw std::invalid_argument("copy_values: tensor lists differ");
  for (std::size_t t = 0; t < from.size(); ++t) {
    if (from[t].tensor.shape() != to[t].tensor.shape()) {
      throw DimensionError("copy_values: " + from[t].name + " shape mismatch");
    }
    Tensor<To> dst = to[t].tensor;
    auto d = dst.mutable_data();
    auto s = from[t].tensor.data();
    for (std::size_t i = 0; i < s.size(); ++i) d[i] = static_cast<To>(s[i]);
  }
}

template GradCheckResult check_gradients<float>(const std::function<Tensor<float>()>&,
                                                const std::vector<NamedTensor<float>>&, const GradCheckOptions&);
template GradCheckResult check_gradients<double>(const std::function<Tensor<double>()>&,
                                                 const std::vector<NamedTensor<double>>&, const GradCheckOptions&);
template void copy_values<float, double>(const std::vector<NamedTensor<float>>&,
                                         const std::vector<NamedTensor<double>>&);
template void copy_values<double, float>(const std::vector<NamedTensor<double>>&,
                                         const std::vector<NamedTensor<float>>&);
template void copy_values<float, float>(const std::vector<NamedTensor<float>>&, const std::vector<NamedTensor<float>>&);
template void copy_values<double, double>(const std::vector<NamedTensor<double>>&,
                                          const std::vector<NamedTensor<double>>&);

}  // namespace drn
