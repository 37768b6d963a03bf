#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drn/numerics/tensor.hpp"

namespace drn {

struct GradCheckOptions {
  std::size_t probes = 30;
  std::uint64_t seed = 7;
  double step = 1e-5;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-7;
};

struct GradProbe {
  std::string tensor;
  std::size_t index;
  double analytic;
  double numeric;
  double rel_error;
  /// Rounding bound of `numeric`: a few ulps of the loss divided by 2·step.
  /// Gradients below it cannot be told apart from zero by differencing.
  double resolution = 0.0;

  double abs_error() const;
  /// Relative error is meaningful: tol · max(|a|, |n|) exceeds the resolution.
  bool resolved(double tol) const;
  /// Within `tol` relative, or both values under the resolution and agreeing to it.
  bool agrees(double tol) const;
};

struct GradCheckResult {
  std::vector<GradProbe> probes;
  double max_rel_error = 0.0;
  const GradProbe* worst() const;

  bool agrees(double tol) const;
  std::size_t resolved_count(double tol) const;
  /// Largest relative error over resolved probes only.
  double max_resolved_rel_error(double tol) const;
};

/// Compares reverse-mode gradients of `loss` against central differences on
/// randomly chosen entries, cycling over the tensors so each gets probes.
/// `loss` must rebuild the computation from the current parameter values.
template <typename T>
GradCheckResult check_gradients(const std::function<Tensor<T>()>& loss, const std::vector<NamedTensor<T>>& params,
                                const GradCheckOptions& options = {});

/// Analytic gradient from the 32-bit computation, differences from a 64-bit
/// twin holding the same values (tensor lists must correspond).
GradCheckResult check_gradients_mixed(const std::function<Tensor<float>()>& loss32,
                                      const std::vector<NamedTensor<float>>& params32,
                                      const std::function<Tensor<double>()>& loss64,
                                      const std::vector<NamedTensor<double>>& params64,
                                      const GradCheckOptions& options = {});

/// Analytic 32-bit gradients scored against the central differences stored
/// in `reference` (typically a 64-bit run on the same values), matched by
/// tensor name and index.
GradCheckResult compare_to_differences(const std::function<Tensor<float>()>& loss,
                                       const std::vector<NamedTensor<float>>& params, const GradCheckResult& reference,
                                       double floor = 1e-7);

/// Copies values between precisions (shapes must match pairwise).
template <typename From, typename To>
void copy_values(const std::vector<NamedTensor<From>>& from, const std::vector<NamedTensor<To>>& to);

}  // namespace drn
