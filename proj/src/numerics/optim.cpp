#include "drn/numerics/optim.hpp"

#include <cmath>

namespace drn {

template <typename T>
Optimizer<T>::Optimizer(std::vector<Tensor<T>> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  if (config_.kind == OptimizerKind::Adam) {
    for (const auto& p : params_) {
      first_.emplace_back(p.numel(), T(0));
      second_.emplace_back(p.numel(), T(0));
    }
  }
}

template <typename T>
bool Optimizer<T>::manages(const Tensor<T>& t) const {
  for (const auto& p : params_) {
    if (p.same_node(t)) return true;
  }
  return false;
}

template <typename T>
void Optimizer<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].has_grad()) {
      throw MissingGradientError("optimizer step: parameter " + std::to_string(i) + " of shape " +
                                 to_string(params_[i].shape()) + " has no gradient");
    }
  }
  ++steps_;
  const double lr = config_.learning_rate;
  const double wd = config_.weight_decay;
  if (config_.kind == OptimizerKind::Sgd) {
    for (auto& p : params_) {
      auto w = p.mutable_data();
      auto g = p.grad();
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double grad = static_cast<double>(g[k]) + wd * static_cast<double>(w[k]);
        w[k] = static_cast<T>(static_cast<double>(w[k]) - lr * grad);
      }
    }
    return;
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].mutable_data();
    auto g = params_[i].grad();
    auto& m = first_[i];
    auto& v = second_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double grad = static_cast<double>(g[k]) + wd * static_cast<double>(w[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * grad;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * grad * grad;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      w[k] = static_cast<T>(static_cast<double>(w[k]) - lr * m_hat / (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

template <typename T>
void Optimizer<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
double clip_grad_norm(const std::vector<Tensor<T>>& params, double max_norm) {
  double total = 0.0;
  for (const auto& p : params) {
    for (T g : p.grad()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(total);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto p : params) {
      for (T& g : p.mutable_grad()) g = static_cast<T>(static_cast<double>(g) * factor);
    }
  }
  return norm;
}

template class Optimizer<float>;
template class Optimizer<double>;
template double clip_grad_norm<float>(const std::vector<Tensor<float>>&, double);
template double clip_grad_norm<double>(const std::vector<Tensor<double>>&, double);

}  // namespace drn
