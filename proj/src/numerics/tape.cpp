#include "drn/numerics/tape.hpp"

namespace drn {

template <typename T>
Tape<T>*& Tape<T>::active_slot() {
  thread_local Tape<T>* slot = nullptr;
  return slot;
}

template <typename T>
void Tape<T>::record(const char* op, std::shared_ptr<TensorNode<T>> output,
                     std::function<void(TensorNode<T>&)> backward) {
  entries_.push_back(Entry{op, std::move(output), std::move(backward)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DimensionError("backward requires a scalar loss, got " +
                         (loss.defined() ? to_string(loss.shape()) : std::string("undefined")));
  }
  auto root = loss.node_ptr();
  root->grad_buffer()[0] += T(1);
  last_visits_ = 0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    ++last_visits_;
    // No gradient reached this output: nothing to propagate.
    if (it->output->grad.empty()) continue;
    it->backward(*it->output);
  }
  entries_.clear();
}

template <typename T>
void backward(const Tensor<T>& loss) {
  Tape<T>* tape = Tape<T>::active();
  if (tape == nullptr) throw std::logic_error("backward called without an active tape");
  tape->backward(loss);
}

template class Tape<float>;
template class Tape<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace drn
