#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drn/numerics/tensor.hpp"

namespace drn {

/// Ordered record of the primitive ops executed while the tape is active.
///
/// Ops are appended after their inputs exist, so the record is topological by
/// construction. `backward` walks it once in reverse and then clears it. Each
/// thread has its own active tape.
template <typename T>
class Tape {
 public:
  struct Entry {
    const char* op;
    std::shared_ptr<TensorNode<T>> output;
    std::function<void(TensorNode<T>& output)> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(const char* op, std::shared_ptr<TensorNode<T>> output,
              std::function<void(TensorNode<T>&)> backward);

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Seeds d(loss)/d(loss) = 1, runs every recorded backward once in reverse
  /// order and consumes the tape. Throws DimensionError for non-scalar loss.
  void backward(const Tensor<T>& loss);
  void clear() { entries_.clear(); }

  /// Number of backward closures executed by the last `backward` call.
  std::size_t last_backward_visits() const { return last_visits_; }

  static Tape* active() { return active_slot(); }
  static Tape*& active_slot();

 private:

  std::vector<Entry> entries_;
  std::size_t last_visits_ = 0;
};

/// Makes `tape` the active tape of the calling thread for the scope lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(Tape<T>::active_slot()) { Tape<T>::active_slot() = &tape; }
  ~TapeScope() { Tape<T>::active_slot() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Disables recording on the calling thread for the scope lifetime.
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : previous_(Tape<T>::active()) { Tape<T>::active_slot() = nullptr; }
  ~NoGradScope() { Tape<T>::active_slot() = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Backward pass over the calling thread's active tape.
template <typename T>
void backward(const Tensor<T>& loss);

}  // namespace drn
