#pragma once

#include "drn/cells/cell.hpp"

namespace drn {

/// GRU (Cho et al. form). z and r share one input/recurrent product:
///   [z | r] = σ(x Wx[:, :2H] + h U_zr + b[:2H])
///   n       = tanh(x Wx[:, 2H:] + (r ⊙ h) U_n + b[2H:])
///   h'      = (1 - z) ⊙ h + z ⊙ n
/// z = 0 keeps the old state.
template <typename T>
struct GruWeights {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Tensor<T> wx;    // in × 3H
  Tensor<T> u_zr;  // H × 2H
  Tensor<T> u_n;   // H × H
  Tensor<T> bias;  // 3H

  void validate() const;
  std::vector<NamedTensor<T>> parameters() const;
  static GruWeights init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
};

/// LSTM with gate columns ordered i, f, g, o:
///   [i f g o] = [x, h] W + b;  c' = σ(f) c + σ(i) tanh(g);  h' = σ(o) tanh(c')
template <typename T>
struct LstmWeights {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Tensor<T> w;     // (in + H) × 4H
  Tensor<T> bias;  // 4H

  void validate() const;
  std::vector<NamedTensor<T>> parameters() const;
  static LstmWeights init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
};

template <typename T>
Tensor<T> gru_forward(const GruWeights<T>& weights, const Tensor<T>& x, const Tensor<T>& h_prev);

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

template <typename T>
LstmState<T> lstm_forward(const LstmWeights<T>& weights, const Tensor<T>& x, const LstmState<T>& previous);

template <typename T>
class GruCell final : public RecurrentCell<T> {
 public:
  explicit GruCell(GruWeights<T> weights);

  std::size_t input_dim() const override { return weights_.input_dim; }
  std::size_t hidden_dim() const override { return weights_.hidden_dim; }
  CellState<T> initial_state(std::size_t batch) const override;
  CellState<T> step(const Tensor<T>& x, const CellState<T>& previous) const override;
  std::vector<NamedTensor<T>> parameters() const override { return weights_.parameters(); }

  const GruWeights<T>& weights() const { return weights_; }

 private:
  GruWeights<T> weights_;
};

/// State: `output` is h, `slots[0]` is the memory cell c.
template <typename T>
class LstmCell final : public RecurrentCell<T> {
 public:
  explicit LstmCell(LstmWeights<T> weights);

  std::size_t input_dim() const override { return weights_.input_dim; }
  std::size_t hidden_dim() const override { return weights_.hidden_dim; }
  CellState<T> initial_state(std::size_t batch) const override;
  CellState<T> step(const Tensor<T>& x, const CellState<T>& previous) const override;
  std::vector<NamedTensor<T>> parameters() const override { return weights_.parameters(); }

  const LstmWeights<T>& weights() const { return weights_; }

 private:
  LstmWeights<T> weights_;
};

}  // namespace drn
