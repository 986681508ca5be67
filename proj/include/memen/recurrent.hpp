#pragma once

#include <string>

#include "memen/params.hpp"
#include "memen/tensor.hpp"

namespace memen {

/// LSTM weights with gate columns ordered [input | forget | candidate | output].
struct LstmWeights {
  Tensor w_input;   // d x 4h
  Tensor w_hidden;  // h x 4h
  Tensor bias;      // 1 x 4h

  std::size_t input_dim() const { return w_input.rows(); }
  std::size_t hidden() const { return w_hidden.rows(); }
};

struct BiLstmWeights {
  LstmWeights forward;
  LstmWeights backward;

  std::size_t hidden() const { return forward.hidden(); }
};

/// GRU weights with gate columns ordered [update | reset | candidate].
/// h' = z * h + (1 - z) * candidate.
struct GruWeights {
  Tensor w_input;   // d x 3h
  Tensor w_hidden;  // h x 3h
  Tensor bias;      // 1 x 3h

  std::size_t hidden() const { return w_hidden.rows(); }
};

/// Registers fresh LSTM weights under `prefix`: uniform +-1/sqrt(fan_in),
/// zero biases except the forget gate, which starts at 1.
LstmWeights make_lstm(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                      Rng& rng);
BiLstmWeights make_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                          Rng& rng);
GruWeights make_gru(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                    Rng& rng);

struct LstmRun {
  Tensor states;  // n x h, row t is the state after reading position t
  Tensor last;    // 1 x h, state after the final step of the scan
};

/// Runs one direction over the n x d `inputs`. A reverse scan reads position
/// n-1 first; its `last` is the state at position 0.
LstmRun run_lstm(const LstmWeights& weights, const Tensor& inputs, bool reverse);

struct BiLstmRun {
  Tensor reps;        // n x 2h, [forward | backward] per position
  Tensor last_state;  // 1 x 2h, [forward final | backward final]
};

BiLstmRun run_bilstm(const BiLstmWeights& weights, const Tensor& inputs);

/// One GRU transition on a 1 x d input and a 1 x h state.
Tensor gru_step(const GruWeights& weights, const Tensor& input, const Tensor& state);

}  // namespace memen
