#include "memen/recurrent.hpp"

#include <vector>

#include "memen/ops.hpp"

namespace memen {

LstmWeights make_lstm(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                      Rng& rng) {
  LstmWeights w;
  w.w_input = store.add(prefix + ".w_input", uniform_init(input_dim, 4 * hidden, rng));
  w.w_hidden = store.add(prefix + ".w_hidden", uniform_init(hidden, 4 * hidden, rng));
  Tensor bias = Tensor::zeros({1, 4 * hidden});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) bias.data()[j] = 1.0;
  w.bias = store.add(prefix + ".bias", bias);
  return w;
}

BiLstmWeights make_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                          Rng& rng) {
  BiLstmWeights w;
  w.forward = make_lstm(store, prefix + ".fw", input_dim, hidden, rng);
  w.backward = make_lstm(store, prefix + ".bw", input_dim, hidden, rng);
  return w;
}

GruWeights make_gru(ParamStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                    Rng& rng) {
  GruWeights w;
  w.w_input = store.add(prefix + ".w_input", uniform_init(input_dim, 3 * hidden, rng));
  w.w_hidden = store.add(prefix + ".w_hidden", uniform_init(hidden, 3 * hidden, rng));
  w.bias = store.add(prefix + ".bias", Tensor::zeros({1, 3 * hidden}));
  return w;
}

LstmRun run_lstm(const LstmWeights& weights, const Tensor& inputs, bool reverse) {
  const auto n = inputs.rows();
  if (n == 0) throw ShapeError("lstm: empty input sequence");
  if (inputs.cols() != weights.input_dim()) {
    throw ShapeError("lstm: input width " + std::to_string(inputs.cols()) + " but weights expect " +
                     std::to_string(weights.input_dim()));
  }
  const auto h = weights.hidden();
  // Input projections for every position in one product.
  const Tensor projected = ops::add_row(ops::matmul(inputs, weights.w_input), weights.bias);

  std::vector<Tensor> states(n);
  Tensor hidden_state;
  Tensor cell;
  for (std::size_t step = 0; step < n; ++step) {
    const auto t = reverse ? n - 1 - step : step;
    Tensor pre = ops::row(projected, t);
    if (hidden_state.defined()) pre = ops::add(pre, ops::matmul(hidden_state, weights.w_hidden));
    const Tensor in_gate = ops::sigmoid(ops::slice_cols(pre, 0, h));
    const Tensor forget_gate = ops::sigmoid(ops::slice_cols(pre, h, h));
    const Tensor candidate = ops::tanh(ops::slice_cols(pre, 2 * h, h));
    const Tensor out_gate = ops::sigmoid(ops::slice_cols(pre, 3 * h, h));
    Tensor next_cell = ops::mul(in_gate, candidate);
    if (cell.defined()) next_cell = ops::add(ops::mul(forget_gate, cell), next_cell);
    cell = next_cell;
    hidden_state = ops::mul(out_gate, ops::tanh(cell));
    states[t] = hidden_state;
  }
  return LstmRun{n == 1 ? states[0] : ops::concat(states, 0), hidden_state};
}

BiLstmRun run_bilstm(const BiLstmWeights& weights, const Tensor& inputs) {
  const LstmRun fw = run_lstm(weights.forward, inputs, false);
  const LstmRun bw = run_lstm(weights.backward, inputs, true);
  return BiLstmRun{ops::concat({fw.states, bw.states}, 1), ops::concat({fw.last, bw.last}, 1)};
}

Tensor gru_step(const GruWeights& weights, const Tensor& input, const Tensor& state) {
  const auto h = weights.hidden();
  if (state.cols() != h) throw ShapeError("gru: state width " + std::to_string(state.cols()) + " vs hidden " + std::to_string(h));
  const Tensor x_proj = ops::add(ops::matmul(input, weights.w_input), weights.bias);
  const Tensor h_proj = ops::matmul(state, ops::slice_cols(weights.w_hidden, 0, 2 * h));
  const Tensor gates = ops::sigmoid(ops::add(ops::slice_cols(x_proj, 0, 2 * h), h_proj));
  const Tensor update = ops::slice_cols(gates, 0, h);
  const Tensor reset = ops::slice_cols(gates, h, h);
  const Tensor candidate =
      ops::tanh(ops::add(ops::slice_cols(x_proj, 2 * h, h),
                         ops::matmul(ops::mul(reset, state), ops::slice_cols(weights.w_hidden, 2 * h, h))));
  // z * h + (1 - z) * candidate
  return ops::add(ops::mul(update, state), ops::mul(ops::affine(update, -1.0, 1.0), candidate));
}

}  // namespace memen
