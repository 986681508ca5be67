#include "memen/pointer.hpp"

#include <stdexcept>

#include "memen/ops.hpp"

namespace memen {

PointerParams make_pointer(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t attention_dim,
                           Rng& rng) {
  PointerParams p;
  p.query_proj = store.add(prefix + ".query_proj", uniform_init(dim, attention_dim, rng));
  p.query_bias = store.add(prefix + ".query_bias", Tensor::zeros({1, attention_dim}));
  p.query_score = store.add(prefix + ".query_score", uniform_init(attention_dim, 1, rng));
  p.passage_proj = store.add(prefix + ".passage_proj", uniform_init(dim, attention_dim, rng));
  p.state_proj = store.add(prefix + ".state_proj", uniform_init(dim, attention_dim, rng));
  p.boundary_score = store.add(prefix + ".boundary_score", uniform_init(attention_dim, 1, rng));
  p.gru = make_gru(store, prefix + ".gru", dim, dim, rng);
  return p;
}

std::size_t argmax_first(const std::vector<double>& values, std::size_t from) {
  if (from >= values.size()) throw std::out_of_range("argmax_first: empty range");
  std::size_t best = from;
  for (std::size_t i = from + 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Tensor init_attention(const PointerParams& params, const Tensor& query) {
  if (query.rank() != 2 || query.rows() == 0) throw ShapeError("init_pointer_state: empty query");
  const Tensor scores =
      ops::matmul(ops::tanh(ops::add_row(ops::matmul(query, params.query_proj), params.query_bias)), params.query_score);
  return ops::softmax(scores, 0);
}

Tensor init_pointer_state(const PointerParams& params, const Tensor& query) {
  return ops::matmul(ops::transpose(init_attention(params, query)), query);
}

Boundary predict_boundary(const PointerParams& params, const Tensor& passage, const Tensor& state) {
  const auto n = passage.rows();
  const Tensor hidden = ops::tanh(
      ops::add(ops::matmul(passage, params.passage_proj), ops::repeat_rows(ops::matmul(state, params.state_proj), n)));
  const Tensor dist = ops::softmax(ops::matmul(hidden, params.boundary_score), 0);
  const std::vector<double> values(dist.data().begin(), dist.data().end());
  return Boundary{dist, static_cast<int>(argmax_first(values)) + 1};
}

Tensor update_pointer_state(const PointerParams& params, const Tensor& passage, const Tensor& dist,
                            const Tensor& state) {
  if (dist.rows() != passage.rows() || dist.cols() != 1) {
    throw ShapeError("update_pointer_state: distribution " + shape_to_string(dist.shape()) + " vs passage " +
                     shape_to_string(passage.shape()));
  }
  const Tensor read = ops::matmul(ops::transpose(dist), passage);
  return gru_step(params.gru, read, state);
}

DecodedSpan decode_span(const PointerParams& params, const Tensor& passage, const Tensor& query,
                        bool end_not_before_start) {
  const Tensor l0 = init_pointer_state(params, query);
  const Boundary start = predict_boundary(params, passage, l0);
  const Tensor l1 = update_pointer_state(params, passage, start.dist, l0);
  const Boundary end = predict_boundary(params, passage, l1);

  DecodedSpan out{start.dist, end.dist, {}};
  auto& pred = out.prediction;
  pred.start_dist.assign(start.dist.data().begin(), start.dist.data().end());
  pred.end_dist.assign(end.dist.data().begin(), end.dist.data().end());
  pred.start = start.index;
  pred.end = end_not_before_start ? static_cast<int>(argmax_first(pred.end_dist, static_cast<std::size_t>(pred.start - 1))) + 1
                                  : end.index;
  pred.confidence = pred.start_dist[static_cast<std::size_t>(pred.start - 1)] *
                    pred.end_dist[static_cast<std::size_t>(pred.end - 1)];
  return out;
}

Tensor span_loss(const Tensor& start_dist, const Tensor& end_dist, int gold_start, int gold_end) {
  const auto n = static_cast<int>(start_dist.rows());
  if (gold_start < 1 || gold_start > n || gold_end < 1 || gold_end > static_cast<int>(end_dist.rows())) {
    throw std::out_of_range("span_loss: gold span [" + std::to_string(gold_start) + ", " + std::to_string(gold_end) +
                            "] outside passage of " + std::to_string(n));
  }
  const Tensor picked = ops::add(ops::log(ops::pick(start_dist, static_cast<std::size_t>(gold_start - 1), 0)),
                                 ops::log(ops::pick(end_dist, static_cast<std::size_t>(gold_end - 1), 0)));
  return ops::affine(picked, -1.0);
}

}  // namespace memen
