#pragma once

#include <string>
#include <vector>

#include "memen/params.hpp"
#include "memen/recurrent.hpp"

// Boundary pointer decoder: a query-aware initial state picks the start
// position, one GRU step conditioned on the start distribution picks the end.
namespace memen {

struct PointerParams {
  Tensor query_proj;      // dim x att, W^Q
  Tensor query_bias;      // 1 x att, b^Q
  Tensor query_score;     // att x 1, s
  Tensor passage_proj;    // dim x att, W^P
  Tensor state_proj;      // dim x att, W^h
  Tensor boundary_score;  // att x 1, c
  GruWeights gru;         // dim -> dim
};

PointerParams make_pointer(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t attention_dim,
                           Rng& rng);

/// Start/end choice with 1-based inclusive indices.
struct SpanPrediction {
  int start = 1;
  int end = 1;
  double confidence = 0.0;  // start_dist[start] * end_dist[end]
  std::vector<double> start_dist;
  std::vector<double> end_dist;
};

/// a = softmax_j(s . tanh(W^Q r_Q_j + b^Q)), as an m x 1 column.
Tensor init_attention(const PointerParams& params, const Tensor& query);

/// l0 = sum_i a_i r_Q_i. Returns 1 x dim.
Tensor init_pointer_state(const PointerParams& params, const Tensor& query);

struct Boundary {
  Tensor dist;    // n x 1
  int index = 1;  // 1-based argmax, lowest index on ties
};

Boundary predict_boundary(const PointerParams& params, const Tensor& passage, const Tensor& state);

/// GRU(l_prev, sum_i dist_i O_i).
Tensor update_pointer_state(const PointerParams& params, const Tensor& passage, const Tensor& dist,
                            const Tensor& state);

struct DecodedSpan {
  Tensor start_dist;  // n x 1
  Tensor end_dist;    // n x 1
  SpanPrediction prediction;
};

/// With `end_not_before_start` the end is the argmax over positions >= start;
/// the distributions themselves are unchanged.
DecodedSpan decode_span(const PointerParams& params, const Tensor& passage, const Tensor& query,
                        bool end_not_before_start = false);

/// -log a1[gold_start] - log a2[gold_end] (1-based golds).
Tensor span_loss(const Tensor& start_dist, const Tensor& end_dist, int gold_start, int gold_end);

/// Lowest index attaining the maximum (0-based).
std::size_t argmax_first(const std::vector<double>& values, std::size_t from = 0);

}  // namespace memen
