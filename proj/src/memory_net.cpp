#include "memen/memory_net.hpp"

#include <stdexcept>

namespace memen {

namespace {

void require_width(const char* op, const Tensor& t, std::size_t width) {
  if (t.cols() != width) {
    throw ShapeError(std::string(op) + ": expected width " + std::to_string(width) + ", got " +
                     shape_to_string(t.shape()));
  }
}

// softmax over a column vector, returning the attention and the weighted row sum.
std::pair<Tensor, Tensor> attend_rows(const Tensor& scores, const Tensor& rows) {
  const Tensor weights = ops::softmax(scores, 0);
  return {weights, ops::matmul(ops::transpose(weights), rows)};
}

}  // namespace

HopParams make_hop(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t hidden,
                   const MatchingSwitches& switches, bool with_reduce, Rng& rng) {
  if (switches.blocks() == 0) throw std::invalid_argument("memory hop: every matching block is ablated");
  HopParams p;
  if (switches.needs_alignment()) {
    const Tensor w = uniform_init(3 * dim, 1, rng);
    p.align_weight = store.add(prefix + ".align_weight", Tensor({1, 3 * dim}, {w.data().begin(), w.data().end()}));
  }
  p.fuse_weight = store.add(prefix + ".fuse_weight", uniform_init(switches.blocks() * dim, dim, rng));
  p.gate_weight = store.add(prefix + ".gate.weight", uniform_init(dim, dim, rng));
  p.gate_bias = store.add(prefix + ".gate.bias", Tensor::zeros({1, dim}));
  p.lstm = make_bilstm(store, prefix + ".lstm", dim, hidden, rng);
  if (with_reduce) p.reduce_weight = store.add(prefix + ".reduce_weight", uniform_init(dim, dim, rng));
  return p;
}

IntegralMatch integral_query_match(const Tensor& passage, const Tensor& query_summary) {
  if (query_summary.rows() != 1) throw ShapeError("integral_query_match: query summary must be a row");
  require_width("integral_query_match", passage, query_summary.cols());
  const Tensor scores = ops::matmul(passage, ops::transpose(query_summary));  // n x 1
  auto [c, m1] = attend_rows(scores, passage);
  return IntegralMatch{c, m1};
}

Tensor alignment_matrix(const Tensor& align_weight, const Tensor& passage, const Tensor& query) {
  const auto dim = passage.cols();
  require_width("alignment_matrix", query, dim);
  if (align_weight.size() != 3 * dim) {
    throw ShapeError("alignment_matrix: weight " + shape_to_string(align_weight.shape()) + " vs representation width " +
                     std::to_string(dim) + " (needs " + std::to_string(3 * dim) + ")");
  }
  const auto n = passage.rows(), m = query.rows();
  const Tensor w = align_weight.rows() == 1 ? align_weight : ops::reshape(align_weight, {1, 3 * dim});
  const Tensor w_passage = ops::slice_cols(w, 0, dim);
  const Tensor w_query = ops::slice_cols(w, dim, dim);
  const Tensor w_product = ops::slice_cols(w, 2 * dim, dim);
  // w_P.r_P_i + w_Q.r_Q_j + sum_k w_PQ[k] r_P_i[k] r_Q_j[k]
  const Tensor passage_term = ops::matmul(passage, ops::transpose(w_passage));  // n x 1
  const Tensor query_term = ops::matmul(w_query, ops::transpose(query));        // 1 x m
  const Tensor product_term =
      ops::matmul(ops::mul(passage, ops::repeat_rows(w_product, n)), ops::transpose(query));  // n x m
  return ops::add(product_term, ops::add(ops::repeat_cols(passage_term, m), ops::repeat_rows(query_term, n)));
}

QueryMatch query_based_match(const Tensor& alignment, const Tensor& query) {
  if (alignment.cols() != query.rows()) {
    throw ShapeError("query_based_match: alignment " + shape_to_string(alignment.shape()) + " vs query " +
                     shape_to_string(query.shape()));
  }
  const Tensor b = ops::softmax(alignment, 1);
  return QueryMatch{b, ops::matmul(b, query)};
}

ContextMatch context_based_match(const Tensor& alignment, const Tensor& passage) {
  if (alignment.rows() != passage.rows()) {
    throw ShapeError("context_based_match: alignment " + shape_to_string(alignment.shape()) + " vs passage " +
                     shape_to_string(passage.shape()));
  }
  auto [d, m3] = attend_rows(ops::max(alignment, 1), passage);
  return ContextMatch{d, m3};
}

GatedMemory fuse_and_gate(const HopParams& params, const MatchingSwitches& switches, const Tensor& integral_summary,
                          const Tensor& query_matched, const Tensor& context_summary, std::size_t passage_len) {
  std::vector<Tensor> blocks;
  if (switches.integral) blocks.push_back(ops::repeat_rows(integral_summary, passage_len));
  if (switches.query_sim) blocks.push_back(query_matched);
  if (switches.context_sim) blocks.push_back(ops::repeat_rows(context_summary, passage_len));
  if (blocks.empty()) throw std::invalid_argument("fuse_and_gate: nothing to fuse, every matching block is ablated");
  const Tensor stacked = blocks.size() == 1 ? blocks.front() : ops::concat(blocks, 1);
  if (stacked.cols() != params.fuse_weight.rows()) {
    throw ShapeError("fuse_and_gate: fused input " + shape_to_string(stacked.shape()) + " vs fusion weight " +
                     shape_to_string(params.fuse_weight.shape()));
  }
  GatedMemory out;
  out.fused = ops::matmul(stacked, params.fuse_weight);
  if (switches.gate) {
    out.gate = ops::sigmoid(ops::add_row(ops::matmul(out.fused, params.gate_weight), params.gate_bias));
    out.gated = ops::mul(out.gate, out.fused);
  } else {
    out.gated = out.fused;
  }
  return out;
}

HopOutput memory_hop(const HopParams& params, const MatchingSwitches& switches, const Tensor& passage,
                     const Tensor& query, const Tensor& query_summary) {
  HopOutput out;
  Tensor m1, m2, m3;
  if (switches.integral) {
    auto match = integral_query_match(passage, query_summary);
    out.integral_attention = match.attention;
    m1 = match.summary;
  }
  if (switches.needs_alignment()) {
    const Tensor a = alignment_matrix(params.align_weight, passage, query);
    if (switches.query_sim) {
      auto match = query_based_match(a, query);
      out.query_attention = match.attention;
      m2 = match.matched;
    }
    if (switches.context_sim) {
      auto match = context_based_match(a, passage);
      out.context_attention = match.attention;
      m3 = match.summary;
    }
  }
  out.memory = fuse_and_gate(params, switches, m1, m2, m3, passage.rows());
  out.output = run_bilstm(params.lstm, out.memory.gated).reps;
  return out;
}

std::vector<HopOutput> run_memory_network(const std::vector<HopParams>& hops, const MatchingSwitches& switches,
                                          const Tensor& passage, const Tensor& query, const Tensor& query_summary,
                                          const DropoutContext& dropout) {
  if (hops.empty()) throw std::invalid_argument("run_memory_network: hops must be >= 1");
  std::vector<HopOutput> outputs;
  Tensor input = passage;
  for (std::size_t k = 0; k < hops.size(); ++k) {
    if (k > 0) {
      if (!hops[k].reduce_weight.defined()) {
        throw std::invalid_argument("run_memory_network: hop " + std::to_string(k + 1) + " has no reduction weight");
      }
      input = ops::matmul(dropout.apply(outputs.back().output), hops[k].reduce_weight);
    }
    outputs.push_back(memory_hop(hops[k], switches, input, query, query_summary));
  }
  return outputs;
}

}  // namespace memen
