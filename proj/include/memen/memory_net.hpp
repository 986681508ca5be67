#pragma once

#include <string>
#include <vector>

#include "memen/ops.hpp"
#include "memen/params.hpp"
#include "memen/recurrent.hpp"

// Full-orientation matching memory network. Within one hop the passage is
// matched against the query three ways (integral query vector, query-based
// alignment, context-based alignment), the matches are fused linearly, gated,
// and read by a BiLSTM. Hops stack by projecting one hop's output into the
// next hop's passage input.
namespace memen {

/// Which matching blocks feed the fusion, and whether the gate is applied.
struct MatchingSwitches {
  bool integral = true;
  bool query_sim = true;
  bool context_sim = true;
  bool gate = true;

  std::size_t blocks() const { return std::size_t{integral} + std::size_t{query_sim} + std::size_t{context_sim}; }
  bool needs_alignment() const { return query_sim || context_sim; }
};

/// Parameters of one hop. `dim` is the representation width 2h.
struct HopParams {
  Tensor align_weight;   // 1 x 3*dim: w1 over [r_P; r_Q; r_P o r_Q]
  Tensor fuse_weight;    // blocks*dim x dim
  Tensor gate_weight;    // dim x dim
  Tensor gate_bias;      // 1 x dim
  BiLstmWeights lstm;    // dim -> 2 x hidden
  Tensor reduce_weight;  // dim x dim, only for hops after the first

  std::size_t dim() const { return gate_weight.rows(); }
};

HopParams make_hop(ParamStore& store, const std::string& prefix, std::size_t dim, std::size_t hidden,
                   const MatchingSwitches& switches, bool with_reduce, Rng& rng);

struct IntegralMatch {
  Tensor attention;  // n x 1, c
  Tensor summary;    // 1 x dim, m1
};

/// c = softmax_t(<u_Q, r_P_t>), m1 = sum_t c_t r_P_t.
IntegralMatch integral_query_match(const Tensor& passage, const Tensor& query_summary);

/// A_ij = w1 . [r_P_i; r_Q_j; r_P_i o r_Q_j], as an n x m matrix.
Tensor alignment_matrix(const Tensor& align_weight, const Tensor& passage, const Tensor& query);

struct QueryMatch {
  Tensor attention;  // n x m, B = row softmax of A
  Tensor matched;    // n x dim, M2 = B r_Q
};

QueryMatch query_based_match(const Tensor& alignment, const Tensor& query);

struct ContextMatch {
  Tensor attention;  // n x 1, d = softmax(row max of A)
  Tensor summary;    // 1 x dim, m3 = sum_t d_t r_P_t
};

ContextMatch context_based_match(const Tensor& alignment, const Tensor& passage);

struct GatedMemory {
  Tensor fused;  // n x dim, M
  Tensor gate;   // n x dim, g (undefined when the gate is switched off)
  Tensor gated;  // n x dim, M*
};

/// M = [M1 | M2 | M3] W_f over the enabled blocks (m1, m3 tiled to n rows),
/// then M* = sigmoid(M W_g + b) o M. Disabled blocks are passed undefined.
GatedMemory fuse_and_gate(const HopParams& params, const MatchingSwitches& switches, const Tensor& integral_summary,
                          const Tensor& query_matched, const Tensor& context_summary, std::size_t passage_len);

struct HopOutput {
  Tensor output;  // n x 2h, O
  Tensor integral_attention;
  Tensor query_attention;
  Tensor context_attention;
  GatedMemory memory;
};

HopOutput memory_hop(const HopParams& params, const MatchingSwitches& switches, const Tensor& passage,
                     const Tensor& query, const Tensor& query_summary);

/// Runs hops in order. Hop k > 1 reads reduce_weight-projected output of hop
/// k - 1 (after dropout) as its passage input; query inputs are reused.
std::vector<HopOutput> run_memory_network(const std::vector<HopParams>& hops, const MatchingSwitches& switches,
                                          const Tensor& passage, const Tensor& query, const Tensor& query_summary,
                                          const DropoutContext& dropout = {});

}  // namespace memen
