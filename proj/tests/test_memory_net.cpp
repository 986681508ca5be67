#include <gtest/gtest.h>

#include "memen/gradcheck.hpp"
#include "memen/memory_net.hpp"
#include "oracles.hpp"

using namespace memen;

namespace {

struct Instance {
  Tensor passage, query, summary;
  HopParams hop;
  ParamStore store;
};

Instance make_instance(std::size_t n, std::size_t m, std::size_t hidden, const MatchingSwitches& sw, Rng& rng) {
  Instance in;
  const std::size_t dim = 2 * hidden;
  in.passage = oracle::random_tensor(n, dim, rng);
  in.query = oracle::random_tensor(m, dim, rng);
  in.summary = oracle::random_tensor(1, dim, rng);
  in.hop = make_hop(in.store, "hop", dim, hidden, sw, false, rng);
  // Nonzero gate bias so the bias path is exercised.
  in.store.assign("hop.gate.bias", oracle::random_tensor(1, dim, rng));
  return in;
}

}  // namespace

TEST(MemoryNet, MatchingAgreesWithLoopOracle) {
  Rng rng(41);
  const MatchingSwitches all;
  for (int trial = 0; trial < 25; ++trial) {
    const auto n = 1 + rng.index(6), m = 1 + rng.index(6), h = 1 + rng.index(4);
    Instance in = make_instance(n, m, h, all, rng);
    const auto P = oracle::to_matrix(in.passage), Q = oracle::to_matrix(in.query);
    const auto u = oracle::to_matrix(in.summary)[0];
    const auto w = oracle::to_matrix(in.hop.align_weight)[0];

    const auto integral = integral_query_match(in.passage, in.summary);
    const auto want_integral = oracle::integral_match(P, u);
    EXPECT_LT(oracle::max_abs_diff(want_integral.c, integral.attention), 1e-10);
    EXPECT_LT(oracle::max_abs_diff(want_integral.m1, integral.summary), 1e-10);

    const Tensor a = alignment_matrix(in.hop.align_weight, in.passage, in.query);
    const auto want_a = oracle::alignment(w, P, Q);
    EXPECT_LT(oracle::max_abs_diff(want_a, a), 1e-10);

    const auto qm = query_based_match(a, in.query);
    const auto want_q = oracle::query_match(want_a, Q);
    EXPECT_LT(oracle::max_abs_diff(want_q.b, qm.attention), 1e-10);
    EXPECT_LT(oracle::max_abs_diff(want_q.m2, qm.matched), 1e-10);

    const auto cm = context_based_match(a, in.passage);
    const auto want_c = oracle::context_match(want_a, P);
    EXPECT_LT(oracle::max_abs_diff(want_c.d, cm.attention), 1e-10);
    EXPECT_LT(oracle::max_abs_diff(want_c.m3, cm.summary), 1e-10);

    const auto mem = fuse_and_gate(in.hop, all, integral.summary, qm.matched, cm.summary, n);
    const auto want_mem = oracle::fuse_and_gate(
        {oracle::tile(want_integral.m1, n), want_q.m2, oracle::tile(want_c.m3, n)}, oracle::to_matrix(in.hop.fuse_weight),
        oracle::to_matrix(in.hop.gate_weight), oracle::to_matrix(in.hop.gate_bias)[0], true);
    EXPECT_LT(oracle::max_abs_diff(want_mem.fused, mem.fused), 1e-10);
    EXPECT_LT(oracle::max_abs_diff(want_mem.gated, mem.gated), 1e-10);
  }
}

TEST(MemoryNet, AttentionIsNormalized) {
  Rng rng(5);
  Instance in = make_instance(5, 4, 3, {}, rng);
  const auto out = memory_hop(in.hop, {}, in.passage, in.query, in.summary);
  auto check_columns_sum = [](const Tensor& t, int axis) {
    const auto outer = axis == 0 ? t.cols() : t.rows();
    const auto inner = axis == 0 ? t.rows() : t.cols();
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0;
      for (std::size_t i = 0; i < inner; ++i) {
        const double v = axis == 0 ? t.at(i, o) : t.at(o, i);
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  };
  check_columns_sum(out.integral_attention, 0);
  check_columns_sum(out.query_attention, 1);
  check_columns_sum(out.context_attention, 0);
  EXPECT_EQ(out.output.rows(), 5u);
  EXPECT_EQ(out.output.cols(), 6u);
}

TEST(MemoryNet, UniformAlignmentGivesUniformAttention) {
  // Zero alignment weight makes A = 0, so B rows and d are uniform.
  Rng rng(8);
  Instance in = make_instance(4, 3, 2, {}, rng);
  in.store.assign("hop.align_weight", Tensor::zeros({1, 12}));
  const Tensor a = alignment_matrix(in.hop.align_weight, in.passage, in.query);
  const auto qm = query_based_match(a, in.query);
  const auto cm = context_based_match(a, in.passage);
  for (double v : qm.attention.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  for (double v : cm.attention.data()) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(MemoryNet, AblationDropsBlockFromFusion) {
  Rng rng(12);
  MatchingSwitches no_context;
  no_context.context_sim = false;
  ParamStore store;
  const HopParams full = make_hop(store, "a", 4, 2, {}, false, rng);
  const HopParams reduced = make_hop(store, "b", 4, 2, no_context, false, rng);
  EXPECT_EQ(full.fuse_weight.rows(), 12u);
  EXPECT_EQ(reduced.fuse_weight.rows(), 8u);

  MatchingSwitches only_integral;
  only_integral.query_sim = only_integral.context_sim = false;
  const HopParams integral_only = make_hop(store, "c", 4, 2, only_integral, false, rng);
  EXPECT_FALSE(integral_only.align_weight.defined());
  EXPECT_EQ(integral_only.fuse_weight.rows(), 4u);

  MatchingSwitches none;
  none.integral = none.query_sim = none.context_sim = false;
  EXPECT_THROW(make_hop(store, "d", 4, 2, none, false, rng), std::invalid_argument);
}

TEST(MemoryNet, ContextAblationMatchesTwoBlockOracle) {
  Rng rng(19);
  MatchingSwitches sw;
  sw.context_sim = false;
  Instance in = make_instance(3, 2, 2, sw, rng);
  const auto integral = integral_query_match(in.passage, in.summary);
  const auto qm = query_based_match(alignment_matrix(in.hop.align_weight, in.passage, in.query), in.query);
  const auto mem = fuse_and_gate(in.hop, sw, integral.summary, qm.matched, Tensor(), 3);
  const auto want = oracle::fuse_and_gate({oracle::tile(oracle::to_matrix(integral.summary)[0], 3),
                                           oracle::to_matrix(qm.matched)},
                                          oracle::to_matrix(in.hop.fuse_weight), oracle::to_matrix(in.hop.gate_weight),
                                          oracle::to_matrix(in.hop.gate_bias)[0], true);
  EXPECT_LT(oracle::max_abs_diff(want.gated, mem.gated), 1e-12);
}

TEST(MemoryNet, GateOffPassesFusionThrough) {
  Rng rng(3);
  MatchingSwitches sw;
  sw.gate = false;
  Instance in = make_instance(3, 2, 2, sw, rng);
  const auto out = memory_hop(in.hop, sw, in.passage, in.query, in.summary);
  EXPECT_TRUE(out.memory.gated.same(out.memory.fused));
  EXPECT_FALSE(out.memory.gate.defined());
}

TEST(MemoryNet, ShapeMismatchNamesShapes) {
  Rng rng(2);
  Instance in = make_instance(3, 2, 2, {}, rng);
  const Tensor wrong = Tensor::zeros({2, 5});
  try {
    alignment_matrix(in.hop.align_weight, in.passage, wrong);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2,5]"), std::string::npos) << e.what();
  }
}

TEST(MemoryNet, HopsStackThroughReduction) {
  Rng rng(23);
  ParamStore store;
  std::vector<HopParams> hops;
  for (int k = 0; k < 3; ++k) hops.push_back(make_hop(store, "hop" + std::to_string(k), 4, 2, {}, k > 0, rng));
  const Tensor p = oracle::random_tensor(5, 4, rng), q = oracle::random_tensor(3, 4, rng);
  const Tensor u = oracle::random_tensor(1, 4, rng);
  const auto outs = run_memory_network(hops, {}, p, q, u);
  ASSERT_EQ(outs.size(), 3u);
  // Hop 2 sees hop 1's output projected by its reduction weight.
  const auto direct = memory_hop(hops[1], {}, ops::matmul(outs[0].output, hops[1].reduce_weight), q, u);
  for (std::size_t i = 0; i < direct.output.size(); ++i) EXPECT_DOUBLE_EQ(direct.output[i], outs[1].output[i]);

  hops[1].reduce_weight = Tensor();
  EXPECT_THROW(run_memory_network(hops, {}, p, q, u), std::invalid_argument);
}

TEST(MemoryNet, FullHopGradientCheck) {
  Rng rng(31);
  Instance in = make_instance(4, 3, 2, {}, rng);
  std::vector<Tensor> params{in.passage, in.query, in.summary};
  for (const auto& [name, slot] : in.store.slots()) params.push_back(slot.value);
  const Tensor mix = oracle::random_tensor(4, 4, rng);
  const double err = gradient_check(
      [&] {
        const auto out = memory_hop(in.hop, {}, in.passage, in.query, in.summary);
        return ops::sum_all(ops::mul(out.output, mix));
      },
      params);
  EXPECT_LT(err, 1e-4);
}
