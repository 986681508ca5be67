#include <gtest/gtest.h>

#include <cmath>

#include "memen/gradcheck.hpp"
#include "memen/ops.hpp"
#include "memen/pointer.hpp"
#include "oracles.hpp"

using namespace memen;

namespace {

struct Setup {
  ParamStore store;
  PointerParams p;
  Tensor passage, query;
};

Setup make_setup(std::size_t n, std::size_t m, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Setup s;
  s.p = make_pointer(s.store, "ptr", dim, 3, rng);
  s.store.assign("ptr.query_bias", oracle::random_tensor(1, 3, rng));
  s.passage = oracle::random_tensor(n, dim, rng);
  s.query = oracle::random_tensor(m, dim, rng);
  return s;
}

}  // namespace

TEST(Pointer, InitialStateMatchesLoopOracle) {
  auto s = make_setup(5, 4, 4, 3);
  const Tensor l0 = init_pointer_state(s.p, s.query);
  std::vector<double> scores;
  for (std::size_t j = 0; j < 4; ++j) {
    double score = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      double x = s.p.query_bias[a];
      for (std::size_t k = 0; k < 4; ++k) x += s.query.at(j, k) * s.p.query_proj.at(k, a);
      score += std::tanh(x) * s.p.query_score[a];
    }
    scores.push_back(score);
  }
  const auto want = oracle::mix_rows(oracle::softmax(scores), oracle::to_matrix(s.query));
  EXPECT_LT(oracle::max_abs_diff(want, l0), 1e-12);
}

TEST(Pointer, BoundaryMatchesLoopOracle) {
  auto s = make_setup(6, 2, 4, 8);
  Rng rng(1);
  const Tensor state = oracle::random_tensor(1, 4, rng);
  const auto b = predict_boundary(s.p, s.passage, state);
  std::vector<double> scores;
  for (std::size_t i = 0; i < 6; ++i) {
    double score = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      double x = 0;
      for (std::size_t k = 0; k < 4; ++k) x += s.passage.at(i, k) * s.p.passage_proj.at(k, a) + state[k] * s.p.state_proj.at(k, a);
      score += std::tanh(x) * s.p.boundary_score[a];
    }
    scores.push_back(score);
  }
  const auto want = oracle::softmax(scores);
  EXPECT_LT(oracle::max_abs_diff(want, b.dist), 1e-12);
  EXPECT_EQ(b.index, static_cast<int>(std::max_element(want.begin(), want.end()) - want.begin()) + 1);
}

TEST(Pointer, StateUpdateReadsExpectedPassage) {
  auto s = make_setup(3, 2, 4, 5);
  const Tensor dist = Tensor::matrix(3, 1, {0, 1, 0});
  const Tensor state = Tensor::filled({1, 4}, 0.1);
  const Tensor next = update_pointer_state(s.p, s.passage, dist, state);
  const Tensor direct = gru_step(s.p.gru, ops::row(s.passage, 1), state);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(next[i], direct[i]);
  EXPECT_THROW(update_pointer_state(s.p, s.passage, Tensor::zeros({2, 1}), state), ShapeError);
}

TEST(Pointer, DecodeDistributionsNormalized) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = make_setup(1 + seed % 7, 1 + seed % 3, 4, seed);
    const auto d = decode_span(s.p, s.passage, s.query);
    for (const auto* dist : {&d.prediction.start_dist, &d.prediction.end_dist}) {
      double total = 0;
      for (double v : *dist) {
        EXPECT_GE(v, 0.0);
        total += v;
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
    const auto& pr = d.prediction;
    EXPECT_GE(pr.start, 1);
    EXPECT_LE(pr.end, static_cast<int>(s.passage.rows()));
    EXPECT_DOUBLE_EQ(pr.confidence, pr.start_dist[pr.start - 1] * pr.end_dist[pr.end - 1]);
  }
}

TEST(Pointer, EndConstraintOnlyMovesArgmax) {
  // Find an instance where the free end lands before the start.
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    auto s = make_setup(6, 3, 4, seed);
    const auto free = decode_span(s.p, s.passage, s.query, false);
    if (free.prediction.end >= free.prediction.start) continue;
    const auto held = decode_span(s.p, s.passage, s.query, true);
    EXPECT_EQ(held.prediction.start, free.prediction.start);
    EXPECT_GE(held.prediction.end, held.prediction.start);
    EXPECT_EQ(held.prediction.end_dist, free.prediction.end_dist);
    return;
  }
  GTEST_SKIP() << "no instance with end before start";
}

TEST(Pointer, ArgmaxTakesLowestIndexOnTies) {
  EXPECT_EQ(argmax_first({0.2, 0.4, 0.4}), 1u);
  EXPECT_EQ(argmax_first({0.5, 0.1, 0.5}, 1), 2u);
  EXPECT_THROW(argmax_first({}), std::out_of_range);
}

TEST(Pointer, SpanLossIsNegativeLogLikelihood) {
  const Tensor a1 = Tensor::matrix(3, 1, {0.2, 0.5, 0.3});
  const Tensor a2 = Tensor::matrix(3, 1, {0.1, 0.1, 0.8});
  EXPECT_NEAR(span_loss(a1, a2, 2, 3).item(), -std::log(0.5) - std::log(0.8), 1e-15);
  EXPECT_THROW(span_loss(a1, a2, 0, 1), std::out_of_range);
  EXPECT_THROW(span_loss(a1, a2, 1, 4), std::out_of_range);
}

TEST(Pointer, GradientCheckThroughDecoder) {
  auto s = make_setup(4, 3, 4, 21);
  // At the default init scale most gradients sit near finite-difference roundoff.
  Rng rng(4);
  std::vector<Tensor> params{s.passage, s.query};
  for (const auto& [name, slot] : s.store.slots()) {
    s.store.assign(name, oracle::random_tensor(slot.value.rows(), slot.value.cols(), rng, 1.5));
    params.push_back(slot.value);
  }
  const double err = gradient_check(
      [&] {
        const auto d = decode_span(s.p, s.passage, s.query);
        return span_loss(d.start_dist, d.end_dist, 2, 3);
      },
      params);
  EXPECT_LT(err, 1e-4);
}
