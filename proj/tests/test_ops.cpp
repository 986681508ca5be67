#include <gtest/gtest.h>

#include <cmath>

#include "memen/gradcheck.hpp"
#include "memen/ops.hpp"

using namespace memen;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  std::vector<double> v(r * c);
  for (auto& e : v) e = rng.uniform(-scale, scale);
  return Tensor({r, c}, v);
}

void expect_message_names(const std::function<void()>& fn, const std::string& a, const std::string& b,
                          const std::string& op) {
  try {
    fn();
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(a), std::string::npos) << msg;
    EXPECT_NE(msg.find(b), std::string::npos) << msg;
    EXPECT_NE(msg.find(op), std::string::npos) << msg;
  }
}

}  // namespace

TEST(Ops, SoftmaxOfEqualLogitsIsUniform) {
  Tensor s = ops::softmax(Tensor::row({0, 0, 0}), 1);
  for (double v : s.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Ops, SoftmaxIsStableForLargeLogits) {
  Tensor s = ops::softmax(Tensor::matrix(2, 1, {1000.0, 999.0}), 0);
  EXPECT_NEAR(s[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_TRUE(std::isfinite(s[1]));
}

TEST(Ops, SoftmaxRowsAndColumnsSumToOne) {
  Rng rng(11);
  Tensor a = random_matrix(4, 5, rng, 5.0);
  Tensor rows = ops::softmax(a, 1);
  Tensor cols = ops::softmax(a, 0);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) s += rows.at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  for (std::size_t j = 0; j < 5; ++j) {
    double s = 0;
    for (std::size_t i = 0; i < 4; ++i) s += cols.at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Ops, IdentityMatmul) {
  Rng rng(2);
  Tensor x = random_matrix(3, 4, rng);
  Tensor eye = Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor y = ops::matmul(eye, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(y[i], x[i]);
}

TEST(Ops, SigmoidOfZeroIsHalf) {
  EXPECT_DOUBLE_EQ(ops::sigmoid(Tensor::scalar(0.0)).item(), 0.5);
  EXPECT_NEAR(ops::sigmoid(Tensor::scalar(-800.0)).item(), 0.0, 1e-300);
  EXPECT_DOUBLE_EQ(ops::sigmoid(Tensor::scalar(800.0)).item(), 1.0);
}

TEST(Ops, ShapeErrorsNameOpAndShapes) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 2});
  expect_message_names([&] { ops::matmul(a, b); }, "[2,3]", "[2,2]", "matmul");
  expect_message_names([&] { ops::add(a, b); }, "[2,3]", "[2,2]", "add");
  expect_message_names([&] { ops::mul(a, b); }, "[2,3]", "[2,2]", "mul");
}

TEST(Ops, InvalidAxisThrows) {
  Tensor a = Tensor::zeros({2, 2});
  EXPECT_THROW(ops::softmax(a, 2), std::invalid_argument);
  EXPECT_THROW(ops::max(a, -1), std::invalid_argument);
  EXPECT_THROW(ops::sum(a, 3), std::invalid_argument);
}

TEST(Ops, MaxTakesFirstMaximumForGradient) {
  Tape tape;
  TapeScope scope(tape);
  Tensor a = Tensor::matrix(2, 3, {1, 5, 5, -1, -2, -3}, true);
  Tensor m = ops::max(a, 1);
  EXPECT_DOUBLE_EQ(m[0], 5.0);
  EXPECT_DOUBLE_EQ(m[1], -1.0);
  backward(ops::sum_all(m));
  const std::vector<double> expected = {0, 1, 0, 1, 0, 0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(a.grad()[i], expected[i]);
}

TEST(Ops, ConcatAndSlicesRoundTrip) {
  Rng rng(5);
  Tensor a = random_matrix(2, 3, rng);
  Tensor b = random_matrix(2, 2, rng);
  Tensor c = ops::concat({a, b}, 1);
  ASSERT_EQ(c.cols(), 5u);
  Tensor back = ops::slice_cols(c, 3, 2);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_DOUBLE_EQ(back[i], b[i]);
  Tensor v = ops::concat({a, a}, 0);
  ASSERT_EQ(v.rows(), 4u);
  Tensor r = ops::row(v, 3);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(r[j], a.at(1, j));
}

TEST(Ops, EmbeddingRejectsBadIds) {
  Tensor table = Tensor::zeros({3, 2});
  const std::vector<int> bad = {0, 3};
  EXPECT_THROW(ops::embedding(table, bad), std::out_of_range);
  const std::vector<int> neg = {-1};
  EXPECT_THROW(ops::embedding(table, neg), std::out_of_range);
}

TEST(Ops, EmbeddingGradientAccumulatesRepeatedIds) {
  Tape tape;
  TapeScope scope(tape);
  Tensor table = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<int> ids = {2, 0, 2};
  Tensor e = ops::embedding(table, ids);
  EXPECT_DOUBLE_EQ(e.at(0, 1), 6.0);
  backward(ops::sum_all(e));
  const std::vector<double> expected = {1, 1, 0, 0, 2, 2};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(table.grad()[i], expected[i]);
}

TEST(Dropout, RatioZeroIsIdentity) {
  Rng rng(1);
  Tensor a = Tensor::row({1, 2, 3});
  EXPECT_TRUE(ops::dropout(a, 0.0, rng).same(a));
}

TEST(Dropout, InvertedScalingAndBounds) {
  Rng rng(9);
  Tensor a = Tensor::filled({1, 20000}, 1.0);
  Tensor d = ops::dropout(a, 0.2, rng);
  double total = 0;
  std::size_t kept = 0;
  for (double v : d.data()) {
    EXPECT_TRUE(v == 0.0 || std::abs(v - 1.25) < 1e-15);
    if (v != 0.0) ++kept;
    total += v;
  }
  EXPECT_NEAR(static_cast<double>(kept) / 20000.0, 0.8, 0.02);
  EXPECT_NEAR(total / 20000.0, 1.0, 0.03);
  EXPECT_THROW(ops::dropout(a, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(ops::dropout(a, -0.1, rng), std::invalid_argument);
}

TEST(Dropout, EvaluationContextNeverDrops) {
  DropoutContext eval{0.5, nullptr};
  Tensor a = Tensor::row({1, 2});
  EXPECT_TRUE(eval.apply(a).same(a));
  EXPECT_FALSE(eval.training());
}

// Every differentiable op against central differences.
class OpGradient : public ::testing::Test {
 protected:
  Rng rng{17};
  void check(const std::function<Tensor()>& build, std::vector<Tensor> params) {
    EXPECT_LT(gradient_check(build, std::move(params)), 1e-6);
  }
};

TEST_F(OpGradient, Matmul) {
  Tensor a = random_matrix(3, 4, rng), b = random_matrix(4, 2, rng);
  check([&] { return ops::sum_all(ops::tanh(ops::matmul(a, b))); }, {a, b});
}

TEST_F(OpGradient, TransposeAddSubMul) {
  Tensor a = random_matrix(3, 2, rng), b = random_matrix(2, 3, rng), c = random_matrix(2, 3, rng);
  check([&] { return ops::sum_all(ops::tanh(ops::mul(ops::sub(ops::transpose(a), b), ops::add(b, c)))); }, {a, b, c});
}

TEST_F(OpGradient, AffineAddRowRepeat) {
  Tensor a = random_matrix(3, 2, rng), bias = random_matrix(1, 2, rng), col = random_matrix(3, 1, rng);
  check(
      [&] {
        Tensor x = ops::add(ops::add_row(ops::affine(a, -2.0, 0.5), bias), ops::repeat_cols(col, 2));
        return ops::sum_all(ops::tanh(ops::add(x, ops::repeat_rows(bias, 3))));
      },
      {a, bias, col});
}

TEST_F(OpGradient, SigmoidLog) {
  Tensor a = random_matrix(2, 3, rng);
  check([&] { return ops::sum_all(ops::log(ops::sigmoid(a))); }, {a});
}

TEST_F(OpGradient, SoftmaxBothAxes) {
  Tensor a = random_matrix(3, 4, rng), w = random_matrix(3, 4, rng);
  check([&] { return ops::sum_all(ops::mul(ops::softmax(a, 0), w)); }, {a});
  check([&] { return ops::sum_all(ops::mul(ops::softmax(a, 1), w)); }, {a});
}

TEST_F(OpGradient, MaxSumBothAxes) {
  Tensor a = random_matrix(3, 4, rng);
  check([&] { return ops::sum_all(ops::tanh(ops::max(a, 1))); }, {a});
  check([&] { return ops::sum_all(ops::tanh(ops::max(a, 0))); }, {a});
  check([&] { return ops::sum_all(ops::tanh(ops::sum(a, 0))); }, {a});
  check([&] { return ops::sum_all(ops::tanh(ops::sum(a, 1))); }, {a});
}

TEST_F(OpGradient, ConcatSliceReshapePick) {
  Tensor a = random_matrix(2, 3, rng), b = random_matrix(2, 3, rng);
  check(
      [&] {
        Tensor c = ops::concat({a, b}, 0);
        Tensor d = ops::concat({ops::slice_rows(c, 1, 2), ops::slice_cols(ops::slice_rows(c, 2, 2), 0, 2)}, 1);
        Tensor e = ops::reshape(d, {1, d.size()});
        return ops::add(ops::sum_all(ops::tanh(e)), ops::pick(a, 1, 2));
      },
      {a, b});
}

TEST_F(OpGradient, Embedding) {
  Tensor table = random_matrix(4, 3, rng);
  const std::vector<int> ids = {3, 1, 3};
  check([&] { return ops::sum_all(ops::tanh(ops::embedding(table, ids))); }, {table});
}
