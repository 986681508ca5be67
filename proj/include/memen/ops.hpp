#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "memen/rng.hpp"
#include "memen/tensor.hpp"

// Differentiable ops. None of them broadcast: every alignment between
// operands of different shapes goes through an explicit op (add_row,
// repeat_rows, repeat_cols).
namespace memen::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
/// scale * a + shift, elementwise.
Tensor affine(const Tensor& a, double scale, double shift = 0.0);
/// Adds the 1 x m row `bias` to every row of the n x m matrix `a`.
Tensor add_row(const Tensor& a, const Tensor& bias);
/// 1 x m -> n x m.
Tensor repeat_rows(const Tensor& row, std::size_t n);
/// n x 1 -> n x m.
Tensor repeat_cols(const Tensor& col, std::size_t m);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);

/// Softmax along `axis` (0: down each column, 1: across each row).
Tensor softmax(const Tensor& a, int axis);
/// Max along `axis`; axis 1 gives the n x 1 row-max, axis 0 the 1 x m column-max.
/// The gradient flows to the first maximal element.
Tensor max(const Tensor& a, int axis);
Tensor sum(const Tensor& a, int axis);
Tensor sum_all(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor row(const Tensor& a, std::size_t i);
/// Single element (r, c) as a 1 x 1 tensor.
Tensor pick(const Tensor& a, std::size_t r, std::size_t c);
Tensor reshape(const Tensor& a, Shape shape);

/// Rows of `table` selected by `ids`, as an ids.size() x d matrix.
Tensor embedding(const Tensor& table, std::span<const int> ids);

/// Inverted dropout: kept entries are divided by (1 - ratio). ratio 0 returns
/// the input handle unchanged.
Tensor dropout(const Tensor& a, double ratio, Rng& rng);

}  // namespace memen::ops

namespace memen {

/// Dropout settings threaded through a forward pass. A null rng means
/// evaluation mode: apply() is then the identity.
struct DropoutContext {
  double ratio = 0.0;
  Rng* rng = nullptr;

  bool training() const { return rng != nullptr; }
  Tensor apply(const Tensor& x) const { return rng && ratio > 0.0 ? ops::dropout(x, ratio, *rng) : x; }
};

}  // namespace memen
