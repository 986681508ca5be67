#include "memen/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace memen::ops {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MutMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                   shape_to_string(b.shape()));
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(a.shape()));
}

void require_axis(const char* op, int axis) {
  if (axis != 0 && axis != 1) throw std::invalid_argument(std::string(op) + ": invalid axis " + std::to_string(axis));
}

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (!active_tape()) return false;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

bool recording(const std::vector<Tensor>& inputs) {
  if (!active_tape()) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void record(const char* op, std::vector<Tensor> inputs, Tensor& out, std::function<void()> backward) {
  out.set_requires_grad(true);
  active_tape()->record(op, std::move(inputs), out, std::move(backward));
}

template <typename Fn, typename Deriv>
Tensor unary(const char* op, const Tensor& a, Fn fn, Deriv deriv_from_output) {
  std::vector<double> values(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = fn(in[i]);
  Tensor out(a.shape(), std::move(values));
  if (recording({&a})) {
    record(op, {a}, out, [a, out, deriv_from_output]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto x = a.data();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * deriv_from_output(x[i], y[i]);
    });
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  const auto n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out = Tensor::zeros({n, m});
  as_matrix(out.data(), n, m).noalias() = as_matrix(a.data(), n, k) * as_matrix(b.data(), k, m);
  if (recording({&a, &b})) {
    record("matmul", {a, b}, out, [a, b, out, n, k, m]() mutable {
      auto g = as_matrix(out.grad(), n, m);
      if (a.requires_grad()) as_matrix(a.grad_buffer(), n, k).noalias() += g * as_matrix(b.data(), k, m).transpose();
      if (b.requires_grad()) as_matrix(b.grad_buffer(), k, m).noalias() += as_matrix(a.data(), n, k).transpose() * g;
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const auto n = a.rows(), m = a.cols();
  Tensor out = Tensor::zeros({m, n});
  as_matrix(out.data(), m, n) = as_matrix(a.data(), n, m).transpose();
  if (recording({&a})) {
    record("transpose", {a}, out, [a, out, n, m]() mutable {
      as_matrix(a.grad_buffer(), n, m) += as_matrix(out.grad(), m, n).transpose();
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("add", a, b);
  std::vector<double> values(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = x[i] + y[i];
  Tensor out(a.shape(), std::move(values));
  if (recording({&a, &b})) {
    record("add", {a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("sub", a, b);
  std::vector<double> values(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = x[i] - y[i];
  Tensor out(a.shape(), std::move(values));
  if (recording({&a, &b})) {
    record("sub", {a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("mul", a, b);
  std::vector<double> values(a.size());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = x[i] * y[i];
  Tensor out(a.shape(), std::move(values));
  if (recording({&a, &b})) {
    record("mul", {a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto y = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto x = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
      }
    });
  }
  return out;
}

Tensor affine(const Tensor& a, double scale, double shift) {
  return unary(
      "affine", a, [scale, shift](double x) { return scale * x + shift; },
      [scale](double, double) { return scale; });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  require_matrix("add_row", a);
  require_matrix("add_row", bias);
  if (bias.rows() != 1 || bias.cols() != a.cols()) mismatch("add_row", a, bias);
  const auto n = a.rows(), m = a.cols();
  std::vector<double> values(a.data().begin(), a.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) values[i * m + j] += b[j];
  Tensor out(a.shape(), std::move(values));
  if (recording({&a, &bias})) {
    record("add_row", {a, bias}, out, [a, bias, out, n, m]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_buffer();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) gb[j] += g[i * m + j];
      }
    });
  }
  return out;
}

Tensor repeat_rows(const Tensor& row_vec, std::size_t n) {
  require_matrix("repeat_rows", row_vec);
  if (row_vec.rows() != 1) throw ShapeError("repeat_rows: expected a 1 x m row, got " + shape_to_string(row_vec.shape()));
  if (n == 0) throw ShapeError("repeat_rows: zero repetitions");
  const auto m = row_vec.cols();
  std::vector<double> values(n * m);
  auto r = row_vec.data();
  for (std::size_t i = 0; i < n; ++i) std::copy(r.begin(), r.end(), values.begin() + static_cast<long>(i * m));
  Tensor out({n, m}, std::move(values));
  if (recording({&row_vec})) {
    record("repeat_rows", {row_vec}, out, [row_vec, out, n, m]() mutable {
      auto g = out.grad();
      auto gr = row_vec.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gr[j] += g[i * m + j];
    });
  }
  return out;
}

Tensor repeat_cols(const Tensor& col, std::size_t m) {
  require_matrix("repeat_cols", col);
  if (col.cols() != 1) throw ShapeError("repeat_cols: expected an n x 1 column, got " + shape_to_string(col.shape()));
  if (m == 0) throw ShapeError("repeat_cols: zero repetitions");
  const auto n = col.rows();
  std::vector<double> values(n * m);
  auto c = col.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) values[i * m + j] = c[i];
  Tensor out({n, m}, std::move(values));
  if (recording({&col})) {
    record("repeat_cols", {col}, out, [col, out, n, m]() mutable {
      auto g = out.grad();
      auto gc = col.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gc[i] += g[i * m + j];
    });
  }
  return out;
}

Tensor tanh(const Tensor& a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& a) {
  return unary(
      "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softmax(const Tensor& a, int axis) {
  require_matrix("softmax", a);
  require_axis("softmax", axis);
  const auto n = a.rows(), m = a.cols();
  // Walk "lanes": each lane is one row (axis 1) or one column (axis 0).
  const auto lanes = axis == 1 ? n : m;
  const auto len = axis == 1 ? m : n;
  const auto stride = axis == 1 ? std::size_t{1} : m;
  auto lane_start = [=](std::size_t l) { return axis == 1 ? l * m : l; };
  std::vector<double> values(a.size());
  auto x = a.data();
  for (std::size_t l = 0; l < lanes; ++l) {
    const auto s = lane_start(l);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) top = std::max(top, x[s + k * stride]);
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double e = std::exp(x[s + k * stride] - top);
      values[s + k * stride] = e;
      total += e;
    }
    for (std::size_t k = 0; k < len; ++k) values[s + k * stride] /= total;
  }
  Tensor out(a.shape(), std::move(values));
  if (recording({&a})) {
    record("softmax", {a}, out, [a, out, lanes, len, stride, lane_start]() mutable {
      auto g = out.grad();
      auto y = out.data();
      auto ga = a.grad_buffer();
      for (std::size_t l = 0; l < lanes; ++l) {
        const auto s = lane_start(l);
        double dot = 0.0;
        for (std::size_t k = 0; k < len; ++k) dot += g[s + k * stride] * y[s + k * stride];
        for (std::size_t k = 0; k < len; ++k) {
          const auto i = s + k * stride;
          ga[i] += y[i] * (g[i] - dot);
        }
      }
    });
  }
  return out;
}

Tensor max(const Tensor& a, int axis) {
  require_matrix("max", a);
  require_axis("max", axis);
  const auto n = a.rows(), m = a.cols();
  const auto lanes = axis == 1 ? n : m;
  const auto len = axis == 1 ? m : n;
  const auto stride = axis == 1 ? std::size_t{1} : m;
  std::vector<std::size_t> winners(lanes);
  std::vector<double> values(lanes);
  auto x = a.data();
  for (std::size_t l = 0; l < lanes; ++l) {
    const auto s = axis == 1 ? l * m : l;
    std::size_t best = s;
    for (std::size_t k = 1; k < len; ++k) {
      if (x[s + k * stride] > x[best]) best = s + k * stride;
    }
    winners[l] = best;
    values[l] = x[best];
  }
  Tensor out(axis == 1 ? Shape{n, 1} : Shape{1, m}, std::move(values));
  if (recording({&a})) {
    record("max", {a}, out, [a, out, winners = std::move(winners)]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t l = 0; l < winners.size(); ++l) ga[winners[l]] += g[l];
    });
  }
  return out;
}

Tensor sum(const Tensor& a, int axis) {
  require_matrix("sum", a);
  require_axis("sum", axis);
  const auto n = a.rows(), m = a.cols();
  std::vector<double> values(axis == 1 ? n : m, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) values[axis == 1 ? i : j] += x[i * m + j];
  Tensor out(axis == 1 ? Shape{n, 1} : Shape{1, m}, std::move(values));
  if (recording({&a})) {
    record("sum", {a}, out, [a, out, n, m, axis]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ga[i * m + j] += g[axis == 1 ? i : j];
    });
  }
  return out;
}

Tensor sum_all(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor out = Tensor::scalar(total);
  if (recording({&a})) {
    record("sum_all", {a}, out, [a, out]() mutable {
      const double g = out.grad()[0];
      for (double& v : a.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  require_axis("concat", axis);
  if (parts.empty()) throw ShapeError("concat: no operands");
  for (const auto& p : parts) require_matrix("concat", p);
  const auto& first = parts.front();
  std::size_t n = 0, m = 0;
  if (axis == 0) {
    m = first.cols();
    for (const auto& p : parts) {
      if (p.cols() != m) mismatch("concat", first, p);
      n += p.rows();
    }
  } else {
    n = first.rows();
    for (const auto& p : parts) {
      if (p.rows() != n) mismatch("concat", first, p);
      m += p.cols();
    }
  }
  std::vector<double> values(n * m);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    auto src = p.data();
    if (axis == 0) {
      std::copy(src.begin(), src.end(), values.begin() + static_cast<long>(offset * m));
      offset += p.rows();
    } else {
      const auto w = p.cols();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < w; ++j) values[i * m + offset + j] = src[i * w + j];
      offset += w;
    }
  }
  Tensor out({n, m}, std::move(values));
  if (recording(parts)) {
    record("concat", parts, out, [parts, out, axis, n, m]() mutable {
      auto g = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const auto pr = p.rows(), pc = p.cols();
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < pr; ++i)
            for (std::size_t j = 0; j < pc; ++j)
              gp[i * pc + j] += axis == 0 ? g[(offset + i) * m + j] : g[i * m + offset + j];
        }
        offset += axis == 0 ? pr : pc;
      }
      (void)n;
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  require_matrix("slice_rows", a);
  if (count == 0 || begin + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_to_string(a.shape()));
  }
  const auto m = a.cols();
  auto src = a.data().subspan(begin * m, count * m);
  Tensor out({count, m}, std::vector<double>(src.begin(), src.end()));
  if (recording({&a})) {
    record("slice_rows", {a}, out, [a, out, begin, m]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer().subspan(begin * m);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  require_matrix("slice_cols", a);
  if (count == 0 || begin + count > a.cols()) {
    throw ShapeError("slice_cols: cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + shape_to_string(a.shape()));
  }
  const auto n = a.rows(), m = a.cols();
  std::vector<double> values(n * count);
  auto x = a.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) values[i * count + j] = x[i * m + begin + j];
  Tensor out({n, count}, std::move(values));
  if (recording({&a})) {
    record("slice_cols", {a}, out, [a, out, begin, count, n, m]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < count; ++j) ga[i * m + begin + j] += g[i * count + j];
    });
  }
  return out;
}

Tensor row(const Tensor& a, std::size_t i) { return slice_rows(a, i, 1); }

Tensor pick(const Tensor& a, std::size_t r, std::size_t c) {
  require_matrix("pick", a);
  if (r >= a.rows() || c >= a.cols()) {
    throw ShapeError("pick: index (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range for " +
                     shape_to_string(a.shape()));
  }
  const auto flat = r * a.cols() + c;
  Tensor out = Tensor::scalar(a.data()[flat]);
  if (recording({&a})) {
    record("pick", {a}, out, [a, out, flat]() mutable { a.grad_buffer()[flat] += out.grad()[0]; });
  }
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  Tensor out(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  if (recording({&a})) {
    record("reshape", {a}, out, [a, out]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
  }
  return out;
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  require_matrix("embedding", table);
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  const auto vocab = table.rows(), d = table.cols();
  std::vector<double> values(ids.size() * d);
  auto src = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(vocab) + " rows");
    }
    std::copy_n(src.begin() + static_cast<long>(ids[i] * d), d, values.begin() + static_cast<long>(i * d));
  }
  Tensor out({ids.size(), d}, std::move(values));
  if (recording({&table})) {
    std::vector<int> kept(ids.begin(), ids.end());
    record("embedding", {table}, out, [table, out, kept = std::move(kept), d]() mutable {
      auto g = out.grad();
      auto gt = table.grad_buffer();
      for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) gt[static_cast<std::size_t>(kept[i]) * d + j] += g[i * d + j];
    });
  }
  return out;
}

Tensor dropout(const Tensor& a, double ratio, Rng& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("dropout: ratio " + std::to_string(ratio) + " outside [0, 1)");
  }
  if (ratio == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - ratio);
  std::vector<double> mask(a.size());
  for (auto& v : mask) v = rng.bernoulli(ratio) ? 0.0 : keep_scale;
  std::vector<double> values(a.size());
  auto x = a.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = x[i] * mask[i];
  Tensor out(a.shape(), std::move(values));
  if (recording({&a})) {
    record("dropout", {a}, out, [a, out, mask = std::move(mask)]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
    });
  }
  return out;
}

}  // namespace memen::ops
