#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace memen {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Raised by any op whose operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass touches it
  bool requires_grad = false;
};
}  // namespace detail

/// Dense row-major float64 array with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Use clone() for
/// an independent copy. Most ops treat tensors as rank-2 matrices; a vector
/// is a 1 x d row.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Rows and columns of a rank-2 tensor. Throws ShapeError otherwise.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data();
  std::span<const double> data() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;
  double operator[](std::size_t i) const { return data()[i]; }
  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  /// Gradient buffer, allocated (zero-filled) on first access.
  std::span<double> grad_buffer() const;
  void zero_grad();
  void clear_grad();

  Tensor clone() const;
  /// Same storage? Identity comparison for handles.
  bool same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// Ordered record of differentiable operations.
///
/// An op records itself when any input requires grad and a tape is active on
/// the calling thread. backward() replays the entries in exact reverse
/// recording order and then clears the tape.
class Tape {
 public:
  struct Entry {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(std::string op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
  /// Throws if the loss is not a single element or was not recorded here.
  void backward(const Tensor& loss);

 private:
  std::vector<Entry> entries_;
};

/// Makes a tape the active one for the current thread for the scope lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording for the scope lifetime (evaluation passes).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Runs backward on the active tape.
void backward(const Tensor& loss);

}  // namespace memen
