#include "memen/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace memen {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor: empty shape");
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor: zero dimension in shape " + shape_to_string(shape));
  }
  if (element_count(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_to_string(shape) + " needs " +
                     std::to_string(element_count(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  impl_ = std::make_shared<detail::TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1, 1}, {value}, requires_grad); }

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const auto n = values.size();
  return Tensor({1, n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values, bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("tensor: use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::size() const { return impl_ ? impl_->data.size() : 0; }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("expected a matrix, got shape " + shape_to_string(shape()));
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("expected a matrix, got shape " + shape_to_string(shape()));
  return impl_->shape[1];
}

std::span<double> Tensor::data() { return impl_->data; }
std::span<const double> Tensor::data() const { return impl_->data; }

double& Tensor::at(std::size_t r, std::size_t c) { return impl_->data[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor of shape " + shape_to_string(shape()) + " is not a scalar");
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { impl_->requires_grad = flag; }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }

std::span<double> Tensor::grad_buffer() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void Tensor::clear_grad() { impl_->grad.clear(); }

Tensor Tensor::clone() const {
  Tensor copy(impl_->shape, impl_->data, impl_->requires_grad);
  return copy;
}

void Tape::record(std::string op, std::vector<Tensor> inputs, Tensor output, std::function<void()> backward) {
  entries_.push_back(Entry{std::move(op), std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    entries_.clear();
    throw ShapeError("backward: loss must be a scalar, got shape " +
                     (loss.defined() ? shape_to_string(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    entries_.clear();
    throw std::logic_error("backward: loss was not produced from any tensor that requires grad");
  }
  Tensor seed = loss;
  seed.grad_buffer()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output.has_grad()) it->backward();
  }
  // Leaves that sit on the tape but received nothing still get a (zero) buffer.
  for (auto& entry : entries_) {
    for (auto& input : entry.inputs) {
      if (input.requires_grad()) input.grad_buffer();
    }
  }
  entries_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss) {
  Tape* tape = active_tape();
  if (!tape) throw std::logic_error("backward: no active tape");
  tape->backward(loss);
}

}  // namespace memen
