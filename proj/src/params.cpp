#include "memen/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memen {

Tensor ParamStore::add(const std::string& name, Tensor value, bool trainable) {
  if (contains(name)) throw std::invalid_argument("parameter '" + name + "' already registered");
  value.set_requires_grad(trainable);
  slots_.emplace(name, Slot{value, trainable});
  return value;
}

void ParamStore::assign(const std::string& name, const Tensor& values) {
  Tensor target = get(name);
  if (target.shape() != values.shape()) {
    throw ShapeError("parameter '" + name + "': shape " + shape_to_string(target.shape()) + " vs " +
                     shape_to_string(values.shape()));
  }
  std::copy(values.data().begin(), values.data().end(), target.data().begin());
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second.value;
}

bool ParamStore::trainable(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second.trainable;
}

void ParamStore::set_trainable(const std::string& name, bool flag) {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  it->second.trainable = flag;
  it->second.value.set_requires_grad(flag);
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> names;
  for (const auto& [name, slot] : slots_) {
    if (slot.trainable) names.push_back(name);
  }
  return names;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, slot] : slots_) total += slot.value.size();
  return total;
}

void ParamStore::clear_grads() {
  for (auto& [name, slot] : slots_) {
    Tensor t = slot.value;
    t.clear_grad();
  }
}

Tensor uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::vector<double> values(rows * cols);
  for (auto& v : values) v = rng.uniform(-bound, bound);
  return Tensor({rows, cols}, std::move(values));
}

}  // namespace memen
