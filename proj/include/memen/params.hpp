#pragma once

#include <map>
#include <string>
#include <vector>

#include "memen/rng.hpp"
#include "memen/tensor.hpp"

namespace memen {

/// Every learned weight of a model, keyed by a dotted name
/// ("encoder.lstm.fw.w_input", "hop2.gate.bias", ...).
///
/// The typed parameter structs of each layer hold handles into this store,
/// so an update applied here is seen by every layer.
class ParamStore {
 public:
  struct Slot {
    Tensor value;
    bool trainable = true;
  };

  Tensor add(const std::string& name, Tensor value, bool trainable = true);
  /// Replaces the values of an existing parameter in place (shape must match).
  void assign(const std::string& name, const Tensor& values);
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return slots_.count(name) != 0; }
  bool trainable(const std::string& name) const;
  void set_trainable(const std::string& name, bool flag);

  const std::map<std::string, Slot>& slots() const { return slots_; }
  std::vector<std::string> trainable_names() const;
  std::size_t parameter_count() const;
  void clear_grads();

 private:
  std::map<std::string, Slot> slots_;
};

/// Uniform in +-1/sqrt(rows): rows is the fan-in for the x * W convention.
Tensor uniform_init(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace memen
