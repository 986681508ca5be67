#pragma once

#include <functional>
#include <vector>

#include "memen/tensor.hpp"

namespace memen {

/// Compares reverse-mode gradients against central finite differences.
///
/// `build` must return a scalar loss that depends on `params` only through
/// their current values. Returns the max over all parameter entries of
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
/// Throws if two evaluations at the same point disagree.
double gradient_check(const std::function<Tensor()>& build, std::vector<Tensor> params, double epsilon = 1e-5);

}  // namespace memen
