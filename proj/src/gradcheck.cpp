#include "memen/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace memen {

namespace {

double evaluate(const std::function<Tensor()>& build) {
  NoGradScope no_grad;
  return build().item();
}

}  // namespace

double gradient_check(const std::function<Tensor()>& build, std::vector<Tensor> params, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("gradient_check: epsilon must be positive");

  const double first = evaluate(build);
  const double second = evaluate(build);
  if (first != second) {
    throw std::runtime_error("gradient_check: loss is not deterministic (" + std::to_string(first) + " vs " +
                             std::to_string(second) + ")");
  }

  std::vector<bool> saved_flags;
  for (auto& p : params) {
    saved_flags.push_back(p.requires_grad());
    p.set_requires_grad(true);
    p.clear_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = build();
    tape.backward(loss);
  }

  double worst = 0.0;
  for (auto& p : params) {
    std::vector<double> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto values = p.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + epsilon;
      const double up = evaluate(build);
      values[i] = original - epsilon;
      const double down = evaluate(build);
      values[i] = original;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double err =
          std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i].clear_grad();
    params[i].set_requires_grad(saved_flags[i]);
  }
  return worst;
}

}  // namespace memen
