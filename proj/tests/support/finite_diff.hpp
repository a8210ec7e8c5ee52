#pragma once

// Independent gradient oracle: central finite differences over any scalar
// function of a tensor's entries. Used by unit tests and the acceptance
// suite; it never touches the tape.

#include <cmath>
#include <functional>
#include <vector>

#include "cvar/tensor.hpp"

namespace oracle {

// d loss / d x[i] for every i, via central differences with step h.
inline std::vector<double> finite_diff(
    cvar::Tensor& x, const std::function<double()>& loss_value, double h = 1e-5) {
  auto vals = x.values_mut();
  std::vector<double> grad(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double saved = vals[i];
    vals[i] = saved + h;
    const double up = loss_value();
    vals[i] = saved - h;
    const double down = loss_value();
    vals[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Relative error with the denominator floored at 1 so near-zero reference
// gradients are compared absolutely.
inline double rel_error(double actual, double expected) {
  return std::abs(actual - expected) / std::max(1.0, std::abs(expected));
}

inline double max_rel_error(std::span<const double> actual,
                            const std::vector<double>& expected) {
  double worst = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    worst = std::max(worst, rel_error(actual[i], expected[i]));
  }
  return worst;
}

}  // namespace oracle
