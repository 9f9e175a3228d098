#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jlm/nn/optim.hpp"

namespace jlm::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double floor = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor: |a - n| / max(|a|, |n|, floor), where floor is the
  // larger of abs_floor and the resolution limit of central differences,
  // roundoff_factor * eps * |f| / (2 step), divided by the tolerance.
  double abs_floor = 1e-6;
  double roundoff_factor = 32.0;
};

// Compares analytic gradients of a deterministic scalar function against
// central differences over every entry of every named parameter.
GradCheckReport grad_check(const std::function<Tensor()>& fn,
                           std::vector<std::pair<std::string, Tensor>> params,
                           const GradCheckOptions& opt = {});

inline GradCheckReport grad_check(const std::function<Tensor()>& fn, ParamStore& store,
                                  const GradCheckOptions& opt = {}) {
  return grad_check(fn, store.entries(), opt);
}

}  // namespace jlm::nn
