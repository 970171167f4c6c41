#pragma once

#include <functional>
#include <string>
#include <vector>

#include "afda/tape.hpp"

namespace afda {

/// Builds a scalar loss on a fresh tape from the given parameter tensors.
/// Must register one leaf per parameter (in order) into `param_ids` and
/// return the root node id. The mapping params -> loss must be deterministic.
using TapeLossBuilder =
    std::function<int(Tape&, const std::vector<Tensor>& params, std::vector<int>& param_ids)>;

struct FiniteDiffReport {
  bool pass = false;
  double max_rel_err = 0.0;
  std::string worst_location;
};

/// Compares backward() gradients against central finite differences
/// (f(p+h) - f(p-h)) / 2h for every coordinate of every parameter.
/// A non-finite loss at a perturbed point is reported as a failure with its
/// location. Relative error uses max(|analytic|, |numeric|, 1e-6) as scale.
FiniteDiffReport finite_diff_check(const TapeLossBuilder& build,
                                   std::vector<Tensor> params, double h, double tol);

}  // namespace afda
