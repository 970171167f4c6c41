#pragma once

#include <vector>

#include "afda/tensor.hpp"

namespace afda {

enum class Direction { descent, ascent };

/// Adam moments for one parameter group. beta1 is supplied per step (it is
/// scheduled); beta2 and eps are fixed.
struct AdamState {
  std::vector<Tensor> m, v;
  long step = 0;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zero moments shaped like the given parameters.
  static AdamState like(const std::vector<const Tensor*>& params);
};

/// One bias-corrected Adam step over a parameter group. Ascent negates the
/// update. The step counter advances once per call. A non-finite gradient
/// aborts the step before touching any parameter.
void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, double lr, double beta1,
               Direction direction);

}  // namespace afda
