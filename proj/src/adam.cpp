#include "afda/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace afda {

AdamState AdamState::like(const std::vector<const Tensor*>& params) {
  AdamState s;
  for (const Tensor* p : params) {
    s.m.push_back(Tensor::zeros_like(*p));
    s.v.push_back(Tensor::zeros_like(*p));
  }
  return s;
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, double lr, double beta1,
               Direction direction) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");

  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i]->same_shape(*params[i]))
      throw std::invalid_argument("adam_step: gradient shape mismatch at tensor " +
                                  std::to_string(i));
    if (!grads[i]->all_finite())
      throw std::runtime_error("adam_step: non-finite gradient at tensor " +
                               std::to_string(i) + ", step aborted");
  }

  ++state.step;
  double t = static_cast<double>(state.step);
  double mc = 1.0 - std::pow(beta1, t);
  double vc = 1.0 - std::pow(state.beta2, t);
  double sign = direction == Direction::descent ? -1.0 : 1.0;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      double m_hat = m[j] / mc;
      double v_hat = v[j] / vc;
      p[j] += sign * lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace afda
