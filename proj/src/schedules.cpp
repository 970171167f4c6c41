#include "afda/schedules.hpp"

#include <algorithm>
#include <cmath>

namespace afda {

double mu_schedule(int t, int total_epochs, double lambda) {
  if (total_epochs < 1) throw std::invalid_argument("mu_schedule: T must be >= 1");
  if (t < 0 || t > total_epochs) throw std::invalid_argument("mu_schedule: t out of [0, T]");
  return std::tanh(lambda * static_cast<double>(t) / (2.0 * static_cast<double>(total_epochs)));
}

double eta_schedule(int t, int ramp_epochs, double eta_max, Backend backend) {
  if (ramp_epochs < 0) throw std::invalid_argument("eta_schedule: ramp must be >= 0");
  switch (backend) {
    case Backend::none: return 0.0;
    case Backend::vat: return 1.0;
    case Backend::pi:
    case Backend::mean_teacher: {
      double progress = ramp_epochs == 0
                            ? 1.0
                            : std::min(static_cast<double>(t) / static_cast<double>(ramp_epochs), 1.0);
      double gap = 1.0 - progress;
      return eta_max * std::exp(-5.0 * gap * gap);
    }
  }
  return 0.0;
}

namespace {

// Fraction of the final decay window covered at epoch t; 0 before the
// window opens at 80% of training, 1 at t == T.
double decay_progress(int t, int total_epochs) {
  double start = 0.8 * static_cast<double>(total_epochs);
  if (static_cast<double>(t) <= start) return 0.0;
  double window = static_cast<double>(total_epochs) - start;
  return std::min((static_cast<double>(t) - start) / window, 1.0);
}

}  // namespace

double lr_schedule(int t, int total_epochs, double gamma0) {
  if (total_epochs < 1) throw std::invalid_argument("lr_schedule: T must be >= 1");
  return gamma0 * (1.0 - decay_progress(t, total_epochs));
}

double beta1_schedule(int t, int total_epochs) {
  if (total_epochs < 1) throw std::invalid_argument("beta1_schedule: T must be >= 1");
  return 0.9 - 0.4 * decay_progress(t, total_epochs);
}

ScheduleState ScheduleState::at(int t, int total_epochs, double lambda, int eta_ramp_epochs,
                                double eta_max, Backend backend, double gamma0) {
  ScheduleState s;
  s.t = t;
  s.total_epochs = total_epochs;
  s.lambda = lambda;
  s.mu = mu_schedule(t, total_epochs, lambda);
  s.eta = eta_schedule(t, eta_ramp_epochs, eta_max, backend);
  s.gamma = lr_schedule(t, total_epochs, gamma0);
  s.beta1 = beta1_schedule(t, total_epochs);
  return s;
}

}  // namespace afda
