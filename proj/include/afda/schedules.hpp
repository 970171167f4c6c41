#pragma once

#include <stdexcept>

namespace afda {

enum class Backend { none, pi, mean_teacher, vat };

/// Adversarial-weight ramp mu(t) = tanh(lambda * t / (2T)), the
/// sign-corrected reading of the published schedule: it rises monotonically
/// from 0 towards tanh(lambda / 2).
double mu_schedule(int t, int total_epochs, double lambda);

/// Consistency weight: constant 1 for VAT, the usual exponential ramp
/// eta_max * exp(-5 (1 - min(t / ramp, 1))^2) for Pi / Mean-Teacher, and 0
/// when no consistency backend is active.
double eta_schedule(int t, int ramp_epochs, double eta_max, Backend backend);

/// Learning rate: constant for the first 80% of training, then linear decay
/// to zero at t == T.
double lr_schedule(int t, int total_epochs, double gamma0);

/// Adam beta1: 0.9 for the first 80% of training, then linear to 0.5.
double beta1_schedule(int t, int total_epochs);

/// All schedule values for one epoch.
struct ScheduleState {
  int t = 0;
  int total_epochs = 0;
  double lambda = 5.0;
  double mu = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  double beta1 = 0.9;

  static ScheduleState at(int t, int total_epochs, double lambda, int eta_ramp_epochs,
                          double eta_max, Backend backend, double gamma0);
};

}  // namespace afda
