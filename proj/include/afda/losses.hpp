#pragma once

#include <vector>

#include "afda/models.hpp"
#include "afda/rng.hpp"
#include "afda/tape.hpp"

namespace afda {

enum class DivergenceKind { kl, squared_euclidean };

enum class PerturbationKind { random_gaussian, vat };

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::vat;
  double epsilon = 0.5;     // perturbation magnitude, input-space units
  double vat_xi = 1e-6;     // finite-difference probe scale
  int vat_power_iters = 1;

  void validate() const;
};

/// (B, K) one-hot rows for 0-based labels; rejects labels outside [0, K).
Tensor one_hot(const std::vector<int>& labels, std::size_t k);

/// Mean cross-entropy of logits against labels, computed as LSE(z) - z_y.
int cross_entropy_mean(Tape& tape, int logits, const std::vector<int>& labels);

/// Supervised loss: mean cross-entropy of g(f(x_l)) against y_l.
int supervised_loss(Tape& tape, const MlpBinding& f, const MlpBinding& g,
                    int x_l, const std::vector<int>& y_l);

/// Adversarial alignment loss
///   (1/N) sum log d(f(x_l)) + (1/M) sum log(1 - d(f(x_ul))).
/// Built on the discriminator's logit through log-sum-exp so both log terms
/// stay finite for arbitrarily confident discriminators.
int adversarial_loss(Tape& tape, const MlpBinding& f, const MlpBinding& d,
                     int x_l, int x_ul);

/// Consistency loss: mean div(target(x), student(x + perturbation)) over the
/// batch. The target branch (softmax of the target network on the clean
/// input) is wrapped in stop-gradient. Pass the student's own bindings as
/// the target for Pi/VAT, the teacher's for Mean-Teacher.
int consistency_loss(Tape& tape, const MlpBinding& f_student, const MlpBinding& g_student,
                     const MlpBinding& f_target, const MlpBinding& g_target,
                     int x_clean, const Tensor& perturbation, DivergenceKind div);

/// Mean prediction entropy over the batch, H(p) = LSE(z) - sum_k p_k z_k.
int entropy_loss(Tape& tape, const MlpBinding& f, const MlpBinding& g, int x_ul);

/// Gaussian noise rescaled so every sample's perturbation has L2 norm
/// exactly epsilon (zero tensor when epsilon == 0).
Tensor random_perturbation(const Tensor& x, double epsilon, Rng& rng);

/// Virtual-adversarial perturbation: per sample, epsilon times the unit
/// direction found by power iteration on r -> KL(p(x) || p(x + xi r)).
/// The result carries no gradient path to the model parameters. Rows whose
/// iteration gradient vanishes fall back to their random start direction;
/// their count is reported through fallback_rows when non-null.
Tensor vat_perturbation(const Mlp& f, const Mlp& g, const Tensor& x,
                        const PerturbationSpec& spec, Rng& rng,
                        int* fallback_rows = nullptr);

/// Plain-tensor softmax / log-softmax rows (evaluation helpers).
Tensor softmax_rows(const Tensor& logits);
Tensor log_softmax_rows(const Tensor& logits);

}  // namespace afda
