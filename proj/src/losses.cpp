#include "afda/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace afda {

void PerturbationSpec::validate() const {
  if (epsilon <= 0.0) throw std::invalid_argument("perturbation: epsilon must be > 0");
  if (kind == PerturbationKind::vat) {
    if (vat_xi <= 0.0) throw std::invalid_argument("perturbation: vat_xi must be > 0");
    if (vat_power_iters < 1)
      throw std::invalid_argument("perturbation: vat_power_iters must be >= 1");
  }
}

Tensor one_hot(const std::vector<int>& labels, std::size_t k) {
  Tensor out({labels.size(), k});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k)
      throw std::out_of_range("one_hot: label out of range");
    out.at(i, static_cast<std::size_t>(y)) = 1.0;
  }
  return out;
}

int cross_entropy_mean(Tape& tape, int logits, const std::vector<int>& labels) {
  const Tensor& z = tape.val(logits);
  if (z.rows() == 0 || labels.empty())
    throw std::invalid_argument("cross_entropy_mean: empty batch");
  if (z.rows() != labels.size())
    throw std::invalid_argument("cross_entropy_mean: batch/label count mismatch");
  int mask = tape.leaf(one_hot(labels, z.cols()));
  int picked = tape.sum(tape.mul(logits, mask));
  double inv_n = 1.0 / static_cast<double>(labels.size());
  return tape.sub(tape.mean(tape.lse_row(logits)), tape.scale(picked, inv_n));
}

int supervised_loss(Tape& tape, const MlpBinding& f, const MlpBinding& g,
                    int x_l, const std::vector<int>& y_l) {
  int z = mlp_forward_logits(tape, g, mlp_forward(tape, f, x_l));
  return cross_entropy_mean(tape, z, y_l);
}

namespace {

// log sigmoid(a) = a - softplus(a) and log(1 - sigmoid(a)) = -softplus(a),
// with softplus(a) = LSE([a, 0]) built per row via a constant (1x2) pad.
int softplus_sum(Tape& tape, int logits_col) {
  int pad = tape.leaf(Tensor::matrix(1, 2, {1.0, 0.0}));
  return tape.sum(tape.lse_row(tape.matmul(logits_col, pad)));
}

}  // namespace

int adversarial_loss(Tape& tape, const MlpBinding& f, const MlpBinding& d,
                     int x_l, int x_ul) {
  std::size_t n = tape.val(x_l).rows(), m = tape.val(x_ul).rows();
  if (n == 0 || m == 0) throw std::invalid_argument("adversarial_loss: empty batch");

  int a_l = mlp_forward_logits(tape, d, mlp_forward(tape, f, x_l));
  int a_ul = mlp_forward_logits(tape, d, mlp_forward(tape, f, x_ul));

  int log_d_sum = tape.sub(tape.sum(a_l), softplus_sum(tape, a_l));
  int log_not_d_sum = softplus_sum(tape, a_ul);

  return tape.add(tape.scale(log_d_sum, 1.0 / static_cast<double>(n)),
                  tape.scale(log_not_d_sum, -1.0 / static_cast<double>(m)));
}

int consistency_loss(Tape& tape, const MlpBinding& f_student, const MlpBinding& g_student,
                     const MlpBinding& f_target, const MlpBinding& g_target,
                     int x_clean, const Tensor& perturbation, DivergenceKind div) {
  std::size_t batch = tape.val(x_clean).rows();
  if (batch == 0) throw std::invalid_argument("consistency_loss: empty batch");
  if (!tape.val(x_clean).same_shape(perturbation))
    throw std::invalid_argument("consistency_loss: perturbation shape mismatch");

  int x_pert = tape.add(x_clean, tape.leaf(perturbation));
  int z_s = mlp_forward_logits(tape, g_student, mlp_forward(tape, f_student, x_pert));
  int z_t = mlp_forward_logits(tape, g_target, mlp_forward(tape, f_target, x_clean));

  double inv_m = 1.0 / static_cast<double>(batch);
  int p_t = tape.stop_gradient(tape.softmax_row(z_t));
  if (div == DivergenceKind::kl) {
    int log_p = tape.stop_gradient(tape.sub(z_t, tape.lse_row(z_t)));
    int log_q = tape.sub(z_s, tape.lse_row(z_s));
    return tape.scale(tape.sum(tape.mul(p_t, tape.sub(log_p, log_q))), inv_m);
  }
  int diff = tape.sub(p_t, tape.softmax_row(z_s));
  return tape.scale(tape.sum(tape.square(diff)), inv_m);
}

int entropy_loss(Tape& tape, const MlpBinding& f, const MlpBinding& g, int x_ul) {
  std::size_t batch = tape.val(x_ul).rows();
  if (batch == 0) throw std::invalid_argument("entropy_loss: empty batch");
  int z = mlp_forward_logits(tape, g, mlp_forward(tape, f, x_ul));
  int p = tape.softmax_row(z);
  double inv_m = 1.0 / static_cast<double>(batch);
  return tape.scale(tape.sub(tape.sum(tape.lse_row(z)), tape.sum(tape.mul(p, z))), inv_m);
}

namespace {

void normalize_rows(Tensor& t, double target_norm, Rng* fallback_rng, int* fallback_rows) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double norm2 = 0.0;
    for (std::size_t c = 0; c < t.cols(); ++c) norm2 += t.at(r, c) * t.at(r, c);
    double norm = std::sqrt(norm2);
    if (norm < 1e-300) {
      if (fallback_rng == nullptr)
        throw std::runtime_error("normalize_rows: zero row without fallback");
      if (fallback_rows) ++*fallback_rows;
      double acc = 0.0;
      for (std::size_t c = 0; c < t.cols(); ++c) {
        t.at(r, c) = fallback_rng->normal();
        acc += t.at(r, c) * t.at(r, c);
      }
      norm = std::sqrt(acc);
      if (norm < 1e-300) {  // degenerate draw; fall back to a basis vector
        t.at(r, 0) = 1.0;
        norm = 1.0;
      }
    }
    for (std::size_t c = 0; c < t.cols(); ++c) t.at(r, c) *= target_norm / norm;
  }
}

}  // namespace

Tensor random_perturbation(const Tensor& x, double epsilon, Rng& rng) {
  if (epsilon < 0.0) throw std::invalid_argument("random_perturbation: epsilon must be >= 0");
  Tensor noise = Tensor::zeros_like(x);
  for (double& v : noise.data()) v = rng.normal();
  if (epsilon == 0.0) return Tensor::zeros_like(x);
  normalize_rows(noise, epsilon, &rng, nullptr);
  return noise;
}

Tensor vat_perturbation(const Mlp& f, const Mlp& g, const Tensor& x,
                        const PerturbationSpec& spec, Rng& rng, int* fallback_rows) {
  if (spec.kind != PerturbationKind::vat)
    throw std::invalid_argument("vat_perturbation: spec.kind must be vat");
  spec.validate();
  if (fallback_rows) *fallback_rows = 0;

  // Clean prediction, held constant through the iteration.
  Tensor z_clean = mlp_eval_logits(g, mlp_eval(f, x));
  Tensor p_clean = softmax_rows(z_clean);
  Tensor log_p_clean = log_softmax_rows(z_clean);

  Tensor u = Tensor::zeros_like(x);
  for (double& v : u.data()) v = rng.normal();
  normalize_rows(u, 1.0, &rng, nullptr);

  for (int it = 0; it < spec.vat_power_iters; ++it) {
    Tensor probe = u;
    for (double& v : probe.data()) v *= spec.vat_xi;

    Tape tape;
    MlpBinding bf = bind_mlp(tape, f);
    MlpBinding bg = bind_mlp(tape, g);
    int r = tape.leaf(probe);
    int x_pert = tape.add(tape.leaf(x), r);
    int z_s = mlp_forward_logits(tape, bg, mlp_forward(tape, bf, x_pert));
    int log_q = tape.sub(z_s, tape.lse_row(z_s));
    int kl = tape.sum(tape.mul(tape.leaf(p_clean),
                               tape.sub(tape.leaf(log_p_clean), log_q)));
    GradStore grads = tape.backward(kl, {r});
    const Tensor& grad = grads.grad(r);
    // Rows with vanishing gradient keep their previous (random unit)
    // direction instead of dividing by ~0.
    for (std::size_t row = 0; row < u.rows(); ++row) {
      double norm2 = 0.0;
      for (std::size_t c = 0; c < u.cols(); ++c) norm2 += grad.at(row, c) * grad.at(row, c);
      double norm = std::sqrt(norm2);
      if (norm < 1e-300) {
        if (fallback_rows) ++*fallback_rows;
        continue;
      }
      for (std::size_t c = 0; c < u.cols(); ++c) u.at(row, c) = grad.at(row, c) / norm;
    }
  }

  // The iteration fixes the direction only up to sign (it approximates a
  // curvature eigenvector); the divergence is asymmetric at finite epsilon,
  // so pick the better sign per sample.
  Tensor x_plus = x, x_minus = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x_plus[i] += spec.epsilon * u[i];
    x_minus[i] -= spec.epsilon * u[i];
  }
  Tensor log_q_plus = log_softmax_rows(mlp_eval_logits(g, mlp_eval(f, x_plus)));
  Tensor log_q_minus = log_softmax_rows(mlp_eval_logits(g, mlp_eval(f, x_minus)));
  for (std::size_t r = 0; r < u.rows(); ++r) {
    double kl_plus = 0.0, kl_minus = 0.0;
    for (std::size_t c = 0; c < log_q_plus.cols(); ++c) {
      kl_plus += p_clean.at(r, c) * (log_p_clean.at(r, c) - log_q_plus.at(r, c));
      kl_minus += p_clean.at(r, c) * (log_p_clean.at(r, c) - log_q_minus.at(r, c));
    }
    double sign = kl_minus > kl_plus ? -1.0 : 1.0;
    for (std::size_t c = 0; c < u.cols(); ++c) u.at(r, c) *= sign;
  }

  for (double& v : u.data()) v *= spec.epsilon;
  return u;
}

Tensor softmax_rows(const Tensor& logits) {
  return eval_op(Op::softmax_row, &logits, nullptr, 0.0);
}

Tensor log_softmax_rows(const Tensor& logits) {
  Tensor lse = eval_op(Op::lse_row, &logits, nullptr, 0.0);
  Tensor out = logits;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) -= lse.at(r, 0);
  return out;
}

}  // namespace afda
