#include "afda/models.hpp"

#include <cmath>
#include <stdexcept>

namespace afda {

std::vector<Tensor*> Mlp::params() {
  std::vector<Tensor*> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

std::vector<const Tensor*> Mlp::params() const {
  std::vector<const Tensor*> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

Mlp init_mlp(const MlpSpec& spec, Rng& rng) {
  if (spec.widths.size() < 2)
    throw std::invalid_argument("init_mlp: spec needs at least one layer");
  Mlp mlp;
  mlp.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    std::size_t fan_in = spec.widths[l], fan_out = spec.widths[l + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Tensor({fan_out}));
  }
  return mlp;
}

std::vector<int> MlpBinding::all_ids() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < weight_ids.size(); ++i) {
    out.push_back(weight_ids[i]);
    out.push_back(bias_ids[i]);
  }
  return out;
}

MlpBinding bind_mlp(Tape& tape, const Mlp& mlp) {
  MlpBinding b;
  b.spec = &mlp.spec;
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    b.weight_ids.push_back(tape.leaf(mlp.weights[i]));
    b.bias_ids.push_back(tape.leaf(mlp.biases[i]));
  }
  return b;
}

int mlp_forward_logits(Tape& tape, const MlpBinding& mlp, int x) {
  int h = x;
  std::size_t n = mlp.weight_ids.size();
  for (std::size_t l = 0; l < n; ++l) {
    h = tape.add(tape.matmul(h, mlp.weight_ids[l]), mlp.bias_ids[l]);
    if (l + 1 < n) h = tape.relu(h);
  }
  return h;
}

int mlp_forward(Tape& tape, const MlpBinding& mlp, int x) {
  int h = mlp_forward_logits(tape, mlp, x);
  switch (mlp.spec->out_act) {
    case OutputAct::none: return h;
    case OutputAct::sigmoid: return tape.sigmoid(h);
    case OutputAct::softmax: return tape.softmax_row(h);
  }
  return h;
}

Tensor mlp_eval_logits(const Mlp& mlp, const Tensor& x) {
  Tape tape;
  MlpBinding b = bind_mlp(tape, mlp);
  return tape.val(mlp_forward_logits(tape, b, tape.leaf(x)));
}

Tensor mlp_eval(const Mlp& mlp, const Tensor& x) {
  Tape tape;
  MlpBinding b = bind_mlp(tape, mlp);
  return tape.val(mlp_forward(tape, b, tape.leaf(x)));
}

TeacherState make_teacher(const Mlp& f, const Mlp& g, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0)
    throw std::invalid_argument("make_teacher: alpha must be in (0, 1]");
  return TeacherState{f, g, alpha};
}

namespace {

void ema_tensors(std::vector<Tensor>& shadow, const std::vector<Tensor>& student, double a) {
  if (shadow.size() != student.size())
    throw std::invalid_argument("ema_update: layer count mismatch");
  for (std::size_t i = 0; i < shadow.size(); ++i) {
    if (!shadow[i].same_shape(student[i]))
      throw std::invalid_argument("ema_update: shape mismatch");
    for (std::size_t j = 0; j < shadow[i].size(); ++j)
      shadow[i][j] = a * shadow[i][j] + (1.0 - a) * student[i][j];
  }
}

}  // namespace

void ema_update(TeacherState& teacher, const Mlp& student_f, const Mlp& student_g) {
  ema_tensors(teacher.f.weights, student_f.weights, teacher.alpha);
  ema_tensors(teacher.f.biases, student_f.biases, teacher.alpha);
  ema_tensors(teacher.g.weights, student_g.weights, teacher.alpha);
  ema_tensors(teacher.g.biases, student_g.biases, teacher.alpha);
}

}  // namespace afda
