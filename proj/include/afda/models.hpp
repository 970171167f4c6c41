#pragma once

#include <vector>

#include "afda/rng.hpp"
#include "afda/tape.hpp"
#include "afda/tensor.hpp"

namespace afda {

enum class OutputAct { none, sigmoid, softmax };

/// Architecture of one MLP: widths[0] is the input dimension, widths.back()
/// the output dimension. Hidden activations are ReLU.
struct MlpSpec {
  std::vector<std::size_t> widths;
  OutputAct out_act = OutputAct::none;

  std::size_t n_layers() const { return widths.size() - 1; }
  std::size_t input_dim() const { return widths.front(); }
  std::size_t output_dim() const { return widths.back(); }
};

/// One parameter group: weight matrix and bias vector per dense layer.
struct Mlp {
  MlpSpec spec;
  std::vector<Tensor> weights;  // (in, out) each
  std::vector<Tensor> biases;   // (out) each

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
};

/// The three parameter groups of the method: feature extractor f, shallow
/// classifier g (exactly one dense layer) and discriminator d.
struct ParamSet {
  Mlp f, g, d;
};

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
/// Same seed, same parameters.
Mlp init_mlp(const MlpSpec& spec, Rng& rng);

/// Leaf ids of one MLP's parameters on a tape.
struct MlpBinding {
  const MlpSpec* spec = nullptr;
  std::vector<int> weight_ids;
  std::vector<int> bias_ids;

  std::vector<int> all_ids() const;
};

MlpBinding bind_mlp(Tape& tape, const Mlp& mlp);

/// Forward pass through a bound MLP: dense layers with ReLU between them and
/// the spec's output activation at the end. Returns the output node id.
int mlp_forward(Tape& tape, const MlpBinding& mlp, int x);

/// Same network, pre-activation output (used where the loss needs the raw
/// logit of a sigmoid/softmax head).
int mlp_forward_logits(Tape& tape, const MlpBinding& mlp, int x);

/// Convenience non-tape forward for evaluation paths.
Tensor mlp_eval(const Mlp& mlp, const Tensor& x);
Tensor mlp_eval_logits(const Mlp& mlp, const Tensor& x);

/// Shadow copy of (f, g) updated by exponential moving average.
struct TeacherState {
  Mlp f, g;
  double alpha = 0.999;
};

TeacherState make_teacher(const Mlp& f, const Mlp& g, double alpha);

/// shadow <- alpha * shadow + (1 - alpha) * student, every tensor.
void ema_update(TeacherState& teacher, const Mlp& student_f, const Mlp& student_g);

}  // namespace afda
