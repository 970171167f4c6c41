#pragma once

#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "afda/tensor.hpp"

namespace afda {

/// Primitive set of the reverse-mode engine. Everything the training losses
/// need is built from these.
enum class Op {
  leaf,           // external input / parameter, no gradient rule of its own
  matmul,         // (B,I) x (I,J) -> (B,J)
  add,            // elementwise; second operand may broadcast (row or column)
  sub,            // elementwise; second operand may broadcast
  mul,            // elementwise; second operand may broadcast
  scale,          // multiply by a compile-time-constant scalar (attr)
  relu,           // max(0, x), derivative 0 at x == 0
  sigmoid,        // 1 / (1 + e^-x)
  softmax_row,    // row-wise softmax, max-shifted
  log,            // natural log, domain error on x <= 0
  exp,            // e^x
  lse_row,        // row-wise log-sum-exp, max-shifted; (B,K) -> (B,1)
  sum,            // sum of all elements -> scalar
  mean,           // mean of all elements -> scalar
  square,         // x^2
  sqrt,           // square root, domain error on x < 0
  concat_rows,    // stack two matrices with equal column counts
  stop_gradient,  // identity forward, blocks all gradient flow
};

const char* op_name(Op op);

/// Gradients of one backward pass, keyed by tape node id. Every parameter id
/// passed to Tape::backward has an entry, zero-filled when unreachable.
class GradStore {
 public:
  const Tensor& grad(int id) const;
  bool contains(int id) const { return grads_.count(id) != 0; }
  void set(int id, Tensor g) { grads_[id] = std::move(g); }
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<int, Tensor> grads_;
};

/// Records a forward computation as a topologically ordered list of primitive
/// applications and differentiates it in reverse. Nodes are immutable once
/// recorded; replaying the tape reproduces every cached value bit-exactly.
class Tape {
 public:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double attr = 0.0;
    Tensor value;
  };

  /// Registers an input (parameter or data) tensor and returns its node id.
  int leaf(Tensor value);

  /// Generic primitive application: validates shapes, evaluates the forward
  /// value, checks finiteness and records the node.
  int apply(Op op, int a, int b = -1, double attr = 0.0);

  int matmul(int a, int b) { return apply(Op::matmul, a, b); }
  int add(int a, int b) { return apply(Op::add, a, b); }
  int sub(int a, int b) { return apply(Op::sub, a, b); }
  int mul(int a, int b) { return apply(Op::mul, a, b); }
  int scale(int a, double c) { return apply(Op::scale, a, -1, c); }
  int relu(int a) { return apply(Op::relu, a); }
  int sigmoid(int a) { return apply(Op::sigmoid, a); }
  int softmax_row(int a) { return apply(Op::softmax_row, a); }
  int log(int a) { return apply(Op::log, a); }
  int exp(int a) { return apply(Op::exp, a); }
  int lse_row(int a) { return apply(Op::lse_row, a); }
  int sum(int a) { return apply(Op::sum, a); }
  int mean(int a) { return apply(Op::mean, a); }
  int square(int a) { return apply(Op::square, a); }
  int sqrt(int a) { return apply(Op::sqrt, a); }
  int concat_rows(int a, int b) { return apply(Op::concat_rows, a, b); }
  int stop_gradient(int a) { return apply(Op::stop_gradient, a); }

  /// Values live as long as the tape; references stay valid across later
  /// apply() calls (node storage never relocates).
  const Tensor& val(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }

  /// Exact reverse-mode gradients of the scalar `root` with respect to each
  /// id in `params`. stop_gradient nodes block flow; unreachable params get
  /// zero gradients.
  GradStore backward(int root, const std::vector<int>& params) const;

  /// Re-evaluates every non-leaf node from its inputs and compares against
  /// the cached values. True iff the replay is bit-identical.
  bool replay_matches() const;

 private:
  std::deque<Node> nodes_;
};

/// Forward evaluation of a single primitive, shared by apply() and replay.
Tensor eval_op(Op op, const Tensor* a, const Tensor* b, double attr);

}  // namespace afda
