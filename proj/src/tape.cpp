#include "afda/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace afda {

namespace {

[[noreturn]] void shape_error(Op op, const Tensor& a, const Tensor* b) {
  std::string msg = std::string("shape mismatch in ") + op_name(op) + ": " + a.shape_str();
  if (b) msg += " vs " + b->shape_str();
  throw std::invalid_argument(msg);
}

[[noreturn]] void domain_error(Op op, const char* what) {
  throw std::domain_error(std::string(op_name(op)) + ": " + what);
}

enum class Broadcast { none, row, col };

// Elementwise binary ops accept equal shapes, a row vector second operand
// ((K) or (1,K) against (B,K)) or a column second operand ((B,1)).
Broadcast broadcast_kind(Op op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return Broadcast::none;
  if (b.rank() <= 1 || (b.rank() == 2 && b.rows() == 1)) {
    if (b.cols() == a.cols() && b.size() == a.cols()) return Broadcast::row;
  }
  if (b.rank() == 2 && b.shape()[1] == 1 && b.rows() == a.rows() && a.rank() == 2)
    return Broadcast::col;
  shape_error(op, a, &b);
}

double combine(Op op, double x, double y) {
  switch (op) {
    case Op::add: return x + y;
    case Op::sub: return x - y;
    case Op::mul: return x * y;
    default: throw std::logic_error("combine: not a binary elementwise op");
  }
}

Tensor elementwise_binary(Op op, const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::zeros_like(a);
  switch (broadcast_kind(op, a, b)) {
    case Broadcast::none:
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = combine(op, a[i], b[i]);
      break;
    case Broadcast::row:
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
          out.at(r, c) = combine(op, a.at(r, c), b[c]);
      break;
    case Broadcast::col:
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c)
          out.at(r, c) = combine(op, a.at(r, c), b[r]);
      break;
  }
  return out;
}

// Reduces a full-shaped gradient back onto a broadcast operand's shape.
Tensor reduce_to_shape(const Tensor& g, const Tensor& like, Broadcast kind) {
  if (kind == Broadcast::none) return g;
  Tensor out = Tensor::zeros_like(like);
  if (kind == Broadcast::row) {
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) out[c] += g.at(r, c);
  } else {
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) out[r] += g.at(r, c);
  }
  return out;
}

Tensor matmul_eval(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
    shape_error(Op::matmul, a, &b);
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double av = a.at(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
    }
  return out;
}

// A * B^T and A^T * B, used by the matmul pullback.
Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(j, p);
      out.at(i, j) = s;
    }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Tensor out({m, n});
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) {
      double av = a.at(p, i);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
    }
  return out;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::scale: return "scale";
    case Op::relu: return "relu";
    case Op::sigmoid: return "sigmoid";
    case Op::softmax_row: return "softmax-row";
    case Op::log: return "log";
    case Op::exp: return "exp";
    case Op::lse_row: return "log_sum_exp-row";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
    case Op::square: return "square";
    case Op::sqrt: return "sqrt";
    case Op::concat_rows: return "concat-rows";
    case Op::stop_gradient: return "stop-gradient";
  }
  return "?";
}

Tensor eval_op(Op op, const Tensor* a, const Tensor* b, double attr) {
  const Tensor& x = *a;
  switch (op) {
    case Op::leaf:
      throw std::logic_error("eval_op: leaf has no forward rule");
    case Op::matmul:
      return matmul_eval(x, *b);
    case Op::add:
    case Op::sub:
    case Op::mul:
      return elementwise_binary(op, x, *b);
    case Op::scale: {
      Tensor out = x;
      for (double& v : out.data()) v *= attr;
      return out;
    }
    case Op::relu: {
      Tensor out = x;
      for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
      return out;
    }
    case Op::sigmoid: {
      Tensor out = x;
      for (double& v : out.data()) v = stable_sigmoid(v);
      return out;
    }
    case Op::softmax_row: {
      Tensor out = Tensor::zeros_like(x);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double m = x.at(r, 0);
        for (std::size_t c = 1; c < x.cols(); ++c) m = std::max(m, x.at(r, c));
        double z = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) {
          out.at(r, c) = std::exp(x.at(r, c) - m);
          z += out.at(r, c);
        }
        for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) /= z;
      }
      return out;
    }
    case Op::log: {
      Tensor out = x;
      for (double& v : out.data()) {
        if (v <= 0.0) domain_error(op, "input must be positive");
        v = std::log(v);
      }
      return out;
    }
    case Op::exp: {
      Tensor out = x;
      for (double& v : out.data()) v = std::exp(v);
      return out;
    }
    case Op::lse_row: {
      if (x.rank() != 2) shape_error(op, x, nullptr);
      Tensor out({x.rows(), 1});
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double m = x.at(r, 0);
        for (std::size_t c = 1; c < x.cols(); ++c) m = std::max(m, x.at(r, c));
        double s = 0.0;
        for (std::size_t c = 0; c < x.cols(); ++c) s += std::exp(x.at(r, c) - m);
        out.at(r, 0) = m + std::log(s);
      }
      return out;
    }
    case Op::sum: {
      double s = 0.0;
      for (double v : x.data()) s += v;
      return Tensor::scalar(s);
    }
    case Op::mean: {
      if (x.size() == 0) domain_error(op, "empty tensor");
      double s = 0.0;
      for (double v : x.data()) s += v;
      return Tensor::scalar(s / static_cast<double>(x.size()));
    }
    case Op::square: {
      Tensor out = x;
      for (double& v : out.data()) v = v * v;
      return out;
    }
    case Op::sqrt: {
      Tensor out = x;
      for (double& v : out.data()) {
        if (v < 0.0) domain_error(op, "input must be nonnegative");
        v = std::sqrt(v);
      }
      return out;
    }
    case Op::concat_rows: {
      if (x.cols() != b->cols()) shape_error(op, x, b);
      Tensor out({x.rows() + b->rows(), x.cols()});
      std::size_t i = 0;
      for (double v : x.data()) out[i++] = v;
      for (double v : b->data()) out[i++] = v;
      return out;
    }
    case Op::stop_gradient:
      return x;
  }
  throw std::logic_error("eval_op: unknown op");
}

int Tape::leaf(Tensor value) {
  nodes_.push_back(Node{Op::leaf, -1, -1, 0.0, std::move(value)});
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::apply(Op op, int a, int b, double attr) {
  if (op == Op::leaf) throw std::invalid_argument("apply: use leaf() for inputs");
  const Tensor& ta = val(a);
  const Tensor* tb = b >= 0 ? &val(b) : nullptr;
  Tensor out = eval_op(op, &ta, tb, attr);
  if (!out.all_finite()) domain_error(op, "non-finite output");
  nodes_.push_back(Node{op, a, b, attr, std::move(out)});
  return static_cast<int>(nodes_.size()) - 1;
}

GradStore Tape::backward(int root, const std::vector<int>& params) const {
  if (val(root).size() != 1)
    throw std::invalid_argument("backward: root must be a scalar");

  std::vector<Tensor> adj(nodes_.size());
  std::vector<char> seen(nodes_.size(), 0);
  auto touch = [&](int id) -> Tensor& {
    if (!seen[static_cast<std::size_t>(id)]) {
      adj[static_cast<std::size_t>(id)] = Tensor::zeros_like(val(id));
      seen[static_cast<std::size_t>(id)] = 1;
    }
    return adj[static_cast<std::size_t>(id)];
  };

  touch(root)[0] = 1.0;

  for (int id = root; id >= 0; --id) {
    if (!seen[static_cast<std::size_t>(id)]) continue;
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor& g = adj[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::leaf:
      case Op::stop_gradient:
        break;
      case Op::matmul: {
        const Tensor& a = val(n.a);
        const Tensor& b = val(n.b);
        Tensor da = matmul_nt(g, b);
        Tensor db = matmul_tn(a, g);
        Tensor& accum_a = touch(n.a);
        for (std::size_t i = 0; i < da.size(); ++i) accum_a[i] += da[i];
        Tensor& accum_b = touch(n.b);
        for (std::size_t i = 0; i < db.size(); ++i) accum_b[i] += db[i];
        break;
      }
      case Op::add:
      case Op::sub: {
        const Tensor& a = val(n.a);
        const Tensor& b = val(n.b);
        Broadcast kind = broadcast_kind(n.op, a, b);
        Tensor& accum_a = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) accum_a[i] += g[i];
        Tensor gb = reduce_to_shape(g, b, kind);
        double sign = n.op == Op::sub ? -1.0 : 1.0;
        Tensor& accum_b = touch(n.b);
        for (std::size_t i = 0; i < gb.size(); ++i) accum_b[i] += sign * gb[i];
        break;
      }
      case Op::mul: {
        const Tensor& a = val(n.a);
        const Tensor& b = val(n.b);
        Broadcast kind = broadcast_kind(Op::mul, a, b);
        Tensor ga = elementwise_binary(Op::mul, g, b);  // same broadcast as forward
        Tensor& accum_a = touch(n.a);
        for (std::size_t i = 0; i < ga.size(); ++i) accum_a[i] += ga[i];
        Tensor gfull = Tensor::zeros_like(a);
        for (std::size_t i = 0; i < a.size(); ++i) gfull[i] = g[i] * a[i];
        Tensor gb = reduce_to_shape(gfull, b, kind);
        Tensor& accum_b = touch(n.b);
        for (std::size_t i = 0; i < gb.size(); ++i) accum_b[i] += gb[i];
        break;
      }
      case Op::scale: {
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) accum[i] += n.attr * g[i];
        break;
      }
      case Op::relu: {
        const Tensor& a = val(n.a);
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (a[i] > 0.0) accum[i] += g[i];
        break;
      }
      case Op::sigmoid: {
        const Tensor& s = n.value;
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) accum[i] += g[i] * s[i] * (1.0 - s[i]);
        break;
      }
      case Op::softmax_row: {
        const Tensor& p = n.value;
        Tensor& accum = touch(n.a);
        for (std::size_t r = 0; r < p.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < p.cols(); ++c) dot += g.at(r, c) * p.at(r, c);
          for (std::size_t c = 0; c < p.cols(); ++c)
            accum.at(r, c) += p.at(r, c) * (g.at(r, c) - dot);
        }
        break;
      }
      case Op::log: {
        const Tensor& a = val(n.a);
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) accum[i] += g[i] / a[i];
        break;
      }
      case Op::exp: {
        const Tensor& e = n.value;
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) accum[i] += g[i] * e[i];
        break;
      }
      case Op::lse_row: {
        const Tensor& a = val(n.a);
        const Tensor& l = n.value;
        Tensor& accum = touch(n.a);
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < a.cols(); ++c)
            accum.at(r, c) += g.at(r, 0) * std::exp(a.at(r, c) - l.at(r, 0));
        break;
      }
      case Op::sum: {
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < accum.size(); ++i) accum[i] += g[0];
        break;
      }
      case Op::mean: {
        Tensor& accum = touch(n.a);
        double w = g[0] / static_cast<double>(accum.size());
        for (std::size_t i = 0; i < accum.size(); ++i) accum[i] += w;
        break;
      }
      case Op::square: {
        const Tensor& a = val(n.a);
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) accum[i] += 2.0 * a[i] * g[i];
        break;
      }
      case Op::sqrt: {
        const Tensor& s = n.value;
        Tensor& accum = touch(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) accum[i] += g[i] / (2.0 * s[i]);
        break;
      }
      case Op::concat_rows: {
        const Tensor& a = val(n.a);
        Tensor& accum_a = touch(n.a);
        for (std::size_t i = 0; i < a.size(); ++i) accum_a[i] += g[i];
        Tensor& accum_b = touch(n.b);
        for (std::size_t i = 0; i < accum_b.size(); ++i) accum_b[i] += g[a.size() + i];
        break;
      }
    }
  }

  GradStore out;
  for (int p : params) {
    if (seen[static_cast<std::size_t>(p)])
      out.set(p, adj[static_cast<std::size_t>(p)]);
    else
      out.set(p, Tensor::zeros_like(val(p)));
  }
  return out;
}

bool Tape::replay_matches() const {
  for (const Node& n : nodes_) {
    if (n.op == Op::leaf) continue;
    const Tensor& a = val(n.a);
    const Tensor* b = n.b >= 0 ? &val(n.b) : nullptr;
    Tensor redo = eval_op(n.op, &a, b, n.attr);
    if (!redo.equals(n.value)) return false;
  }
  return true;
}

const Tensor& GradStore::grad(int id) const {
  auto it = grads_.find(id);
  if (it == grads_.end())
    throw std::out_of_range("GradStore: no gradient for node " + std::to_string(id));
  return it->second;
}

}  // namespace afda
