#include "afda/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>

#include "afda/gradcheck.hpp"
#include "afda/losses.hpp"
#include "afda/models.hpp"
#include "afda/rng.hpp"

namespace afda {

namespace {

constexpr double kStep = 1e-5;
constexpr double kTol = 1e-4;

Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo, double hi) {
  Tensor t({r, c});
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Keeps relu inputs away from the kink, where central differences straddle
// the nondifferentiable point.
Tensor random_matrix_away_from_zero(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t({r, c});
  for (double& v : t.data()) {
    double mag = rng.uniform(0.1, 2.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Scalarizes an op output as sum(out * coeffs) so the FD probe exercises
// every output coordinate with distinct weights.
int weighted_sum(Tape& tape, int out, const Tensor& coeffs) {
  return tape.sum(tape.mul(out, tape.leaf(coeffs)));
}

GradSuiteCase check_case(const std::string& name, const TapeLossBuilder& build,
                         std::vector<Tensor> params) {
  FiniteDiffReport rep = finite_diff_check(build, std::move(params), kStep, kTol);
  return GradSuiteCase{name, rep.pass, rep.max_rel_err, rep.worst_location};
}

void merge(GradSuiteCase& total, const GradSuiteCase& inst) {
  if (!inst.pass) total.pass = false;
  if (inst.max_rel_err > total.max_rel_err) {
    total.max_rel_err = inst.max_rel_err;
    total.worst_location = inst.worst_location;
  }
}

// ---- primitive cases ------------------------------------------------------

using UnaryFactory = std::function<int(Tape&, int)>;

GradSuiteCase check_unary(const std::string& name, int instances, Rng& rng,
                          const UnaryFactory& op, double lo, double hi,
                          bool avoid_zero = false) {
  GradSuiteCase total{name, true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    Tensor x = avoid_zero ? random_matrix_away_from_zero(rng, 2, 3)
                          : random_matrix(rng, 2, 3, lo, hi);
    Tensor coeffs = random_matrix(rng, 2, 3, 0.5, 1.5);
    auto build = [&op, coeffs](Tape& tape, const std::vector<Tensor>& params,
                               std::vector<int>& ids) {
      int x_id = tape.leaf(params[0]);
      ids.push_back(x_id);
      return weighted_sum(tape, op(tape, x_id), coeffs);
    };
    merge(total, check_case(name, build, {x}));
  }
  return total;
}

GradSuiteCase check_reducer(const std::string& name, int instances, Rng& rng, Op op) {
  GradSuiteCase total{name, true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    Tensor x = random_matrix(rng, 2, 3, -2.0, 2.0);
    auto build = [op](Tape& tape, const std::vector<Tensor>& params, std::vector<int>& ids) {
      int x_id = tape.leaf(params[0]);
      ids.push_back(x_id);
      return tape.apply(op, x_id);
    };
    merge(total, check_case(name, build, {x}));
  }
  return total;
}

GradSuiteCase check_rowwise(const std::string& name, int instances, Rng& rng, Op op) {
  GradSuiteCase total{name, true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    Tensor x = random_matrix(rng, 3, 4, -3.0, 3.0);
    std::size_t out_cols = op == Op::lse_row ? 1 : 4;
    Tensor coeffs = random_matrix(rng, 3, out_cols, 0.5, 1.5);
    auto build = [op, coeffs](Tape& tape, const std::vector<Tensor>& params,
                              std::vector<int>& ids) {
      int x_id = tape.leaf(params[0]);
      ids.push_back(x_id);
      return weighted_sum(tape, tape.apply(op, x_id), coeffs);
    };
    merge(total, check_case(name, build, {x}));
  }
  return total;
}

GradSuiteCase check_matmul(int instances, Rng& rng) {
  GradSuiteCase total{"matmul", true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    Tensor a = random_matrix(rng, 2, 3, -2.0, 2.0);
    Tensor b = random_matrix(rng, 3, 4, -2.0, 2.0);
    Tensor coeffs = random_matrix(rng, 2, 4, 0.5, 1.5);
    auto build = [coeffs](Tape& tape, const std::vector<Tensor>& params,
                          std::vector<int>& ids) {
      int a_id = tape.leaf(params[0]);
      int b_id = tape.leaf(params[1]);
      ids = {a_id, b_id};
      return weighted_sum(tape, tape.matmul(a_id, b_id), coeffs);
    };
    merge(total, check_case("matmul", build, {a, b}));
  }
  return total;
}

GradSuiteCase check_binary(const std::string& name, int instances, Rng& rng, Op op,
                           bool broadcast_row) {
  GradSuiteCase total{name, true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    Tensor a = random_matrix(rng, 2, 3, -2.0, 2.0);
    Tensor b = broadcast_row ? Tensor::vec(random_matrix(rng, 1, 3, -2.0, 2.0).data())
                             : random_matrix(rng, 2, 3, -2.0, 2.0);
    Tensor coeffs = random_matrix(rng, 2, 3, 0.5, 1.5);
    auto build = [op, coeffs](Tape& tape, const std::vector<Tensor>& params,
                              std::vector<int>& ids) {
      int a_id = tape.leaf(params[0]);
      int b_id = tape.leaf(params[1]);
      ids = {a_id, b_id};
      return weighted_sum(tape, tape.apply(op, a_id, b_id), coeffs);
    };
    merge(total, check_case(name, build, {a, b}));
  }
  return total;
}

GradSuiteCase check_concat(int instances, Rng& rng) {
  GradSuiteCase total{"concat-rows", true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    Tensor a = random_matrix(rng, 2, 3, -2.0, 2.0);
    Tensor b = random_matrix(rng, 3, 3, -2.0, 2.0);
    Tensor coeffs = random_matrix(rng, 5, 3, 0.5, 1.5);
    auto build = [coeffs](Tape& tape, const std::vector<Tensor>& params,
                          std::vector<int>& ids) {
      int a_id = tape.leaf(params[0]);
      int b_id = tape.leaf(params[1]);
      ids = {a_id, b_id};
      return weighted_sum(tape, tape.concat_rows(a_id, b_id), coeffs);
    };
    merge(total, check_case("concat-rows", build, {a, b}));
  }
  return total;
}

// stop-gradient has no finite-difference counterpart: the contract is that
// the analytic gradient through it is exactly zero.
GradSuiteCase check_stop_gradient(int instances, Rng& rng) {
  GradSuiteCase total{"stop-gradient", true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    Tensor x = random_matrix(rng, 2, 3, -2.0, 2.0);
    Tape tape;
    int x_id = tape.leaf(x);
    int root = tape.sum(tape.mul(tape.stop_gradient(tape.square(x_id)), x_id));
    GradStore grads = tape.backward(tape.sum(tape.stop_gradient(tape.square(x_id))), {x_id});
    const Tensor& g = grads.grad(x_id);
    for (std::size_t j = 0; j < g.size(); ++j)
      if (g[j] != 0.0) {
        total.pass = false;
        total.worst_location = "nonzero gradient through stop-gradient";
      }
    // The mixed expression must still flow through the non-blocked factor.
    GradStore mixed = tape.backward(root, {x_id});
    bool any_nonzero = false;
    for (std::size_t j = 0; j < mixed.grad(x_id).size(); ++j)
      if (mixed.grad(x_id)[j] != 0.0) any_nonzero = true;
    if (!any_nonzero) {
      total.pass = false;
      total.worst_location = "stop-gradient blocked the flowing branch";
    }
  }
  return total;
}

// ---- composite losses -----------------------------------------------------

// Forward pass reporting the smallest |pre-activation| over all hidden relu
// units; returns the output so networks can be chained.
Tensor forward_with_margin(const Mlp& mlp, const Tensor& x, double* min_abs_pre) {
  Tensor h = x;
  for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
    Tensor z = eval_op(Op::matmul, &h, &mlp.weights[l], 0.0);
    Tensor pre = eval_op(Op::add, &z, &mlp.biases[l], 0.0);
    if (l + 1 < mlp.weights.size()) {
      for (double v : pre.data()) *min_abs_pre = std::min(*min_abs_pre, std::fabs(v));
      h = eval_op(Op::relu, &pre, nullptr, 0.0);
    } else {
      h = pre;
    }
  }
  return h;
}

struct TinyNets {
  MlpSpec f_spec{{2, 4, 3}, OutputAct::none};
  MlpSpec g_spec{{3, 2}, OutputAct::none};
  MlpSpec d_spec{{3, 4, 1}, OutputAct::sigmoid};
  Mlp f, g, d;
  Tensor x_l, x_ul, pert;
  std::vector<int> y_l;

  // Central differences are invalid when a relu pre-activation sits within
  // the probe step of its kink, so resample until every unit is clear of it
  // on the clean and perturbed paths alike.
  explicit TinyNets(Rng& rng) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      f = init_mlp(f_spec, rng);
      g = init_mlp(g_spec, rng);
      d = init_mlp(d_spec, rng);
      x_l = random_matrix(rng, 3, 2, -2.0, 2.0);
      x_ul = random_matrix(rng, 4, 2, -2.0, 2.0);
      pert = random_matrix(rng, 7, 2, -0.3, 0.3);

      double margin = std::numeric_limits<double>::infinity();
      Tensor x_all = eval_op(Op::concat_rows, &x_l, &x_ul, 0.0);
      Tensor x_moved = eval_op(Op::add, &x_all, &pert, 0.0);
      Tensor feats = forward_with_margin(f, x_all, &margin);
      forward_with_margin(f, x_moved, &margin);
      forward_with_margin(d, feats, &margin);
      if (margin > 1e-3) break;
    }
    y_l = {static_cast<int>(rng.index(2)), static_cast<int>(rng.index(2)),
           static_cast<int>(rng.index(2))};
  }
};

std::vector<Tensor> flatten(const Mlp& a, const Mlp& b) {
  std::vector<Tensor> out;
  for (const Tensor* t : a.params()) out.push_back(*t);
  for (const Tensor* t : b.params()) out.push_back(*t);
  return out;
}

MlpBinding bind_from_params(Tape& tape, const MlpSpec& spec,
                            const std::vector<Tensor>& params, std::size_t& cursor,
                            std::vector<int>& ids) {
  MlpBinding b;
  b.spec = &spec;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    int w = tape.leaf(params[cursor++]);
    int bias = tape.leaf(params[cursor++]);
    ids.push_back(w);
    ids.push_back(bias);
    b.weight_ids.push_back(w);
    b.bias_ids.push_back(bias);
  }
  return b;
}

GradSuiteCase check_loss_case(const std::string& name, int instances, Rng& rng,
                              int which) {
  GradSuiteCase total{name, true, 0.0, ""};
  for (int i = 0; i < instances; ++i) {
    auto nets = std::make_shared<TinyNets>(rng);
    Tensor pert = nets->pert;
    Tensor x_cons = eval_op(Op::concat_rows, &nets->x_l, &nets->x_ul, 0.0);

    std::vector<Tensor> params;
    TapeLossBuilder build;
    switch (which) {
      case 0:  // supervised: theta_f, theta_g
        params = flatten(nets->f, nets->g);
        build = [nets](Tape& tape, const std::vector<Tensor>& p, std::vector<int>& ids) {
          std::size_t cur = 0;
          MlpBinding bf = bind_from_params(tape, nets->f_spec, p, cur, ids);
          MlpBinding bg = bind_from_params(tape, nets->g_spec, p, cur, ids);
          return supervised_loss(tape, bf, bg, tape.leaf(nets->x_l), nets->y_l);
        };
        break;
      case 1:  // adversarial: theta_f, theta_d
        params = flatten(nets->f, nets->d);
        build = [nets](Tape& tape, const std::vector<Tensor>& p, std::vector<int>& ids) {
          std::size_t cur = 0;
          MlpBinding bf = bind_from_params(tape, nets->f_spec, p, cur, ids);
          MlpBinding bd = bind_from_params(tape, nets->d_spec, p, cur, ids);
          return adversarial_loss(tape, bf, bd, tape.leaf(nets->x_l), tape.leaf(nets->x_ul));
        };
        break;
      case 2:    // consistency (kl): theta_f, theta_g
      case 3: {  // consistency (squared-euclidean)
        // The target branch is a per-step constant (that is what the
        // stop-gradient expresses), so the probe binds it from the base
        // parameters while the student side varies.
        DivergenceKind div = which == 2 ? DivergenceKind::kl : DivergenceKind::squared_euclidean;
        params = flatten(nets->f, nets->g);
        build = [nets, pert, x_cons, div](Tape& tape, const std::vector<Tensor>& p,
                                          std::vector<int>& ids) {
          std::size_t cur = 0;
          MlpBinding bf = bind_from_params(tape, nets->f_spec, p, cur, ids);
          MlpBinding bg = bind_from_params(tape, nets->g_spec, p, cur, ids);
          MlpBinding tf = bind_mlp(tape, nets->f);
          MlpBinding tg = bind_mlp(tape, nets->g);
          return consistency_loss(tape, bf, bg, tf, tg, tape.leaf(x_cons), pert, div);
        };
        break;
      }
      case 4:  // entropy: theta_f, theta_g
        params = flatten(nets->f, nets->g);
        build = [nets](Tape& tape, const std::vector<Tensor>& p, std::vector<int>& ids) {
          std::size_t cur = 0;
          MlpBinding bf = bind_from_params(tape, nets->f_spec, p, cur, ids);
          MlpBinding bg = bind_from_params(tape, nets->g_spec, p, cur, ids);
          return entropy_loss(tape, bf, bg, tape.leaf(nets->x_ul));
        };
        break;
      default:
        throw std::logic_error("unknown loss case");
    }
    merge(total, check_case(name, build, std::move(params)));
  }
  return total;
}

}  // namespace

std::vector<GradSuiteCase> run_gradient_suite(int instances, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradSuiteCase> out;

  out.push_back(check_matmul(instances, rng));
  out.push_back(check_binary("add", instances, rng, Op::add, false));
  out.push_back(check_binary("add (bias broadcast)", instances, rng, Op::add, true));
  out.push_back(check_binary("sub", instances, rng, Op::sub, false));
  out.push_back(check_binary("mul", instances, rng, Op::mul, false));
  out.push_back(check_unary("scale", instances, rng,
                            [](Tape& t, int x) { return t.scale(x, 1.7); }, -2.0, 2.0));
  out.push_back(check_unary("relu", instances, rng,
                            [](Tape& t, int x) { return t.relu(x); }, 0.0, 0.0, true));
  out.push_back(check_unary("sigmoid", instances, rng,
                            [](Tape& t, int x) { return t.sigmoid(x); }, -4.0, 4.0));
  out.push_back(check_rowwise("softmax-row", instances, rng, Op::softmax_row));
  out.push_back(check_unary("log", instances, rng,
                            [](Tape& t, int x) { return t.log(x); }, 0.2, 3.0));
  out.push_back(check_unary("exp", instances, rng,
                            [](Tape& t, int x) { return t.exp(x); }, -2.0, 2.0));
  out.push_back(check_rowwise("log_sum_exp-row", instances, rng, Op::lse_row));
  out.push_back(check_reducer("sum", instances, rng, Op::sum));
  out.push_back(check_reducer("mean", instances, rng, Op::mean));
  out.push_back(check_unary("square", instances, rng,
                            [](Tape& t, int x) { return t.square(x); }, -2.0, 2.0));
  out.push_back(check_unary("sqrt", instances, rng,
                            [](Tape& t, int x) { return t.sqrt(x); }, 0.2, 3.0));
  out.push_back(check_concat(instances, rng));
  out.push_back(check_stop_gradient(instances, rng));

  out.push_back(check_loss_case("loss: supervised", instances, rng, 0));
  out.push_back(check_loss_case("loss: adversarial", instances, rng, 1));
  out.push_back(check_loss_case("loss: consistency-kl", instances, rng, 2));
  out.push_back(check_loss_case("loss: consistency-se", instances, rng, 3));
  out.push_back(check_loss_case("loss: entropy", instances, rng, 4));

  return out;
}

bool all_passed(const std::vector<GradSuiteCase>& results) {
  for (const GradSuiteCase& c : results)
    if (!c.pass) return false;
  return true;
}

}  // namespace afda
