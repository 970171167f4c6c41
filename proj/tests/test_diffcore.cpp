#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "afda/gradcheck.hpp"
#include "afda/gradcheck_suite.hpp"
#include "afda/rng.hpp"
#include "afda/tape.hpp"

using namespace afda;

TEST_SUITE("diffcore") {

TEST_CASE("relu at and around zero") {
  Tape tape;
  int x = tape.leaf(Tensor::vec({-1.0, 0.0, 2.0}));
  const Tensor& out = tape.val(tape.relu(x));
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 2.0);
}

TEST_CASE("log_sum_exp of a dominated row") {
  // direct evaluation of log(e^10 + 2 e^0)
  Tape tape;
  int x = tape.leaf(Tensor::matrix(1, 3, {10.0, 0.0, 0.0}));
  double lse = tape.val(tape.lse_row(x))[0];
  CHECK(lse == doctest::Approx(10.000090795737467).epsilon(1e-12));
  // witnesses LSE ~ max for confident rows
  CHECK(lse - 10.0 < 1e-4);
}

TEST_CASE("softmax of a symmetric row") {
  Tape tape;
  int x = tape.leaf(Tensor::matrix(1, 2, {0.0, 0.0}));
  const Tensor& p = tape.val(tape.softmax_row(x));
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("softmax rows are distributions") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    Tensor x({4, 6});
    for (double& v : x.data()) v = rng.uniform(-30.0, 30.0);
    Tape tape;
    const Tensor& p = tape.val(tape.softmax_row(tape.leaf(x)));
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 6; ++c) {
        CHECK(p.at(r, c) >= 0.0);
        s += p.at(r, c);
      }
      CHECK(std::fabs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("log_sum_exp is translation stable") {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    Tensor x({1, 5});
    for (double& v : x.data()) v = rng.uniform(-5.0, 5.0);
    double c = rng.uniform(-100.0, 100.0);
    Tensor shifted = x;
    for (double& v : shifted.data()) v += c;
    Tape tape;
    double base = tape.val(tape.lse_row(tape.leaf(x)))[0];
    double moved = tape.val(tape.lse_row(tape.leaf(shifted)))[0];
    CHECK(std::fabs(moved - (base + c)) <= 1e-10);
  }
}

TEST_CASE("backward of sum(square(w))") {
  Tape tape;
  int w = tape.leaf(Tensor::vec({3.0}));
  int root = tape.sum(tape.square(w));
  GradStore grads = tape.backward(root, {w});
  CHECK(grads.grad(w)[0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("backward of mean(relu(w)) uses relu'(neg) = 0") {
  Tape tape;
  int w = tape.leaf(Tensor::vec({-1.0, 2.0}));
  int root = tape.mean(tape.relu(w));
  GradStore grads = tape.backward(root, {w});
  CHECK(grads.grad(w)[0] == 0.0);
  CHECK(grads.grad(w)[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("backward rejects non-scalar roots") {
  Tape tape;
  int w = tape.leaf(Tensor::vec({1.0, 2.0}));
  int doubled = tape.scale(w, 2.0);
  CHECK_THROWS_AS(tape.backward(doubled, {w}), std::invalid_argument);
}

TEST_CASE("unreachable parameters get zero gradients") {
  Tape tape;
  int w = tape.leaf(Tensor::vec({1.0, 2.0}));
  int orphan = tape.leaf(Tensor::vec({5.0}));
  int root = tape.sum(tape.square(w));
  GradStore grads = tape.backward(root, {w, orphan});
  CHECK(grads.grad(orphan)[0] == 0.0);
  CHECK(grads.grad(orphan).same_shape(tape.val(orphan)));
}

TEST_CASE("stop-gradient blocks flow but not the forward value") {
  Tape tape;
  int w = tape.leaf(Tensor::vec({2.0}));
  int blocked = tape.stop_gradient(tape.square(w));
  CHECK(tape.val(blocked)[0] == 4.0);
  GradStore grads = tape.backward(tape.sum(blocked), {w});
  CHECK(grads.grad(w)[0] == 0.0);
}

TEST_CASE("domain errors: log, sqrt") {
  Tape tape;
  int neg = tape.leaf(Tensor::vec({-1.0}));
  int zero = tape.leaf(Tensor::vec({0.0}));
  CHECK_THROWS_AS(tape.log(neg), std::domain_error);
  CHECK_THROWS_AS(tape.log(zero), std::domain_error);
  CHECK_THROWS_AS(tape.sqrt(neg), std::domain_error);
}

TEST_CASE("shape errors") {
  Tape tape;
  int a = tape.leaf(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  int b = tape.leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  CHECK_THROWS_AS(tape.matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(tape.add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(tape.concat_rows(a, b), std::invalid_argument);
}

TEST_CASE("non-finite outputs raise instead of propagating") {
  Tape tape;
  int big = tape.leaf(Tensor::vec({1000.0}));
  CHECK_THROWS_AS(tape.exp(big), std::domain_error);
}

TEST_CASE("replaying a tape is bit-identical") {
  Rng rng(13);
  Tape tape;
  Tensor x({3, 4});
  for (double& v : x.data()) v = rng.uniform(-2.0, 2.0);
  Tensor w({4, 2});
  for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
  int xi = tape.leaf(x);
  int wi = tape.leaf(w);
  int z = tape.matmul(xi, wi);
  tape.mean(tape.square(tape.softmax_row(z)));
  CHECK(tape.replay_matches());
}

TEST_CASE("identical graphs on fresh tapes produce identical values") {
  auto build = [](Tape& tape) {
    int x = tape.leaf(Tensor::matrix(2, 2, {0.3, -1.2, 2.4, 0.9}));
    return tape.sum(tape.lse_row(tape.relu(tape.scale(x, 1.3))));
  };
  Tape t1, t2;
  CHECK(t1.val(build(t1)).equals(t2.val(build(t2))));
}

TEST_CASE("finite_diff_check: quadratic loss is exact to round-off") {
  auto build = [](Tape& tape, const std::vector<Tensor>& params, std::vector<int>& ids) {
    int w = tape.leaf(params[0]);
    ids.push_back(w);
    return tape.sum(tape.square(w));
  };
  FiniteDiffReport rep = finite_diff_check(build, {Tensor::vec({1.5, -0.4, 2.0})}, 1e-5, 1e-4);
  CHECK(rep.pass);
  CHECK(rep.max_rel_err < 1e-8);
}

TEST_CASE("finite_diff_check reports non-finite perturbed losses") {
  // log(w) becomes invalid when w - h crosses zero
  auto build = [](Tape& tape, const std::vector<Tensor>& params, std::vector<int>& ids) {
    int w = tape.leaf(params[0]);
    ids.push_back(w);
    return tape.sum(tape.log(w));
  };
  FiniteDiffReport rep = finite_diff_check(build, {Tensor::vec({0.5e-5})}, 1e-5, 1e-4);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_location.find("param 0") != std::string::npos);
}

TEST_CASE("gradient suite passes on a quick sample") {
  std::vector<GradSuiteCase> results = run_gradient_suite(5, 99);
  for (const GradSuiteCase& c : results) {
    INFO(c.name, ": ", c.worst_location);
    CHECK(c.pass);
  }
}

}  // TEST_SUITE
