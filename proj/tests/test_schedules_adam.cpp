#include <doctest.h>

#include <cmath>

#include "afda/adam.hpp"
#include "afda/schedules.hpp"

using namespace afda;

TEST_SUITE("schedules-adam") {

TEST_CASE("mu starts at zero for any horizon and shape") {
  for (int total : {1, 10, 300})
    for (double lambda : {0.5, 5.0, 20.0})
      CHECK(mu_schedule(0, total, lambda) == 0.0);
}

TEST_CASE("the published formula is nonpositive; the ramp is its magnitude") {
  // literal (1 - e^lambda) / (1 + e^lambda) at t = T, lambda = 5
  double literal = (1.0 - std::exp(5.0)) / (1.0 + std::exp(5.0));
  CHECK(literal == doctest::Approx(-0.9866142981514303).epsilon(1e-12));
  CHECK(mu_schedule(100, 100, 5.0) == doctest::Approx(0.9866142981514303).epsilon(1e-12));
  CHECK(mu_schedule(100, 100, 5.0) == doctest::Approx(-literal).epsilon(1e-14));
}

TEST_CASE("mu at mid-horizon") {
  CHECK(mu_schedule(50, 100, 5.0) == doctest::Approx(std::tanh(1.25)).epsilon(1e-14));
  CHECK(mu_schedule(50, 100, 5.0) == doctest::Approx(0.8482836399575129).epsilon(1e-12));
}

TEST_CASE("mu is monotone nondecreasing and bounded by tanh(lambda/2)") {
  const int total = 300;
  const double lambda = 5.0;
  double prev = -1.0;
  double cap = std::tanh(lambda / 2.0);
  for (int t = 0; t <= total; ++t) {
    double mu = mu_schedule(t, total, lambda);
    CHECK(mu >= prev);
    CHECK(mu <= cap);
    if (t < total) CHECK(mu < cap);
    prev = mu;
  }
}

TEST_CASE("mu rejects a zero horizon and out-of-range epochs") {
  CHECK_THROWS_AS(mu_schedule(0, 0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(mu_schedule(-1, 10, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(mu_schedule(11, 10, 5.0), std::invalid_argument);
}

TEST_CASE("eta is constant 1 for vat") {
  for (int t : {0, 1, 50, 299}) CHECK(eta_schedule(t, 80, 10.0, Backend::vat) == 1.0);
}

TEST_CASE("eta ramp endpoints for pi / mean-teacher") {
  const double eta_max = 4.0;
  CHECK(eta_schedule(0, 80, eta_max, Backend::pi) ==
        doctest::Approx(eta_max * std::exp(-5.0)).epsilon(1e-12));
  CHECK(eta_schedule(80, 80, eta_max, Backend::pi) == doctest::Approx(eta_max).epsilon(1e-15));
  CHECK(eta_schedule(200, 80, eta_max, Backend::mean_teacher) ==
        doctest::Approx(eta_max).epsilon(1e-15));
  CHECK(eta_schedule(5, 0, eta_max, Backend::pi) == doctest::Approx(eta_max).epsilon(1e-15));
}

TEST_CASE("eta is zero without a consistency backend") {
  for (int t : {0, 10, 100}) CHECK(eta_schedule(t, 80, 3.0, Backend::none) == 0.0);
}

TEST_CASE("learning rate and beta1 ramps") {
  const int total = 100;
  const double gamma0 = 5e-4;
  CHECK(lr_schedule(0, total, gamma0) == gamma0);
  CHECK(lr_schedule(80, total, gamma0) == gamma0);
  CHECK(lr_schedule(90, total, gamma0) == doctest::Approx(gamma0 * 0.5).epsilon(1e-12));
  CHECK(lr_schedule(total, total, gamma0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(beta1_schedule(0, total) == 0.9);
  CHECK(beta1_schedule(80, total) == 0.9);
  CHECK(beta1_schedule(90, total) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(beta1_schedule(total, total) == doctest::Approx(0.5).epsilon(1e-12));
  for (int t = 0; t <= total; ++t) {
    CHECK(beta1_schedule(t, total) >= 0.5);
    CHECK(beta1_schedule(t, total) <= 0.9);
  }
}

TEST_CASE("first adam step moves by about -lr * sign(gradient)") {
  Tensor w = Tensor::vec({1.0, -2.0});
  Tensor g = Tensor::vec({0.3, -4.0});
  AdamState state = AdamState::like({&w});
  const double lr = 0.01;
  adam_step(state, {&w}, {&g}, lr, 0.9, Direction::descent);
  CHECK(w[0] == doctest::Approx(1.0 - lr).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(-2.0 + lr).epsilon(1e-6));
  CHECK(state.step == 1);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  Tensor w = Tensor::vec({1.5, -0.5});
  Tensor g = Tensor::vec({0.0, 0.0});
  AdamState state = AdamState::like({&w});
  adam_step(state, {&w}, {&g}, 0.1, 0.9, Direction::descent);
  CHECK(w[0] == 1.5);
  CHECK(w[1] == -0.5);
}

TEST_CASE("ten adam steps on w^2 match the reference trace") {
  // hand-run Adam recurrence (beta1 = 0.9, beta2 = 0.999, eps = 1e-8,
  // lr = 0.1) on f(w) = w^2 from w = 1
  Tensor w = Tensor::vec({1.0});
  AdamState state = AdamState::like({&w});
  std::vector<double> checkpoints;
  for (int t = 1; t <= 10; ++t) {
    Tensor g = Tensor::vec({2.0 * w[0]});
    adam_step(state, {&w}, {&g}, 0.1, 0.9, Direction::descent);
    if (t == 1 || t == 5 || t == 10) checkpoints.push_back(w[0]);
  }
  CHECK(checkpoints[0] == doctest::Approx(0.9000000005).epsilon(1e-12));
  CHECK(checkpoints[1] == doctest::Approx(0.5079636592643407).epsilon(1e-12));
  CHECK(checkpoints[2] == doctest::Approx(0.0762491556069111).epsilon(1e-12));
}

TEST_CASE("ascent negates the update") {
  Tensor w_down = Tensor::vec({1.0});
  Tensor w_up = Tensor::vec({1.0});
  Tensor g = Tensor::vec({0.8});
  AdamState s1 = AdamState::like({&w_down});
  AdamState s2 = AdamState::like({&w_up});
  adam_step(s1, {&w_down}, {&g}, 0.1, 0.9, Direction::descent);
  adam_step(s2, {&w_up}, {&g}, 0.1, 0.9, Direction::ascent);
  CHECK(w_down[0] < 1.0);
  CHECK(w_up[0] > 1.0);
  CHECK(w_up[0] - 1.0 == doctest::Approx(1.0 - w_down[0]).epsilon(1e-15));
}

TEST_CASE("non-finite gradients abort the step") {
  Tensor w = Tensor::vec({1.0});
  Tensor g = Tensor::vec({std::numeric_limits<double>::quiet_NaN()});
  AdamState state = AdamState::like({&w});
  CHECK_THROWS_AS(adam_step(state, {&w}, {&g}, 0.1, 0.9, Direction::descent),
                  std::runtime_error);
  CHECK(w[0] == 1.0);
  CHECK(state.step == 0);
}

}  // TEST_SUITE
