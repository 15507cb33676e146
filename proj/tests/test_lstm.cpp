#include <cmath>

#include <doctest.h>

#include "isslstm/lstm.hpp"
#include "test_helpers.hpp"

using namespace isslstm;

namespace {

VectorXd scalar(double v) {
  VectorXd x(1);
  x << v;
  return x;
}

}  // namespace

TEST_CASE("activation functions") {
  CHECK(sigma_g(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sigma_c(0.0) == 0.0);
  CHECK(sigma_c(1.0) == doctest::Approx(0.7615941559557649).epsilon(1e-14));
  // bounds
  CHECK(sigma_g(30.0) < 1.0);
  CHECK(sigma_g(-100.0) > 0.0);
  CHECK(sigma_c(18.0) < 1.0);
  CHECK(sigma_c(-18.0) > -1.0);
}

TEST_CASE("scalar step against hand evaluation") {
  LstmParams p = LstmParams::zeros(1, 1, 1);
  LstmState s = LstmState::zero(1);

  SUBCASE("all zero stays at the origin") {
    const LstmState next = step(p, s, scalar(0.0));
    CHECK(next.x(0) == 0.0);
    CHECK(next.xi(0) == 0.0);
  }

  SUBCASE("candidate bias drives the state") {
    p.bc(0) = 1.0;
    const LstmState next = step(p, s, scalar(0.0));
    const double x1 = 0.5 * std::tanh(1.0);
    CHECK(next.x(0) == doctest::Approx(x1).epsilon(1e-15));
    CHECK(next.xi(0) == doctest::Approx(0.5 * std::tanh(x1)).epsilon(1e-15));
  }

  SUBCASE("forget gate halves the state") {
    s.x(0) = 1.0;
    const LstmState next = step(p, s, scalar(0.0));
    CHECK(next.x(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(next.xi(0) == doctest::Approx(0.5 * std::tanh(0.5)).epsilon(1e-15));
  }
}

TEST_CASE("step rejects dimension mismatches") {
  const LstmParams p = LstmParams::zeros(2, 1, 1);
  CHECK_THROWS_AS(step(p, LstmState::zero(2), VectorXd::Zero(3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(step(p, LstmState::zero(3), VectorXd::Zero(1)),
                  std::invalid_argument);
}

TEST_CASE("output map") {
  LstmParams p = LstmParams::zeros(2, 1, 1);
  LstmState s = LstmState::zero(2);

  SUBCASE("zero gain returns the bias") {
    p.by(0) = 0.7;
    s.xi << 0.3, -0.2;
    CHECK(output(p, s)(0) == 0.7);
  }

  SUBCASE("identity") {
    LstmParams q = LstmParams::zeros(2, 1, 2);
    q.C = MatrixXd::Identity(2, 2);
    s.xi << 0.4, -0.9;
    CHECK((output(q, s) - s.xi).norm() == 0.0);
  }

  SUBCASE("hand matrix-vector product") {
    p.C << 2.0, -1.0;
    p.by(0) = 0.5;
    s.xi << 1.0, 3.0;
    CHECK(output(p, s)(0) == doctest::Approx(-0.5).epsilon(1e-15));
  }
}

TEST_CASE("simulate basics") {
  LstmParams p = LstmParams::zeros(1, 1, 1);
  p.by(0) = 0.3;

  SUBCASE("zero parameters: constant output, geometric state decay") {
    LstmState s0{scalar(2.0), scalar(0.0)};
    const std::vector<VectorXd> u(10, scalar(0.5));
    const SimResult r = simulate(p, s0, u);
    REQUIRE(r.outputs.size() == 10);
    for (const auto& y : r.outputs) CHECK(y(0) == 0.3);
    for (std::size_t k = 1; k < r.states.size(); ++k)
      CHECK(r.states[k].x(0) ==
            doctest::Approx(2.0 * std::pow(0.5, k)).epsilon(1e-12));
  }

  SUBCASE("length-1 input gives exactly one step") {
    const SimResult r = simulate(p, LstmState::zero(1), {scalar(0.0)});
    CHECK(r.outputs.size() == 1);
    CHECK(r.states.size() == 2);
  }

  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(simulate(p, LstmState::zero(1), {}), std::invalid_argument);
  }

  SUBCASE("non-finite state raises DivergenceError with the step index") {
    LstmState bad{scalar(std::nan("")), scalar(0.0)};
    try {
      simulate(p, bad, std::vector<VectorXd>(3, scalar(0.0)));
      FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
      CHECK(e.step_index == 0);
    }
  }
}

TEST_CASE("simulate properties on a random certified network") {
  std::mt19937_64 rng(42);
  const LstmParams p = test::random_certified(3, 2, 1, rng);
  std::vector<VectorXd> u;
  for (int k = 0; k < 40; ++k) u.push_back(test::random_vector(2, 1.0, rng));
  LstmState s0{test::random_vector(3, 2.0, rng), test::random_vector(3, 3.0, rng)};
  const SimResult r = simulate(p, s0, u);

  SUBCASE("cell state confined to (-1,1) after the first step") {
    for (std::size_t k = 1; k < r.states.size(); ++k)
      CHECK((r.states[k].xi.cwiseAbs().array() < 1.0).all());
  }

  SUBCASE("deterministic: identical runs are bit-identical") {
    const SimResult r2 = simulate(p, s0, u);
    for (std::size_t k = 0; k < r.outputs.size(); ++k)
      CHECK(r.outputs[k] == r2.outputs[k]);
  }

  SUBCASE("strict properness: outputs come from the post-step state only") {
    for (std::size_t k = 0; k < r.outputs.size(); ++k)
      CHECK((r.outputs[k] - output(p, r.states[k + 1])).norm() == 0.0);
    // perturbing a later input leaves earlier outputs untouched
    auto u2 = u;
    u2.back() = VectorXd::Zero(2);
    const SimResult r2 = simulate(p, s0, u2);
    for (std::size_t k = 0; k + 1 < r.outputs.size(); ++k)
      CHECK(r.outputs[k] == r2.outputs[k]);
  }

  SUBCASE("time invariance: restart from an intermediate state") {
    const std::size_t cut = 17;
    const std::vector<VectorXd> head(u.begin(), u.begin() + cut);
    const std::vector<VectorXd> tail(u.begin() + cut, u.end());
    const SimResult rh = simulate(p, s0, head);
    const SimResult rt = simulate(p, rh.states.back(), tail);
    for (std::size_t k = 0; k < tail.size(); ++k)
      CHECK((rt.outputs[k] - r.outputs[cut + k]).norm() == 0.0);
  }
}

TEST_CASE("two-layer stack chains the fresh cell state") {
  std::mt19937_64 rng(7);
  LstmStack stack;
  stack.layers.push_back(test::random_certified(2, 1, 1, rng));
  stack.layers.push_back(test::random_certified(3, 2, 1, rng));
  stack.validate();

  StackState s = StackState::zero(stack);
  const VectorXd u = scalar(0.4);
  const StackState next = step(stack, s, u);

  // layer 2 must have consumed layer 1's updated cell state
  const LstmState l1_next = step(stack.layers[0], s.layers[0], u);
  const LstmState l2_next = step(stack.layers[1], s.layers[1], l1_next.xi);
  CHECK((next.layers[0].xi - l1_next.xi).norm() == 0.0);
  CHECK((next.layers[1].x - l2_next.x).norm() == 0.0);
  CHECK((next.layers[1].xi - l2_next.xi).norm() == 0.0);

  // stack output comes from the last layer
  CHECK((output(stack, next) - output(stack.layers[1], next.layers[1])).norm() ==
        0.0);
}

TEST_CASE("stack dimension chaining is validated") {
  std::mt19937_64 rng(9);
  LstmStack stack;
  stack.layers.push_back(test::random_certified(2, 1, 1, rng));
  stack.layers.push_back(test::random_certified(3, 5, 1, rng));  // wrong n_u
  CHECK_THROWS_AS(stack.validate(), std::invalid_argument);
}

TEST_CASE("parameter validation") {
  LstmParams p = LstmParams::zeros(2, 1, 1);
  p.validate();
  p.Uc = MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = LstmParams::zeros(2, 1, 1);
  p.bf(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
