#include <cmath>

#include <doctest.h>

#include "isslstm/stability.hpp"
#include "isslstm/training.hpp"
#include "test_helpers.hpp"

using namespace isslstm;

namespace {

constexpr MatrixXd LstmParams::* kMatFields[] = {
    &LstmParams::Wf, &LstmParams::Wi, &LstmParams::Wc, &LstmParams::Wo,
    &LstmParams::Uf, &LstmParams::Ui, &LstmParams::Uc, &LstmParams::Uo,
    &LstmParams::C};
constexpr VectorXd LstmParams::* kVecFields[] = {
    &LstmParams::bf, &LstmParams::bi, &LstmParams::bc, &LstmParams::bo,
    &LstmParams::by};

double dot(const LstmParams& a, const LstmParams& b) {
  double s = 0.0;
  for (auto f : kMatFields) s += ((a.*f).array() * (b.*f).array()).sum();
  for (auto f : kVecFields) s += (a.*f).dot(b.*f);
  return s;
}

LstmParams axpy(const LstmParams& p, double alpha, const LstmParams& d) {
  LstmParams out = p;
  for (auto f : kMatFields) out.*f += alpha * (d.*f);
  for (auto f : kVecFields) out.*f += alpha * (d.*f);
  return out;
}

LstmParams random_direction(int n_x, int n_u, int n_y, std::mt19937_64& rng) {
  LstmParams d = LstmParams::zeros(n_x, n_u, n_y);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (auto f : kMatFields)
    for (Eigen::Index i = 0; i < (d.*f).size(); ++i)
      *((d.*f).data() + i) = unif(rng);
  for (auto f : kVecFields)
    for (Eigen::Index i = 0; i < (d.*f).size(); ++i)
      *((d.*f).data() + i) = unif(rng);
  return d;
}

Dataset teacher_dataset(const LstmParams& teacher, int T,
                        std::mt19937_64& rng) {
  std::vector<VectorXd> u;
  for (int k = 0; k < T; ++k)
    u.push_back(test::random_vector(teacher.n_u(), 1.0, rng));
  const SimResult sim =
      simulate(teacher, LstmState::zero(teacher.n_x()), u);
  Dataset data;
  data.u = MatrixXd(T, teacher.n_u());
  data.y = MatrixXd(T, teacher.n_y());
  for (int k = 0; k < T; ++k) {
    data.u.row(k) = u[k].transpose();
    data.y.row(k) = sim.outputs[k].transpose();
  }
  data.u_norm = NormalizationSpec::identity(teacher.n_u());
  data.y_norm = NormalizationSpec::identity(teacher.n_y());
  return data;
}

}  // namespace

TEST_CASE("free-run loss on constant-output models") {
  LstmParams p = LstmParams::zeros(1, 1, 1);
  p.by(0) = 0.4;
  Dataset data;
  data.u = MatrixXd::Zero(20, 1);
  data.y = MatrixXd::Constant(20, 1, 0.1);
  data.u_norm = NormalizationSpec::identity(1);
  data.y_norm = NormalizationSpec::identity(1);

  // residual is 0.3 at every counted step
  CHECK(mse_loss(p, data, 0) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(mse_loss(p, data, 10) == doctest::Approx(0.09).epsilon(1e-14));

  SUBCASE("perfect model has zero loss") {
    p.by(0) = 0.1;
    CHECK(mse_loss(p, data, 0) == 0.0);
  }

  SUBCASE("washout must leave room") {
    TrainConfig cfg;
    cfg.washout = 20;
    CHECK_THROWS_AS(cfg.validate(20), std::invalid_argument);
  }
}

TEST_CASE("output-bias gradient matches the closed form") {
  LstmParams p = LstmParams::zeros(1, 1, 1);
  p.by(0) = 0.4;
  Dataset data;
  data.u = MatrixXd::Zero(10, 1);
  data.y = MatrixXd::Constant(10, 1, 0.1);
  data.u_norm = NormalizationSpec::identity(1);
  data.y_norm = NormalizationSpec::identity(1);
  TrainConfig cfg;
  cfg.washout = 2;
  double loss = 0.0;
  const LstmParams g = loss_gradient(p, data, cfg, &loss);
  CHECK(loss == doctest::Approx(0.09).epsilon(1e-14));
  // d/db_y mean (b_y - 0.1)^2 = 2 (b_y - 0.1)
  CHECK(g.by(0) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("BPTT gradient agrees with central finite differences") {
  std::mt19937_64 rng(71);
  const LstmParams p = test::random_certified(2, 1, 1, rng);
  const Dataset data = teacher_dataset(test::random_certified(2, 1, 1, rng),
                                       30, rng);
  TrainConfig cfg;
  cfg.washout = 5;

  double loss = 0.0;
  const LstmParams g = loss_gradient(p, data, cfg, &loss);
  CHECK(loss == doctest::Approx(mse_loss(p, data, cfg.washout)).epsilon(1e-12));

  for (int trial = 0; trial < 5; ++trial) {
    const LstmParams d = random_direction(2, 1, 1, rng);
    const double h = 1e-6;
    const double fd = (mse_loss(axpy(p, h, d), data, cfg.washout) -
                       mse_loss(axpy(p, -h, d), data, cfg.washout)) /
                      (2.0 * h);
    CHECK(dot(g, d) == doctest::Approx(fd).epsilon(1e-5));
  }

  SUBCASE("a window no shorter than the sequence is full unrolling") {
    TrainConfig full = cfg;
    full.truncation = 30;
    const LstmParams g2 = loss_gradient(p, data, full);
    for (auto f : kMatFields)
      CHECK((g.*f - g2.*f).cwiseAbs().maxCoeff() == 0.0);
    for (auto f : kVecFields)
      CHECK((g.*f - g2.*f).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("certificate constraint values and subgradients") {
  SUBCASE("zero parameters") {
    const ConstraintEval ce = constraint_values(LstmParams::zeros(2, 1, 1));
    CHECK(ce.lhs1 == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(ce.lhs2 == 0.0);
  }

  SUBCASE("inactive rows and columns get zero subgradient") {
    LstmParams p = LstmParams::zeros(2, 1, 1);
    p.Wf << 2.0, 0.1;   // row 0 clearly active
    p.Uc << 2.0, 0.0,
            0.0, 1.0;   // column 0 clearly active
    const ConstraintEval ce = constraint_values(p);
    CHECK(ce.grad1.Wf(1, 0) == 0.0);
    CHECK(ce.grad1.Wf(0, 0) != 0.0);
    CHECK(ce.grad2.Uc(1, 1) == 0.0);
    CHECK(ce.grad2.Uc(0, 0) != 0.0);
  }

  SUBCASE("directional finite differences at a smooth point") {
    std::mt19937_64 rng(83);
    const LstmParams p = test::random_certified(3, 2, 1, rng);
    const ConstraintEval ce = constraint_values(p);
    for (int trial = 0; trial < 3; ++trial) {
      const LstmParams d = random_direction(3, 2, 1, rng);
      const double h = 1e-7;
      const ConstraintEval cp = constraint_values(axpy(p, h, d));
      const ConstraintEval cm = constraint_values(axpy(p, -h, d));
      CHECK(dot(ce.grad1, d) ==
            doctest::Approx((cp.lhs1 - cm.lhs1) / (2.0 * h)).epsilon(1e-4));
      CHECK(dot(ce.grad2, d) ==
            doctest::Approx((cp.lhs2 - cm.lhs2) / (2.0 * h)).epsilon(1e-4));
    }
  }
}

TEST_CASE("training keeps a feasible start feasible") {
  std::mt19937_64 rng(91);
  const LstmParams teacher = test::random_certified(2, 1, 1, rng, 0.06);
  const Dataset data = teacher_dataset(teacher, 60, rng);
  TrainConfig cfg;
  cfg.max_iterations = 60;
  cfg.repair_iterations = 200;
  cfg.washout = 10;
  cfg.delta_min = 0.05;

  const TrainResult res = train(teacher, data, cfg);
  const IssCertificate cert = iss_check(res.params);
  CHECK(cert.is_iss);
  CHECK(cert.delta >= cfg.delta_min - 1e-12);
  REQUIRE_FALSE(res.history.empty());
  double best = res.history.front().loss;
  for (const auto& rec : res.history) best = std::min(best, rec.loss);
  // starting at the teacher the loss is already 0; it must stay near it
  CHECK(best <= 1e-6);
}

TEST_CASE("infeasible start with a frozen budget is refused") {
  std::mt19937_64 rng(97);
  LstmParams p0 = test::random_certified(2, 1, 1, rng);
  p0.Wf.array() += 50.0;  // lhs1 > 1
  CHECK(constraint_values(p0).lhs1 > 1.0);
  const Dataset data = teacher_dataset(test::random_certified(2, 1, 1, rng),
                                       30, rng);
  TrainConfig cfg;
  cfg.max_iterations = 0;
  cfg.repair_iterations = 0;
  cfg.washout = 5;
  CHECK_THROWS_AS(train(p0, data, cfg), TrainingError);
}

TEST_CASE("penalty weight never decreases along the run") {
  std::mt19937_64 rng(101);
  LstmParams p0 = test::random_certified(2, 1, 1, rng);
  p0.Wf.array() += 5.0;
  const Dataset data = teacher_dataset(test::random_certified(2, 1, 1, rng),
                                       30, rng);
  TrainConfig cfg;
  cfg.max_iterations = 200;
  cfg.repair_iterations = 500;
  cfg.washout = 5;
  const TrainResult res = train(p0, data, cfg);
  for (std::size_t k = 1; k < res.history.size(); ++k)
    CHECK(res.history[k].mu >= res.history[k - 1].mu);
  CHECK(iss_check(res.params).delta >= cfg.delta_min - 1e-12);
}

TEST_CASE("random initialization is certified at the requested margin") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const LstmParams p = init_params(5, 1, 1, 0.05, seed);
    CHECK(p.n_x() == 5);
    CHECK(iss_check(p).delta >= 0.05);
  }
  CHECK_THROWS_AS(init_params(2, 1, 1, 0.3, 0), std::domain_error);
  CHECK_THROWS_AS(init_params(2, 1, 1, 0.0, 0), std::domain_error);
}

TEST_CASE("fit index") {
  MatrixXd ref(4, 1);
  ref << 1.0, -1.0, 1.0, -1.0;
  CHECK(fit_index(ref, ref) == 100.0);
  CHECK(fit_index(ref, MatrixXd::Zero(4, 1)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(fit_index(ref, 0.8 * ref) == doctest::Approx(80.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_index(MatrixXd::Zero(4, 1), ref), std::domain_error);
}
