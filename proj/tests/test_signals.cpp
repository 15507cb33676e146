#include <cmath>
#include <map>
#include <random>

#include <doctest.h>

#include "isslstm/signals.hpp"

using namespace isslstm;

TEST_CASE("MPRS containment and length") {
  MprsClass cls;
  cls.rho_u = 0.7;
  cls.tau = 2000;
  const auto seq = gen_mprs(cls, 99);
  REQUIRE(seq.size() == 2000);
  for (const auto& u : seq) {
    CHECK(u.size() == 1);
    CHECK(std::abs(u(0)) <= 0.7);
  }
}

TEST_CASE("MPRS degenerate dwell gives fixed segment length") {
  MprsClass cls;
  cls.rho_u = 1.0;
  cls.tau = 95;
  cls.dwell_min_s = 300.0;
  cls.dwell_max_s = 300.0;
  const auto seq = gen_mprs(cls, 4);
  // every segment is exactly 30 samples, the last truncated at tau
  for (int k = 0; k < 95; ++k)
    CHECK(seq[k](0) == seq[(k / 30) * 30](0));
  CHECK(seq[0](0) != seq[30](0));  // fresh level per segment (a.s.)
}

TEST_CASE("MPRS zero amplitude is identically zero") {
  MprsClass cls;
  cls.rho_u = 0.0;
  cls.tau = 100;
  for (const auto& u : gen_mprs(cls, 1)) CHECK(u(0) == 0.0);
}

TEST_CASE("MPRS is deterministic in the seed") {
  MprsClass cls;
  cls.tau = 500;
  cls.n_u = 2;
  const auto a = gen_mprs(cls, 123);
  const auto b = gen_mprs(cls, 123);
  const auto c = gen_mprs(cls, 124);
  bool all_equal = true, any_diff = false;
  for (int k = 0; k < 500; ++k) {
    all_equal = all_equal && a[k] == b[k];
    any_diff = any_diff || a[k] != c[k];
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("MPRS dwell statistics are uniform on the step range") {
  MprsClass cls;
  cls.tau = 200000;
  cls.dwell_min_s = 30.0;  // 3..10 steps so a desk-scale run sees many segments
  cls.dwell_max_s = 100.0;
  cls.Ts = 10.0;
  std::map<int, int> counts;
  int segments = 0;
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    const auto seq = gen_mprs(cls, seed);
    int run = 1;
    for (std::size_t k = 1; k < seq.size(); ++k) {
      if (seq[k](0) == seq[k - 1](0)) {
        ++run;
      } else {
        ++counts[run];
        ++segments;
        run = 1;
      }
    }
  }
  REQUIRE(segments > 10000);
  const int bins = cls.dwell_max_steps() - cls.dwell_min_steps() + 1;
  const double expected = static_cast<double>(segments) / bins;
  double chi2 = 0.0;
  for (int d = cls.dwell_min_steps(); d <= cls.dwell_max_steps(); ++d) {
    const double diff = counts[d] - expected;
    chi2 += diff * diff / expected;
  }
  // dof = 7; anything below 40 is a comfortable desk-scale sanity margin
  CHECK(chi2 < 40.0);
}

TEST_CASE("MPRS class validation") {
  MprsClass cls;
  cls.rho_u = 1.5;
  CHECK_THROWS_AS(gen_mprs(cls, 0), std::domain_error);
  cls = MprsClass{};
  cls.dwell_min_s = 5.0;  // below Ts
  CHECK_THROWS_AS(gen_mprs(cls, 0), std::domain_error);
}

TEST_CASE("white noise") {
  MatrixXd data = MatrixXd::Zero(1000, 2);

  SUBCASE("zero std is the identity") {
    CHECK(add_white_noise(data, 0.0, 7) == data);
  }

  SUBCASE("negative std rejected") {
    CHECK_THROWS_AS(add_white_noise(data, -0.1, 7), std::domain_error);
  }

  SUBCASE("same seed, same noise") {
    CHECK(add_white_noise(data, 0.3, 7) == add_white_noise(data, 0.3, 7));
  }

  SUBCASE("sample mean obeys the CLT envelope") {
    MatrixXd big = MatrixXd::Zero(1000000, 1);
    const MatrixXd noisy = add_white_noise(big, 1.0, 21);
    CHECK(std::abs(noisy.mean()) < 5.0 / 1000.0);
  }
}

TEST_CASE("normalization from the stated rule") {
  MatrixXd data(3, 1);
  data << 0.0, 2.0, 4.0;
  const NormalizationSpec spec = fit_normalization(data);
  CHECK(spec.mean(0) == 2.0);
  CHECK(spec.max_dev(0) == 2.0);
  const MatrixXd n = normalize(data, spec);
  CHECK(n(0, 0) == -1.0);
  CHECK(n(1, 0) == 0.0);
  CHECK(n(2, 0) == 1.0);
}

TEST_CASE("normalization maps the defining data into [-1,1] touching the edge") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> unif(-4.0, 9.0);
  MatrixXd data(200, 3);
  for (Eigen::Index i = 0; i < data.size(); ++i) *(data.data() + i) = unif(rng);
  const NormalizationSpec spec = fit_normalization(data);
  const MatrixXd n = normalize(data, spec);
  CHECK(n.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  for (Eigen::Index c = 0; c < 3; ++c)
    CHECK(n.col(c).cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("refit of normalized data is centered") {
    const NormalizationSpec refit = fit_normalization(n);
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(std::abs(refit.mean(c)) < 1e-12);
      CHECK(refit.max_dev(c) <= 2.0);
    }
  }

  SUBCASE("roundtrip is the identity") {
    const MatrixXd back = denormalize(n, spec);
    CHECK((back - data).cwiseAbs().maxCoeff() < 1e-12 * data.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("constant channel is rejected") {
  MatrixXd data = MatrixXd::Constant(10, 1, 3.5);
  CHECK_THROWS_AS(fit_normalization(data), std::domain_error);
}
