#include "isslstm/signals.hpp"

#include <cmath>
#include <stdexcept>

#include "isslstm/rng.hpp"

namespace isslstm {

void MprsClass::validate() const {
  if (!(rho_u >= 0.0 && rho_u <= 1.0))
    throw std::domain_error("MprsClass: rho_u must lie in [0, 1]");
  if (tau < 1) throw std::domain_error("MprsClass: tau must be >= 1");
  if (Ts <= 0.0) throw std::domain_error("MprsClass: Ts must be positive");
  if (dwell_min_s < Ts)
    throw std::domain_error("MprsClass: dwell_min_s must be >= Ts");
  if (dwell_max_s < dwell_min_s)
    throw std::domain_error("MprsClass: dwell range inverted");
  if (n_u < 1) throw std::domain_error("MprsClass: n_u must be >= 1");
}

int MprsClass::dwell_min_steps() const {
  return static_cast<int>(std::lround(dwell_min_s / Ts));
}

int MprsClass::dwell_max_steps() const {
  return static_cast<int>(std::lround(dwell_max_s / Ts));
}

std::vector<VectorXd> gen_mprs(const MprsClass& cls, std::uint64_t seed) {
  cls.validate();
  std::vector<VectorXd> seq(cls.tau, VectorXd::Zero(cls.n_u));
  std::uniform_real_distribution<double> level(-cls.rho_u, cls.rho_u);
  std::uniform_int_distribution<int> dwell(cls.dwell_min_steps(),
                                           cls.dwell_max_steps());
  // one substream per channel so channels switch independently
  for (int ch = 0; ch < cls.n_u; ++ch) {
    auto rng = make_engine(seed, static_cast<std::uint64_t>(ch));
    int k = 0;
    while (k < cls.tau) {
      const double a = level(rng);
      const int d = dwell(rng);
      for (int j = 0; j < d && k < cls.tau; ++j, ++k) seq[k](ch) = a;
    }
  }
  return seq;
}

MatrixXd add_white_noise(const MatrixXd& data, double std, std::uint64_t seed) {
  if (std < 0.0) throw std::domain_error("add_white_noise: negative std");
  if (std == 0.0) return data;
  auto rng = make_engine(seed, 0);
  std::normal_distribution<double> gauss(0.0, std);
  MatrixXd out = data;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += gauss(rng);
  return out;
}

std::vector<VectorXd> add_white_noise(const std::vector<VectorXd>& seq,
                                      double std, std::uint64_t seed) {
  if (std < 0.0) throw std::domain_error("add_white_noise: negative std");
  if (std == 0.0) return seq;
  auto rng = make_engine(seed, 0);
  std::normal_distribution<double> gauss(0.0, std);
  std::vector<VectorXd> out = seq;
  for (auto& v : out)
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) += gauss(rng);
  return out;
}

NormalizationSpec NormalizationSpec::identity(int channels) {
  return NormalizationSpec{VectorXd::Zero(channels), VectorXd::Ones(channels)};
}

NormalizationSpec fit_normalization(const MatrixXd& data) {
  if (data.rows() == 0 || data.cols() == 0)
    throw std::invalid_argument("fit_normalization: empty data");
  NormalizationSpec spec;
  spec.mean = data.colwise().mean();
  spec.max_dev =
      (data.rowwise() - spec.mean.transpose()).cwiseAbs().colwise().maxCoeff();
  for (Eigen::Index c = 0; c < spec.max_dev.size(); ++c)
    if (spec.max_dev(c) <= 0.0)
      throw std::domain_error("fit_normalization: constant channel " +
                              std::to_string(c));
  return spec;
}

MatrixXd normalize(const MatrixXd& data, const NormalizationSpec& spec) {
  return (data.rowwise() - spec.mean.transpose()).array().rowwise() /
         spec.max_dev.transpose().array();
}

MatrixXd denormalize(const MatrixXd& data, const NormalizationSpec& spec) {
  return (data.array().rowwise() * spec.max_dev.transpose().array()).matrix()
             .rowwise() +
         spec.mean.transpose();
}

VectorXd normalize(const VectorXd& sample, const NormalizationSpec& spec) {
  return (sample - spec.mean).cwiseQuotient(spec.max_dev);
}

VectorXd denormalize(const VectorXd& sample, const NormalizationSpec& spec) {
  return sample.cwiseProduct(spec.max_dev) + spec.mean;
}

}  // namespace isslstm
