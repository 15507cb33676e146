#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace isslstm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Multilevel pseudo-random signal: piecewise-constant, level uniform on
// [-rho_u, rho_u] per channel, dwell time uniform on [dwell_min_s,
// dwell_max_s] rounded to integer multiples of Ts. Channels switch
// independently.
struct MprsClass {
  double rho_u = 1.0;
  int tau = 2000;         // total length, steps
  double Ts = 10.0;       // s
  double dwell_min_s = 300.0;
  double dwell_max_s = 2000.0;
  int n_u = 1;

  void validate() const;
  int dwell_min_steps() const;
  int dwell_max_steps() const;
};

std::vector<VectorXd> gen_mprs(const MprsClass& cls, std::uint64_t seed);

// Adds i.i.d. zero-mean Gaussian noise with the given standard deviation
// to every entry. std == 0 is the identity.
std::vector<VectorXd> add_white_noise(const std::vector<VectorXd>& seq,
                                      double std, std::uint64_t seed);
MatrixXd add_white_noise(const MatrixXd& data, double std, std::uint64_t seed);

// Per-channel affine normalization: normalized = (raw - mean)/max_dev.
// On the defining dataset the normalized data lies in [-1, 1] with at
// least one sample touching the boundary per channel.
struct NormalizationSpec {
  VectorXd mean;
  VectorXd max_dev;

  static NormalizationSpec identity(int channels);
};

// Rows are time samples, columns are channels. Throws std::domain_error
// on a constant channel (max_dev would be 0).
NormalizationSpec fit_normalization(const MatrixXd& data);

MatrixXd normalize(const MatrixXd& data, const NormalizationSpec& spec);
MatrixXd denormalize(const MatrixXd& data, const NormalizationSpec& spec);
VectorXd normalize(const VectorXd& sample, const NormalizationSpec& spec);
VectorXd denormalize(const VectorXd& sample, const NormalizationSpec& spec);

// Time-indexed input/output data with the normalization that produced it.
struct Dataset {
  MatrixXd u;  // T x n_u, normalized
  MatrixXd y;  // T x n_y, normalized
  NormalizationSpec u_norm;
  NormalizationSpec y_norm;

  Eigen::Index size() const { return u.rows(); }
};

}  // namespace isslstm
