#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "isslstm/lstm.hpp"
#include "isslstm/signals.hpp"

namespace isslstm {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int max_iterations = 3000;
  double step_size = 5e-3;  // Adam base rate
  double step_decay = 1.0;  // final rate multiplier, geometric schedule
  // L2 shrinkage on the output map (C, b_y) only. Keeps the read-out
  // scale moderate so the model's reachable set is not inflated by the
  // initial-state transient; 0 disables.
  double output_l2 = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // exact-penalty schedule on the certificate constraints
  double penalty_mu0 = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e8;
  int penalty_check_every = 50;
  // repair budget spent purely on feasibility after the main loop
  int repair_iterations = 500;
  double delta_min = 0.05;  // required final certificate margin
  int washout = 50;         // steps excluded from the loss
  int truncation = 0;       // BPTT window, 0 = full sequence
  std::uint64_t seed = 0;

  void validate(Eigen::Index sequence_length) const;
};

// Sentinel returned by the loss on a diverged free-run simulation.
inline constexpr double kDivergedLoss = 1e12;

// Free-run mean-square prediction error: simulate from the zero state
// over the whole dataset input, average |y_model - y_data|_2^2 over
// steps past the washout.
double mse_loss(const LstmParams& p, const Dataset& data, int washout);

// Exact gradient of the (possibly truncation-windowed) free-run loss by
// backpropagation through time. Returns the gradient in an
// LstmParams-shaped container; `loss_out`, when non-null, receives the
// loss of the same forward pass.
LstmParams loss_gradient(const LstmParams& p, const Dataset& data,
                         const TrainConfig& cfg, double* loss_out = nullptr);

// Certificate left-hand sides and their subgradients (active row/column
// selected, ties broken by lowest index; zero entries contribute zero).
struct ConstraintEval {
  double lhs1 = 0.0;
  double lhs2 = 0.0;
  LstmParams grad1;
  LstmParams grad2;
};

ConstraintEval constraint_values(const LstmParams& p);

struct TrainRecord {
  int iter = 0;
  double loss = 0.0;
  double lhs1 = 0.0;
  double lhs2 = 0.0;
  double mu = 0.0;
};

struct TrainResult {
  LstmParams params;
  std::vector<TrainRecord> history;
};

// Penalty-method training: minimizes the free-run MSE subject to both
// certificate left-hand sides staying below 1 - delta_min. Throws
// TrainingError if the budget is exhausted without a feasible result.
TrainResult train(const LstmParams& p0, const Dataset& data,
                  const TrainConfig& cfg);

// Uniform [-r, r] initialization with r halved until the certificate
// holds with margin delta_min.
LstmParams init_params(int n_x, int n_u, int n_y, double delta_min,
                       std::uint64_t seed);

// FIT index: 100 (1 - |y_ref - y_model|_2 / |y_ref|_2) over the stacked
// sequences. Throws std::domain_error when the reference has zero norm.
double fit_index(const MatrixXd& y_ref, const MatrixXd& y_model);

}  // namespace isslstm
