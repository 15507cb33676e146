#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace isslstm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thrown when a simulated state stops being finite; `step_index` is the
// first offending step.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step_index, const std::string& what)
      : std::runtime_error(what), step_index(step_index) {}
  std::size_t step_index;
};

/// Logistic gate activation, range (0,1).
inline double sigma_g(double t) { return 1.0 / (1.0 + std::exp(-t)); }
/// Candidate/cell activation tanh, range (-1,1).
inline double sigma_c(double t) { return std::tanh(t); }

inline VectorXd sigma_g(const VectorXd& v) {
  return v.unaryExpr([](double t) { return sigma_g(t); });
}
inline VectorXd sigma_c(const VectorXd& v) {
  return v.unaryExpr([](double t) { return sigma_c(t); });
}

// Weights of one strictly proper LSTM layer plus its affine output map.
// W*: n_x x n_u, U*: n_x x n_x, b*: n_x, C: n_y x n_x, by: n_y.
struct LstmParams {
  MatrixXd Wf, Wi, Wc, Wo;
  MatrixXd Uf, Ui, Uc, Uo;
  VectorXd bf, bi, bc, bo;
  MatrixXd C;
  VectorXd by;

  int n_x() const { return static_cast<int>(Uf.rows()); }
  int n_u() const { return static_cast<int>(Wf.cols()); }
  int n_y() const { return static_cast<int>(C.rows()); }

  static LstmParams zeros(int n_x, int n_u, int n_y);

  // Throws std::invalid_argument on inconsistent dimensions or non-finite
  // entries.
  void validate() const;
};

// State of one layer: x is the cell state (unbounded), xi the hidden
// state, confined to (-1,1)^{n_x} after the first step.
struct LstmState {
  VectorXd x;
  VectorXd xi;

  static LstmState zero(int n_x);
  static LstmState from_chi(const VectorXd& chi);

  // chi = [x; xi]
  VectorXd chi() const;
};

// Layer i's cell state feeds layer i+1 as input within the same global
// step; the last layer carries the stack's output map.
struct LstmStack {
  std::vector<LstmParams> layers;

  int n_u() const { return layers.front().n_u(); }
  int n_y() const { return layers.back().n_y(); }
  void validate() const;
};

struct StackState {
  std::vector<LstmState> layers;
  static StackState zero(const LstmStack& stack);
  VectorXd chi() const;
};

LstmState step(const LstmParams& p, const LstmState& s, const VectorXd& u);
StackState step(const LstmStack& stack, const StackState& s, const VectorXd& u);

VectorXd output(const LstmParams& p, const LstmState& s);
VectorXd output(const LstmStack& stack, const StackState& s);

struct SimResult {
  // states[k] is the state after k steps (states[0] == initial state);
  // outputs[k] is the output of states[k+1], one per input.
  std::vector<LstmState> states;
  std::vector<VectorXd> outputs;
};

struct StackSimResult {
  std::vector<StackState> states;
  std::vector<VectorXd> outputs;
};

SimResult simulate(const LstmParams& p, const LstmState& s0,
                   const std::vector<VectorXd>& u_seq);
StackSimResult simulate(const LstmStack& stack, const StackState& s0,
                        const std::vector<VectorXd>& u_seq);

}  // namespace isslstm
