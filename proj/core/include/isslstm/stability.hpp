#pragma once

#include <stdexcept>
#include <vector>

#include "isslstm/lstm.hpp"

namespace isslstm {

class CertificateRequiredError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Induced 1-norm: max absolute column sum.
double norm_1_induced(const MatrixXd& A);
/// Induced infinity-norm: max absolute row sum.
double norm_inf_induced(const MatrixXd& A);

// Sufficient-condition certificate: both left-hand sides must clear 1 by
// a strictly positive margin delta for the network to be ISS w.r.t.
// u in [-1,1]^{n_u} and the bias b_c.
struct IssCertificate {
  double lhs1 = 0.0;
  double lhs2 = 0.0;
  double delta = 0.0;  // min(1 - lhs1, 1 - lhs2)
  bool is_iss = false;
  std::vector<IssCertificate> per_layer;  // populated for stacks
};

IssCertificate iss_check(const LstmParams& p);
IssCertificate iss_check_stack(const LstmStack& stack);

/// ISS-Lyapunov candidate V(chi) = |chi|_1.
double lyapunov_V(const VectorXd& chi);

struct LyapunovReport {
  double V = 0.0;
  double V_next = 0.0;
  double decrease_lhs = 0.0;  // V_next - V
  double decrease_rhs = 0.0;  // -delta|chi|_2 + 2|Wc|_1 sqrt(n_u)|u|_2 + 2 sqrt(n_x)|bc|_2
  bool satisfied = false;
};

// Absolute rounding slack on the decrease inequality.
inline constexpr double kDecreaseSlack = 1e-10;

// Evaluates the one-step Lyapunov decrease inequality at (s, u).
// Requires a certified network, u in [-1,1]^{n_u} and xi in (-1,1)^{n_x}.
LyapunovReport lyapunov_decrease(const LstmParams& p, const LstmState& s,
                                 const VectorXd& u);

// Geometric consequence of the decrease inequality:
//   V+ <= rate * V + s,  rate = 1 - delta/sqrt(2 n_x),
//   s = 2|Wc|_1 sqrt(n_u) u_sup + 2 sqrt(n_x)|bc|_2,
// so asymptotically |chi|_2 <= V <= radius = s sqrt(2 n_x)/delta.
// Conservative by construction.
struct StateBound {
  double rate = 0.0;
  double radius = 0.0;
};

StateBound analytic_state_bound(const LstmParams& p, double u_sup);

}  // namespace isslstm
