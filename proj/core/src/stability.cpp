#include "isslstm/stability.hpp"

#include <algorithm>
#include <cmath>

namespace isslstm {

double norm_1_induced(const MatrixXd& A) {
  if (A.size() == 0)
    throw std::invalid_argument("norm_1_induced: empty matrix");
  return A.cwiseAbs().colwise().sum().maxCoeff();
}

double norm_inf_induced(const MatrixXd& A) {
  if (A.size() == 0)
    throw std::invalid_argument("norm_inf_induced: empty matrix");
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

namespace {

// |[W U b]|_inf of the horizontal concatenation.
double gate_inf_norm(const MatrixXd& W, const MatrixXd& U, const VectorXd& b) {
  MatrixXd cat(W.rows(), W.cols() + U.cols() + 1);
  cat << W, U, b;
  return norm_inf_induced(cat);
}

}  // namespace

IssCertificate iss_check(const LstmParams& p) {
  p.validate();
  const double a_o = sigma_g(gate_inf_norm(p.Wo, p.Uo, p.bo));
  const double a_f = sigma_g(gate_inf_norm(p.Wf, p.Uf, p.bf));
  const double a_i = sigma_g(gate_inf_norm(p.Wi, p.Ui, p.bi));
  IssCertificate cert;
  cert.lhs1 = (1.0 + a_o) * a_f;
  cert.lhs2 = (1.0 + a_o) * a_i * norm_1_induced(p.Uc);
  cert.delta = std::min(1.0 - cert.lhs1, 1.0 - cert.lhs2);
  cert.is_iss = cert.delta > 0.0;
  return cert;
}

IssCertificate iss_check_stack(const LstmStack& stack) {
  stack.validate();
  IssCertificate cert;
  cert.is_iss = true;
  cert.delta = 1.0;
  for (const auto& layer : stack.layers) {
    IssCertificate c = iss_check(layer);
    cert.is_iss = cert.is_iss && c.is_iss;
    if (c.delta < cert.delta) {
      cert.delta = c.delta;
      cert.lhs1 = c.lhs1;
      cert.lhs2 = c.lhs2;
    }
    cert.per_layer.push_back(std::move(c));
  }
  return cert;
}

double lyapunov_V(const VectorXd& chi) { return chi.lpNorm<1>(); }

LyapunovReport lyapunov_decrease(const LstmParams& p, const LstmState& s,
                                 const VectorXd& u) {
  const IssCertificate cert = iss_check(p);
  if (!cert.is_iss)
    throw CertificateRequiredError(
        "lyapunov_decrease: network fails the ISS certificate");
  if ((u.cwiseAbs().array() > 1.0).any())
    throw std::domain_error("lyapunov_decrease: u outside [-1,1]^{n_u}");
  if ((s.xi.cwiseAbs().array() >= 1.0).any())
    throw std::domain_error("lyapunov_decrease: xi outside (-1,1)^{n_x}");

  const VectorXd chi = s.chi();
  LyapunovReport r;
  r.V = lyapunov_V(chi);
  r.V_next = lyapunov_V(step(p, s, u).chi());
  r.decrease_lhs = r.V_next - r.V;
  const double nx = static_cast<double>(p.n_x());
  const double nu = static_cast<double>(p.n_u());
  r.decrease_rhs = -cert.delta * chi.norm() +
                   2.0 * norm_1_induced(p.Wc) * std::sqrt(nu) * u.norm() +
                   2.0 * std::sqrt(nx) * p.bc.norm();
  r.satisfied = r.decrease_lhs <= r.decrease_rhs + kDecreaseSlack;
  return r;
}

StateBound analytic_state_bound(const LstmParams& p, double u_sup) {
  if (u_sup < 0.0)
    throw std::domain_error("analytic_state_bound: u_sup must be >= 0");
  const IssCertificate cert = iss_check(p);
  if (!cert.is_iss)
    throw CertificateRequiredError(
        "analytic_state_bound: network fails the ISS certificate");
  const double nx = static_cast<double>(p.n_x());
  const double nu = static_cast<double>(p.n_u());
  const double s = 2.0 * norm_1_induced(p.Wc) * std::sqrt(nu) * u_sup +
                   2.0 * std::sqrt(nx) * p.bc.norm();
  StateBound b;
  b.rate = 1.0 - cert.delta / std::sqrt(2.0 * nx);
  b.radius = s * std::sqrt(2.0 * nx) / cert.delta;
  return b;
}

}  // namespace isslstm
