#include "isslstm/lstm.hpp"

#include <cmath>
#include <sstream>

namespace isslstm {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

}  // namespace

LstmParams LstmParams::zeros(int n_x, int n_u, int n_y) {
  LstmParams p;
  p.Wf = MatrixXd::Zero(n_x, n_u);
  p.Wi = MatrixXd::Zero(n_x, n_u);
  p.Wc = MatrixXd::Zero(n_x, n_u);
  p.Wo = MatrixXd::Zero(n_x, n_u);
  p.Uf = MatrixXd::Zero(n_x, n_x);
  p.Ui = MatrixXd::Zero(n_x, n_x);
  p.Uc = MatrixXd::Zero(n_x, n_x);
  p.Uo = MatrixXd::Zero(n_x, n_x);
  p.bf = VectorXd::Zero(n_x);
  p.bi = VectorXd::Zero(n_x);
  p.bc = VectorXd::Zero(n_x);
  p.bo = VectorXd::Zero(n_x);
  p.C = MatrixXd::Zero(n_y, n_x);
  p.by = VectorXd::Zero(n_y);
  return p;
}

void LstmParams::validate() const {
  const int nx = n_x();
  const int nu = n_u();
  require(nx > 0 && nu > 0 && n_y() > 0, "LstmParams: empty dimensions");
  auto check_W = [&](const MatrixXd& m, const char* name) {
    std::ostringstream os;
    os << "LstmParams: " << name << " must be " << nx << "x" << nu;
    require(m.rows() == nx && m.cols() == nu, os.str());
  };
  auto check_U = [&](const MatrixXd& m, const char* name) {
    std::ostringstream os;
    os << "LstmParams: " << name << " must be " << nx << "x" << nx;
    require(m.rows() == nx && m.cols() == nx, os.str());
  };
  auto check_b = [&](const VectorXd& v, const char* name) {
    std::ostringstream os;
    os << "LstmParams: " << name << " must have length " << nx;
    require(v.size() == nx, os.str());
  };
  check_W(Wf, "Wf"); check_W(Wi, "Wi"); check_W(Wc, "Wc"); check_W(Wo, "Wo");
  check_U(Uf, "Uf"); check_U(Ui, "Ui"); check_U(Uc, "Uc"); check_U(Uo, "Uo");
  check_b(bf, "bf"); check_b(bi, "bi"); check_b(bc, "bc"); check_b(bo, "bo");
  require(C.cols() == nx, "LstmParams: C must have n_x columns");
  require(by.size() == C.rows(), "LstmParams: by must have n_y entries");
  for (const MatrixXd* m : {&Wf, &Wi, &Wc, &Wo, &Uf, &Ui, &Uc, &Uo, &C})
    require(all_finite(*m), "LstmParams: non-finite matrix entry");
  for (const VectorXd* v : {&bf, &bi, &bc, &bo, &by})
    require(v->allFinite(), "LstmParams: non-finite bias entry");
}

LstmState LstmState::zero(int n_x) {
  return LstmState{VectorXd::Zero(n_x), VectorXd::Zero(n_x)};
}

LstmState LstmState::from_chi(const VectorXd& chi) {
  require(chi.size() % 2 == 0, "LstmState: chi must have even length");
  const auto n = chi.size() / 2;
  return LstmState{chi.head(n), chi.tail(n)};
}

VectorXd LstmState::chi() const {
  VectorXd c(x.size() + xi.size());
  c << x, xi;
  return c;
}

void LstmStack::validate() const {
  require(!layers.empty(), "LstmStack: no layers");
  for (const auto& l : layers) l.validate();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    require(layers[i + 1].n_u() == layers[i].n_x(),
            "LstmStack: layer " + std::to_string(i + 1) +
                " input dim must equal layer " + std::to_string(i) +
                " state dim");
  }
}

StackState StackState::zero(const LstmStack& stack) {
  StackState s;
  s.layers.reserve(stack.layers.size());
  for (const auto& l : stack.layers) s.layers.push_back(LstmState::zero(l.n_x()));
  return s;
}

VectorXd StackState::chi() const {
  Eigen::Index total = 0;
  for (const auto& l : layers) total += l.x.size() + l.xi.size();
  VectorXd c(total);
  Eigen::Index off = 0;
  for (const auto& l : layers) {
    c.segment(off, l.x.size()) = l.x;
    off += l.x.size();
    c.segment(off, l.xi.size()) = l.xi;
    off += l.xi.size();
  }
  return c;
}

LstmState step(const LstmParams& p, const LstmState& s, const VectorXd& u) {
  require(u.size() == p.n_u(), "step: input dimension mismatch");
  require(s.x.size() == p.n_x() && s.xi.size() == p.n_x(),
          "step: state dimension mismatch");
  const VectorXd f = sigma_g(p.Wf * u + p.Uf * s.xi + p.bf);
  const VectorXd i = sigma_g(p.Wi * u + p.Ui * s.xi + p.bi);
  const VectorXd c = sigma_c(p.Wc * u + p.Uc * s.xi + p.bc);
  const VectorXd o = sigma_g(p.Wo * u + p.Uo * s.xi + p.bo);
  LstmState next;
  next.x = f.cwiseProduct(s.x) + i.cwiseProduct(c);
  next.xi = o.cwiseProduct(sigma_c(next.x));
  return next;
}

StackState step(const LstmStack& stack, const StackState& s, const VectorXd& u) {
  require(s.layers.size() == stack.layers.size(), "step: stack state mismatch");
  StackState next;
  next.layers.reserve(stack.layers.size());
  VectorXd v = u;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    next.layers.push_back(step(stack.layers[i], s.layers[i], v));
    v = next.layers.back().xi;  // freshly updated cell state feeds the next layer
  }
  return next;
}

VectorXd output(const LstmParams& p, const LstmState& s) {
  require(s.xi.size() == p.C.cols(), "output: state dimension mismatch");
  return p.C * s.xi + p.by;
}

VectorXd output(const LstmStack& stack, const StackState& s) {
  return output(stack.layers.back(), s.layers.back());
}

namespace {

template <class System, class State>
auto simulate_impl(const System& sys, const State& s0,
                   const std::vector<VectorXd>& u_seq) {
  if (u_seq.empty())
    throw std::invalid_argument("simulate: empty input sequence");
  std::vector<State> states;
  states.reserve(u_seq.size() + 1);
  states.push_back(s0);
  std::vector<VectorXd> outputs;
  outputs.reserve(u_seq.size());
  for (std::size_t k = 0; k < u_seq.size(); ++k) {
    State next = step(sys, states.back(), u_seq[k]);
    if (!next.chi().allFinite())
      throw DivergenceError(k, "simulate: non-finite state at step " +
                                   std::to_string(k));
    outputs.push_back(output(sys, next));
    states.push_back(std::move(next));
  }
  return std::make_pair(std::move(states), std::move(outputs));
}

}  // namespace

SimResult simulate(const LstmParams& p, const LstmState& s0,
                   const std::vector<VectorXd>& u_seq) {
  auto [states, outputs] = simulate_impl(p, s0, u_seq);
  return SimResult{std::move(states), std::move(outputs)};
}

StackSimResult simulate(const LstmStack& stack, const StackState& s0,
                        const std::vector<VectorXd>& u_seq) {
  auto [states, outputs] = simulate_impl(stack, s0, u_seq);
  return StackSimResult{std::move(states), std::move(outputs)};
}

}  // namespace isslstm
