#include "isslstm/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isslstm/rng.hpp"
#include "isslstm/stability.hpp"

namespace isslstm {

void TrainConfig::validate(Eigen::Index sequence_length) const {
  if (max_iterations < 0)
    throw std::invalid_argument("TrainConfig: negative iteration budget");
  if (!(delta_min > 0.0 && delta_min < 1.0))
    throw std::invalid_argument("TrainConfig: delta_min must lie in (0,1)");
  if (washout < 0 || washout >= sequence_length)
    throw std::invalid_argument("TrainConfig: washout must be < sequence length");
  if (truncation < 0)
    throw std::invalid_argument("TrainConfig: negative truncation");
  if (step_size < 0.0)
    throw std::invalid_argument("TrainConfig: negative step size");
  if (!(step_decay > 0.0 && step_decay <= 1.0))
    throw std::invalid_argument("TrainConfig: step decay must lie in (0,1]");
  if (output_l2 < 0.0)
    throw std::invalid_argument("TrainConfig: negative output shrinkage");
  if (penalty_growth < 1.0)
    throw std::invalid_argument("TrainConfig: penalty growth must be >= 1");
}

namespace {

// Flat parameter vector layout shared by the optimizer.
Eigen::Index flat_size(const LstmParams& p) {
  return 4 * p.n_x() * p.n_u() + 4 * p.n_x() * p.n_x() + 4 * p.n_x() +
         p.n_y() * p.n_x() + p.n_y();
}

void pack(const LstmParams& p, VectorXd& out) {
  Eigen::Index off = 0;
  auto put = [&](const MatrixXd& m) {
    out.segment(off, m.size()) = Eigen::Map<const VectorXd>(m.data(), m.size());
    off += m.size();
  };
  put(p.Wf); put(p.Wi); put(p.Wc); put(p.Wo);
  put(p.Uf); put(p.Ui); put(p.Uc); put(p.Uo);
  put(p.bf); put(p.bi); put(p.bc); put(p.bo);
  put(p.C); put(p.by);
}

void unpack(const VectorXd& v, LstmParams& p) {
  Eigen::Index off = 0;
  auto take = [&](MatrixXd& m) {
    m = Eigen::Map<const MatrixXd>(v.data() + off, m.rows(), m.cols());
    off += m.size();
  };
  auto take_v = [&](VectorXd& b) {
    b = v.segment(off, b.size());
    off += b.size();
  };
  take(p.Wf); take(p.Wi); take(p.Wc); take(p.Wo);
  take(p.Uf); take(p.Ui); take(p.Uc); take(p.Uo);
  take_v(p.bf); take_v(p.bi); take_v(p.bc); take_v(p.bo);
  take(p.C); take_v(p.by);
}

struct StepCache {
  VectorXd u;       // input at this step
  VectorXd xi_in;   // cell state entering the step
  VectorXd x_in;    // hidden state entering the step
  VectorXd f, i, c, o;
  VectorXd x_out;
  VectorXd tanh_x_out;
  VectorXd err;     // y_model - y_data, zero-size when not counted
};

// Forward free-run over the whole dataset; returns false on divergence.
bool forward_pass(const LstmParams& p, const Dataset& data, int washout,
                  std::vector<StepCache>& caches, double& loss) {
  const Eigen::Index T = data.size();
  caches.clear();
  caches.resize(T);
  LstmState s = LstmState::zero(p.n_x());
  double acc = 0.0;
  const double count = static_cast<double>(T - washout);
  for (Eigen::Index t = 0; t < T; ++t) {
    StepCache& cc = caches[t];
    cc.u = data.u.row(t).transpose();
    cc.x_in = s.x;
    cc.xi_in = s.xi;
    cc.f = sigma_g(p.Wf * cc.u + p.Uf * s.xi + p.bf);
    cc.i = sigma_g(p.Wi * cc.u + p.Ui * s.xi + p.bi);
    cc.c = sigma_c(p.Wc * cc.u + p.Uc * s.xi + p.bc);
    cc.o = sigma_g(p.Wo * cc.u + p.Uo * s.xi + p.bo);
    cc.x_out = cc.f.cwiseProduct(s.x) + cc.i.cwiseProduct(cc.c);
    cc.tanh_x_out = sigma_c(cc.x_out);
    s.x = cc.x_out;
    s.xi = cc.o.cwiseProduct(cc.tanh_x_out);
    if (!s.x.allFinite() || !s.xi.allFinite()) return false;
    if (t >= washout) {
      cc.err = (p.C * s.xi + p.by) - data.y.row(t).transpose();
      acc += cc.err.squaredNorm();
    }
  }
  loss = acc / count;
  return true;
}

}  // namespace

double mse_loss(const LstmParams& p, const Dataset& data, int washout) {
  p.validate();
  if (washout < 0 || washout >= data.size())
    throw std::invalid_argument("mse_loss: washout must be < sequence length");
  if (data.u.cols() != p.n_u() || data.y.cols() != p.n_y())
    throw std::invalid_argument("mse_loss: dataset dimensions mismatch");
  std::vector<StepCache> caches;
  double loss = 0.0;
  if (!forward_pass(p, data, washout, caches, loss)) return kDivergedLoss;
  return loss;
}

LstmParams loss_gradient(const LstmParams& p, const Dataset& data,
                         const TrainConfig& cfg, double* loss_out) {
  p.validate();
  cfg.validate(data.size());
  if (data.u.cols() != p.n_u() || data.y.cols() != p.n_y())
    throw std::invalid_argument("loss_gradient: dataset dimensions mismatch");

  const Eigen::Index T = data.size();
  const int nx = p.n_x();
  std::vector<StepCache> caches;
  double loss = 0.0;
  LstmParams g = LstmParams::zeros(nx, p.n_u(), p.n_y());
  if (!forward_pass(p, data, cfg.washout, caches, loss)) {
    if (loss_out) *loss_out = kDivergedLoss;
    return g;  // diverged: zero gradient, sentinel loss
  }
  if (loss_out) *loss_out = loss;

  const double scale = 2.0 / static_cast<double>(T - cfg.washout);
  const Eigen::Index window =
      cfg.truncation > 0 ? static_cast<Eigen::Index>(cfg.truncation) : T;

  // backward per truncation window; state entering a window is constant
  for (Eigen::Index w_end = T; w_end > 0; w_end -= window) {
    const Eigen::Index w_begin = std::max<Eigen::Index>(0, w_end - window);
    VectorXd dx_next = VectorXd::Zero(nx);
    VectorXd dxi_next = VectorXd::Zero(nx);
    for (Eigen::Index t = w_end - 1; t >= w_begin; --t) {
      const StepCache& cc = caches[t];
      if (cc.err.size() > 0) {
        const VectorXd dy = scale * cc.err;
        const VectorXd xi_out = cc.o.cwiseProduct(cc.tanh_x_out);
        g.C.noalias() += dy * xi_out.transpose();
        g.by += dy;
        dxi_next.noalias() += p.C.transpose() * dy;
      }
      // xi_out = o . tanh(x_out)
      const VectorXd d_o = dxi_next.cwiseProduct(cc.tanh_x_out);
      VectorXd dx_out = dx_next + dxi_next.cwiseProduct(cc.o).cwiseProduct(
                                      VectorXd::Ones(nx) -
                                      cc.tanh_x_out.cwiseProduct(cc.tanh_x_out));
      // x_out = f . x_in + i . c
      const VectorXd d_f = dx_out.cwiseProduct(cc.x_in);
      const VectorXd d_i = dx_out.cwiseProduct(cc.c);
      const VectorXd d_c = dx_out.cwiseProduct(cc.i);
      const VectorXd dx_in = dx_out.cwiseProduct(cc.f);
      // gate pre-activations
      const VectorXd dzf =
          d_f.cwiseProduct(cc.f).cwiseProduct(VectorXd::Ones(nx) - cc.f);
      const VectorXd dzi =
          d_i.cwiseProduct(cc.i).cwiseProduct(VectorXd::Ones(nx) - cc.i);
      const VectorXd dzc =
          d_c.cwiseProduct(VectorXd::Ones(nx) - cc.c.cwiseProduct(cc.c));
      const VectorXd dzo =
          d_o.cwiseProduct(cc.o).cwiseProduct(VectorXd::Ones(nx) - cc.o);

      g.Wf.noalias() += dzf * cc.u.transpose();
      g.Uf.noalias() += dzf * cc.xi_in.transpose();
      g.bf += dzf;
      g.Wi.noalias() += dzi * cc.u.transpose();
      g.Ui.noalias() += dzi * cc.xi_in.transpose();
      g.bi += dzi;
      g.Wc.noalias() += dzc * cc.u.transpose();
      g.Uc.noalias() += dzc * cc.xi_in.transpose();
      g.bc += dzc;
      g.Wo.noalias() += dzo * cc.u.transpose();
      g.Uo.noalias() += dzo * cc.xi_in.transpose();
      g.bo += dzo;

      VectorXd dxi_in = p.Uf.transpose() * dzf + p.Ui.transpose() * dzi +
                        p.Uc.transpose() * dzc + p.Uo.transpose() * dzo;
      dx_next = dx_in;
      dxi_next = std::move(dxi_in);
    }
  }
  return g;
}

namespace {

// Subgradient of |[W U b]|_inf w.r.t. (W, U, b): sign pattern of the
// active row, lowest index on ties.
void inf_norm_subgrad(const MatrixXd& W, const MatrixXd& U, const VectorXd& b,
                      double weight, MatrixXd& gW, MatrixXd& gU, VectorXd& gb) {
  Eigen::Index best = 0;
  double best_sum = -1.0;
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    const double sum =
        W.row(r).cwiseAbs().sum() + U.row(r).cwiseAbs().sum() + std::abs(b(r));
    if (sum > best_sum) {
      best_sum = sum;
      best = r;
    }
  }
  auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    gW(best, j) += weight * sgn(W(best, j));
  for (Eigen::Index j = 0; j < U.cols(); ++j)
    gU(best, j) += weight * sgn(U(best, j));
  gb(best) += weight * sgn(b(best));
}

double gate_inf_norm(const MatrixXd& W, const MatrixXd& U, const VectorXd& b) {
  MatrixXd cat(W.rows(), W.cols() + U.cols() + 1);
  cat << W, U, b;
  return norm_inf_induced(cat);
}

double sigma_g_prime(double t) {
  const double s = sigma_g(t);
  return s * (1.0 - s);
}

}  // namespace

ConstraintEval constraint_values(const LstmParams& p) {
  p.validate();
  ConstraintEval ev;
  ev.grad1 = LstmParams::zeros(p.n_x(), p.n_u(), p.n_y());
  ev.grad2 = LstmParams::zeros(p.n_x(), p.n_u(), p.n_y());

  const double no = gate_inf_norm(p.Wo, p.Uo, p.bo);
  const double nf = gate_inf_norm(p.Wf, p.Uf, p.bf);
  const double ni = gate_inf_norm(p.Wi, p.Ui, p.bi);
  const double so = sigma_g(no), sf = sigma_g(nf), si = sigma_g(ni);
  const double n1c = norm_1_induced(p.Uc);

  ev.lhs1 = (1.0 + so) * sf;
  ev.lhs2 = (1.0 + so) * si * n1c;

  // lhs1 = (1 + sg(no)) sg(nf)
  inf_norm_subgrad(p.Wo, p.Uo, p.bo, sigma_g_prime(no) * sf, ev.grad1.Wo,
                   ev.grad1.Uo, ev.grad1.bo);
  inf_norm_subgrad(p.Wf, p.Uf, p.bf, (1.0 + so) * sigma_g_prime(nf),
                   ev.grad1.Wf, ev.grad1.Uf, ev.grad1.bf);

  // lhs2 = (1 + sg(no)) sg(ni) |Uc|_1
  inf_norm_subgrad(p.Wo, p.Uo, p.bo, sigma_g_prime(no) * si * n1c, ev.grad2.Wo,
                   ev.grad2.Uo, ev.grad2.bo);
  inf_norm_subgrad(p.Wi, p.Ui, p.bi, (1.0 + so) * sigma_g_prime(ni) * n1c,
                   ev.grad2.Wi, ev.grad2.Ui, ev.grad2.bi);
  // active column of |Uc|_1, lowest index on ties
  Eigen::Index best_col = 0;
  double best_sum = -1.0;
  for (Eigen::Index c = 0; c < p.Uc.cols(); ++c) {
    const double sum = p.Uc.col(c).cwiseAbs().sum();
    if (sum > best_sum) {
      best_sum = sum;
      best_col = c;
    }
  }
  auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  for (Eigen::Index r = 0; r < p.Uc.rows(); ++r)
    ev.grad2.Uc(r, best_col) += (1.0 + so) * si * sgn(p.Uc(r, best_col));
  return ev;
}

TrainResult train(const LstmParams& p0, const Dataset& data,
                  const TrainConfig& cfg) {
  p0.validate();
  cfg.validate(data.size());

  LstmParams p = p0;
  const Eigen::Index n = flat_size(p);
  VectorXd theta(n), grad(n), g_loss(n), g_pen(n);
  pack(p, theta);
  VectorXd m = VectorXd::Zero(n), v = VectorXd::Zero(n);
  const double thr = 1.0 - cfg.delta_min;

  TrainResult result;
  double mu = cfg.penalty_mu0;

  auto violation = [&](const ConstraintEval& ev) {
    return std::max(0.0, ev.lhs1 - thr) + std::max(0.0, ev.lhs2 - thr);
  };

  // geometric step schedule: step_size at iter 1 shrinking to
  // step_size * step_decay by the end of the main loop
  auto rate_at = [&](int iter) {
    if (cfg.max_iterations <= 1) return cfg.step_size;
    const double frac = static_cast<double>(iter - 1) /
                        static_cast<double>(cfg.max_iterations - 1);
    return cfg.step_size * std::pow(cfg.step_decay, std::min(frac, 1.0));
  };

  auto adam_step = [&](int t, double rate, const VectorXd& g) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v.array().matrix() +
        (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    const VectorXd mhat = m / bc1;
    const VectorXd vhat = v / bc2;
    theta -= rate * mhat.cwiseQuotient(vhat.cwiseSqrt().array().matrix() +
                                       VectorXd::Constant(n, cfg.adam_eps));
    unpack(theta, p);
  };

  // best feasible iterate seen so far, returned if the final point is
  // worse (the penalty path can wander late in the run)
  VectorXd best_theta = theta;
  double best_loss = std::numeric_limits<double>::infinity();
  bool have_best = false;

  auto output_reg = [&]() {
    return 0.5 * cfg.output_l2 *
           (p.C.squaredNorm() + p.by.squaredNorm());
  };

  int t_adam = 0;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    double loss = 0.0;
    LstmParams gl = loss_gradient(p, data, cfg, &loss);
    if (cfg.output_l2 > 0.0) {
      gl.C += cfg.output_l2 * p.C;
      gl.by += cfg.output_l2 * p.by;
    }
    pack(gl, g_loss);
    const ConstraintEval ev = constraint_values(p);
    const double objective = loss + output_reg();
    if (violation(ev) == 0.0 && objective < best_loss) {
      best_loss = objective;
      best_theta = theta;
      have_best = true;
    }
    g_pen.setZero();
    if (ev.lhs1 > thr) {
      VectorXd g1(n);
      pack(ev.grad1, g1);
      g_pen += g1;
    }
    if (ev.lhs2 > thr) {
      VectorXd g2(n);
      pack(ev.grad2, g2);
      g_pen += g2;
    }
    grad = g_loss + mu * g_pen;
    adam_step(++t_adam, rate_at(iter), grad);
    result.history.push_back({iter, loss, ev.lhs1, ev.lhs2, mu});
    if (iter % cfg.penalty_check_every == 0 && violation(ev) > 0.0)
      mu = std::min(mu * cfg.penalty_growth, cfg.penalty_max);
  }

  // feasibility repair: spend the remaining budget purely on the
  // constraints, with the strongest penalty
  ConstraintEval ev = constraint_values(p);
  int repair = 0;
  while (violation(ev) > 0.0 && repair < cfg.repair_iterations) {
    g_pen.setZero();
    if (ev.lhs1 > thr) {
      VectorXd g1(n);
      pack(ev.grad1, g1);
      g_pen += g1;
    }
    if (ev.lhs2 > thr) {
      VectorXd g2(n);
      pack(ev.grad2, g2);
      g_pen += g2;
    }
    adam_step(++t_adam, rate_at(cfg.max_iterations), cfg.penalty_max * g_pen);
    ev = constraint_values(p);
    ++repair;
    result.history.push_back({cfg.max_iterations + repair,
                              result.history.empty()
                                  ? 0.0
                                  : result.history.back().loss,
                              ev.lhs1, ev.lhs2, cfg.penalty_max});
  }
  if (violation(ev) > 0.0)
    throw TrainingError(
        "train: iteration budget exhausted without a certified model (lhs1=" +
        std::to_string(ev.lhs1) + ", lhs2=" + std::to_string(ev.lhs2) + ")");

  if (have_best && mse_loss(p, data, cfg.washout) + output_reg() > best_loss) {
    unpack(best_theta, p);
  }
  result.params = std::move(p);
  return result;
}

LstmParams init_params(int n_x, int n_u, int n_y, double delta_min,
                       std::uint64_t seed) {
  if (!(delta_min > 0.0 && delta_min <= 0.25))
    throw std::domain_error("init_params: delta_min must lie in (0, 0.25]");
  auto rng = make_engine(seed, 0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double r = 0.5;
  LstmParams p = LstmParams::zeros(n_x, n_u, n_y);
  auto fill = [&](MatrixXd& mref) {
    for (Eigen::Index i = 0; i < mref.rows(); ++i)
      for (Eigen::Index j = 0; j < mref.cols(); ++j) mref(i, j) = r * unif(rng);
  };
  auto fill_v = [&](VectorXd& vref) {
    for (Eigen::Index i = 0; i < vref.size(); ++i) vref(i) = r * unif(rng);
  };
  fill(p.Wf); fill(p.Wi); fill(p.Wc); fill(p.Wo);
  fill(p.Uf); fill(p.Ui); fill(p.Uc); fill(p.Uo);
  fill_v(p.bf); fill_v(p.bi); fill_v(p.bc); fill_v(p.bo);
  fill(p.C); fill_v(p.by);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const IssCertificate cert = iss_check(p);
    if (cert.delta >= delta_min) return p;
    // shrinking the gate weights drives lhs1 toward 0.75 and lhs2 toward 0
    for (MatrixXd* mp : {&p.Wf, &p.Wi, &p.Wc, &p.Wo, &p.Uf, &p.Ui, &p.Uc, &p.Uo})
      *mp *= 0.5;
    for (VectorXd* vp : {&p.bf, &p.bi, &p.bc, &p.bo}) *vp *= 0.5;
  }
  throw TrainingError("init_params: could not reach the requested margin");
}

double fit_index(const MatrixXd& y_ref, const MatrixXd& y_model) {
  if (y_ref.rows() != y_model.rows() || y_ref.cols() != y_model.cols())
    throw std::invalid_argument("fit_index: sequence shapes differ");
  const double ref_norm = y_ref.norm();
  if (ref_norm == 0.0)
    throw std::domain_error("fit_index: reference sequence has zero norm");
  return 100.0 * (1.0 - (y_ref - y_model).norm() / ref_norm);
}

}  // namespace isslstm
