#include "isslstm/plant.hpp"

#include <cmath>
#include <string>

#include "isslstm/rng.hpp"

namespace isslstm {

void PhPlantConfig::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  for (double v : {Wa1, Wb1, Wa2, Wb2, Wa3, Wb3, q1, q2, area, outflow_coeff,
                   pK1, pK2, Ts, q3_mid, q3_span})
    if (!finite(v))
      throw std::invalid_argument("PhPlantConfig: non-finite parameter");
  if (area <= 0.0) throw std::invalid_argument("PhPlantConfig: area <= 0");
  if (outflow_coeff < 0.0)
    throw std::invalid_argument("PhPlantConfig: negative outflow coefficient");
  if (Ts <= 0.0) throw std::invalid_argument("PhPlantConfig: Ts <= 0");
  if (substeps < 1) throw std::invalid_argument("PhPlantConfig: substeps < 1");
  if (q1 < 0.0 || q2 < 0.0)
    throw std::invalid_argument("PhPlantConfig: negative disturbance flow");
  if (q3_from_u(-1.0) < 0.0 || q3_from_u(1.0) < 0.0)
    throw std::invalid_argument(
        "PhPlantConfig: q3 map leaves [0,inf) for u in [-1,1]");
}

double ph_residual(double pH, double Wa, double Wb, double pK1, double pK2) {
  const double hplus = std::pow(10.0, -pH);
  const double oh = std::pow(10.0, pH - 14.0);
  const double a = std::pow(10.0, pK1 - pH);
  const double b = std::pow(10.0, pH - pK2);
  return Wa + oh - hplus + Wb * (1.0 + 2.0 * b) / (1.0 + a + b);
}

double ph_output(double Wa, double Wb, double pK1, double pK2) {
  for (double v : {Wa, Wb, pK1, pK2})
    if (!std::isfinite(v))
      throw std::invalid_argument("ph_output: non-finite argument");
  double lo = 0.0, hi = 14.0;
  double flo = ph_residual(lo, Wa, Wb, pK1, pK2);
  double fhi = ph_residual(hi, Wa, Wb, pK1, pK2);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0)
    throw ChemistryError("ph_output: charge balance has no root in [0,14]");
  // the residual is strictly monotone in pH, so bisection converges to
  // the unique root
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double fm = ph_residual(mid, Wa, Wb, pK1, pK2);
    if (std::abs(fm) <= 1e-12) return mid;
    if ((fm > 0.0) == (fhi > 0.0)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
    if (hi - lo <= 1e-15) break;
  }
  return mid;
}

namespace {

struct Deriv {
  double dWa, dWb, dh;
};

Deriv rhs(const PhPlantConfig& c, double Wa, double Wb, double h, double q3) {
  if (h <= 0.0) throw TankEmptyError("plant_step: tank level reached 0");
  const double q4 = c.outflow_coeff * std::sqrt(h);
  const double vol = c.area * h;  // cm^2 * cm = mL
  Deriv d;
  d.dh = (c.q1 + c.q2 + q3 - q4) / c.area;
  d.dWa = (c.q1 * (c.Wa1 - Wa) + c.q2 * (c.Wa2 - Wa) + q3 * (c.Wa3 - Wa)) / vol;
  d.dWb = (c.q1 * (c.Wb1 - Wb) + c.q2 * (c.Wb2 - Wb) + q3 * (c.Wb3 - Wb)) / vol;
  return d;
}

}  // namespace

std::pair<PhPlantState, double> plant_step(const PhPlantConfig& cfg,
                                           const PhPlantState& s, double u) {
  if (!(u >= -1.0 && u <= 1.0))
    throw std::domain_error("plant_step: u outside [-1,1]");
  const double q3 = cfg.q3_from_u(u);
  const double dt = cfg.Ts / cfg.substeps;
  PhPlantState cur = s;
  for (int k = 0; k < cfg.substeps; ++k) {
    const Deriv k1 = rhs(cfg, cur.Wa, cur.Wb, cur.h, q3);
    const Deriv k2 = rhs(cfg, cur.Wa + 0.5 * dt * k1.dWa,
                         cur.Wb + 0.5 * dt * k1.dWb, cur.h + 0.5 * dt * k1.dh, q3);
    const Deriv k3 = rhs(cfg, cur.Wa + 0.5 * dt * k2.dWa,
                         cur.Wb + 0.5 * dt * k2.dWb, cur.h + 0.5 * dt * k2.dh, q3);
    const Deriv k4 =
        rhs(cfg, cur.Wa + dt * k3.dWa, cur.Wb + dt * k3.dWb, cur.h + dt * k3.dh, q3);
    cur.Wa += dt / 6.0 * (k1.dWa + 2.0 * k2.dWa + 2.0 * k3.dWa + k4.dWa);
    cur.Wb += dt / 6.0 * (k1.dWb + 2.0 * k2.dWb + 2.0 * k3.dWb + k4.dWb);
    cur.h += dt / 6.0 * (k1.dh + 2.0 * k2.dh + 2.0 * k3.dh + k4.dh);
    if (cur.h <= 0.0) throw TankEmptyError("plant_step: tank level reached 0");
  }
  return {cur, ph_output(cur.Wa, cur.Wb, cfg.pK1, cfg.pK2)};
}

PhPlantState plant_equilibrium(const PhPlantConfig& cfg, double u, double tol,
                               int max_steps) {
  cfg.validate();
  const double q3 = cfg.q3_from_u(u);
  const double qin = cfg.q1 + cfg.q2 + q3;
  if (qin <= 0.0 || cfg.outflow_coeff <= 0.0)
    throw std::domain_error("plant_equilibrium: no positive-level equilibrium");
  // closed form: inflow/outflow balance fixes h, perfect mixing fixes the
  // invariants at the flow-weighted inlet average
  PhPlantState eq;
  eq.h = (qin / cfg.outflow_coeff) * (qin / cfg.outflow_coeff);
  eq.Wa = (cfg.q1 * cfg.Wa1 + cfg.q2 * cfg.Wa2 + q3 * cfg.Wa3) / qin;
  eq.Wb = (cfg.q1 * cfg.Wb1 + cfg.q2 * cfg.Wb2 + q3 * cfg.Wb3) / qin;
  // polish by time-marching; the balances are mildly nonlinear in h
  PhPlantState cur = eq;
  for (int k = 0; k < max_steps; ++k) {
    PhPlantState next = plant_step(cfg, cur, u).first;
    const double diff = std::abs(next.Wa - cur.Wa) + std::abs(next.Wb - cur.Wb) +
                        std::abs(next.h - cur.h);
    cur = next;
    if (diff < tol) break;
  }
  return cur;
}

DatasetSplit generate_dataset(const PhPlantConfig& cfg,
                              const std::vector<VectorXd>& u_seq,
                              const NoiseSpec& noise, std::uint64_t seed,
                              int train_size, int val_size) {
  cfg.validate();
  const int total = train_size + val_size;
  if (u_seq.empty() || total <= 0)
    throw std::invalid_argument("generate_dataset: empty request");
  if (static_cast<int>(u_seq.size()) < total)
    throw std::invalid_argument(
        "generate_dataset: input sequence shorter than requested split");

  MatrixXd u_raw(total, 1), y_raw(total, 1);
  PhPlantState s = plant_equilibrium(cfg, 0.0);
  for (int k = 0; k < total; ++k) {
    auto [next, pH] = plant_step(cfg, s, u_seq[k](0));
    u_raw(k, 0) = u_seq[k](0);
    y_raw(k, 0) = pH;
    s = next;
  }

  // noise std scales with the clean signal's max deviation
  const NormalizationSpec u_clean = fit_normalization(u_raw);
  const NormalizationSpec y_clean = fit_normalization(y_raw);
  const MatrixXd u_noisy = add_white_noise(
      u_raw, noise.input_frac * u_clean.max_dev(0), substream_seed(seed, 1));
  const MatrixXd y_noisy = add_white_noise(
      y_raw, noise.output_frac * y_clean.max_dev(0), substream_seed(seed, 2));

  // normalization is fit across the entire (noisy) dataset, then shared
  // by both splits
  const NormalizationSpec u_norm = fit_normalization(u_noisy);
  const NormalizationSpec y_norm = fit_normalization(y_noisy);
  const MatrixXd u_n = normalize(u_noisy, u_norm);
  const MatrixXd y_n = normalize(y_noisy, y_norm);

  DatasetSplit split;
  split.train.u = u_n.topRows(train_size);
  split.train.y = y_n.topRows(train_size);
  split.train.u_norm = u_norm;
  split.train.y_norm = y_norm;
  split.val.u = u_n.bottomRows(val_size);
  split.val.y = y_n.bottomRows(val_size);
  split.val.u_norm = u_norm;
  split.val.y_norm = y_norm;
  return split;
}

}  // namespace isslstm
