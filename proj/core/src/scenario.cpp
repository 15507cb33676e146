#include "isslstm/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "isslstm/rng.hpp"

namespace isslstm {

int required_scenarios(double epsilon, double beta_conf, int d) {
  if (!(epsilon > 0.0))
    throw std::domain_error("required_scenarios: epsilon must be positive");
  if (!(beta_conf > 0.0 && beta_conf < 1.0))
    throw std::domain_error("required_scenarios: beta_conf must lie in (0,1)");
  if (d < 0) throw std::domain_error("required_scenarios: d must be >= 0");
  const double bound = (2.0 / epsilon) * (std::log(1.0 / beta_conf) + d);
  // guard against ceil() promoting an exactly attained bound by rounding
  const auto n = static_cast<long long>(std::ceil(bound - 1e-9));
  return static_cast<int>(std::max(1LL, n));
}

bool ScenarioSpec::certified() const {
  return N >= required_scenarios(epsilon, beta_conf, d);
}

void ScenarioSpec::validate() const {
  if (N < 1) throw std::domain_error("ScenarioSpec: N must be >= 1");
  if (tau < 1) throw std::domain_error("ScenarioSpec: tau must be >= 1");
  if (x0_halfwidth < 0.0)
    throw std::domain_error("ScenarioSpec: negative x0 half-width");
  if (x0_dim < 1) throw std::domain_error("ScenarioSpec: x0_dim must be >= 1");
  required_scenarios(epsilon, beta_conf, d);  // range checks
  MprsClass cls = input_class;
  cls.tau = tau;
  cls.validate();
}

Scenario sample_scenario(const ScenarioSpec& spec, int i) {
  spec.validate();
  if (i < 1 || i > spec.N)
    throw std::out_of_range("sample_scenario: index " + std::to_string(i) +
                            " outside [1," + std::to_string(spec.N) + "]");
  const auto idx = static_cast<std::uint64_t>(i);
  Scenario sc;
  auto rng = make_engine(spec.master_seed, 2 * idx);
  std::uniform_real_distribution<double> box(-spec.x0_halfwidth,
                                             spec.x0_halfwidth);
  sc.x0 = VectorXd::NullaryExpr(spec.x0_dim, [&](Eigen::Index) { return box(rng); });
  MprsClass cls = spec.input_class;
  cls.tau = spec.tau;
  sc.u_seq = gen_mprs(cls, substream_seed(spec.master_seed, 2 * idx + 1));
  return sc;
}

LstmSystem::LstmSystem(LstmStack stack) : stack_(std::move(stack)) {
  stack_.validate();
}

int LstmSystem::state_dim() const {
  int dim = 0;
  for (const auto& l : stack_.layers) dim += 2 * l.n_x();
  return dim;
}

int LstmSystem::input_dim() const { return stack_.n_u(); }

std::vector<VectorXd> LstmSystem::run(const VectorXd& x0,
                                      const std::vector<VectorXd>& u_seq) const {
  if (x0.size() != state_dim())
    throw std::invalid_argument("LstmSystem::run: initial state dimension");
  StackState s;
  Eigen::Index off = 0;
  for (const auto& l : stack_.layers) {
    s.layers.push_back(LstmState::from_chi(x0.segment(off, 2 * l.n_x())));
    off += 2 * l.n_x();
  }
  std::vector<VectorXd> ys;
  ys.reserve(u_seq.size() + 1);
  ys.push_back(output(stack_, s));
  auto sim = simulate(stack_, s, u_seq);
  for (auto& y : sim.outputs) ys.push_back(std::move(y));
  return ys;
}

PlantSystem::PlantSystem(PhPlantConfig cfg, NormalizationSpec y_norm)
    : cfg_(std::move(cfg)), y_norm_(std::move(y_norm)) {
  cfg_.validate();
  op_ = plant_equilibrium(cfg_, 0.0);
}

std::vector<VectorXd> PlantSystem::run(const VectorXd& x0,
                                       const std::vector<VectorXd>& u_seq) const {
  if (x0.size() != 3)
    throw std::invalid_argument("PlantSystem::run: initial state dimension");
  PhPlantState s{op_.Wa + x0(0) * cfg_.x0_scale(0),
                 op_.Wb + x0(1) * cfg_.x0_scale(1),
                 op_.h + x0(2) * cfg_.x0_scale(2)};
  auto norm_y = [&](double pH) {
    VectorXd y(1);
    y << pH;
    return normalize(y, y_norm_);
  };
  std::vector<VectorXd> ys;
  ys.reserve(u_seq.size() + 1);
  ys.push_back(norm_y(ph_output(s.Wa, s.Wb, cfg_.pK1, cfg_.pK2)));
  for (const auto& u : u_seq) {
    auto [next, pH] = plant_step(cfg_, s, u(0));
    ys.push_back(norm_y(pH));
    s = next;
  }
  return ys;
}

ReachResult estimate_rho(const ReachableSystem& system, const ScenarioSpec& spec) {
  spec.validate();
  if (system.state_dim() != spec.x0_dim)
    throw std::invalid_argument("estimate_rho: x0_dim does not match system");
  const int needed = required_scenarios(spec.epsilon, spec.beta_conf, spec.d);
  ReachResult res;
  res.epsilon = spec.epsilon;
  res.beta_conf = spec.beta_conf;
  res.N = spec.N;
  res.certified = spec.N >= needed;
  if (!res.certified) {
    if (!spec.exploratory)
      throw std::invalid_argument(
          "estimate_rho: N=" + std::to_string(spec.N) +
          " below the certified bound " + std::to_string(needed) +
          " (mark the spec exploratory to override)");
    res.warning = "N=" + std::to_string(spec.N) +
                  " below the certified bound " + std::to_string(needed) +
                  "; result carries no (epsilon,beta) guarantee";
  }

  res.per_scenario_max.reserve(spec.N);
  for (int i = 1; i <= spec.N; ++i) {
    Scenario sc = sample_scenario(spec, i);
    double cost = 0.0;
    try {
      const auto ys = system.run(sc.x0, sc.u_seq);
      for (const auto& y : ys) {
        const double n = y.norm();
        if (!std::isfinite(n))
          throw DivergenceError(0, "non-finite output");
        if (n > cost) cost = n;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("estimate_rho: scenario " + std::to_string(i) +
                               " failed: " + e.what());
    }
    res.per_scenario_max.push_back(cost);
    if (cost > res.rho_star) {
      res.rho_star = cost;
      res.argmax_scenario = i;
    }
  }
  return res;
}

std::vector<SweepPoint> sweep_rho(const ReachableSystem& system,
                                  const ScenarioSpec& base_spec,
                                  const std::vector<double>& rho_u_grid) {
  if (rho_u_grid.empty()) throw std::invalid_argument("sweep_rho: empty grid");
  for (double r : rho_u_grid)
    if (!(r > 0.0 && r <= 1.0))
      throw std::domain_error("sweep_rho: grid entries must lie in (0,1]");
  std::vector<SweepPoint> curve;
  curve.reserve(rho_u_grid.size());
  for (std::size_t j = 0; j < rho_u_grid.size(); ++j) {
    ScenarioSpec spec = base_spec;
    spec.input_class.rho_u = rho_u_grid[j];
    spec.master_seed = substream_seed(base_spec.master_seed, j + 1);
    curve.push_back({rho_u_grid[j], estimate_rho(system, spec).rho_star});
  }
  return curve;
}

}  // namespace isslstm
