#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "isslstm/lstm.hpp"
#include "isslstm/plant.hpp"
#include "isslstm/signals.hpp"

namespace isslstm {

// Smallest integer N with N >= (2/epsilon)(ln(1/beta_conf) + d).
int required_scenarios(double epsilon, double beta_conf, int d);

struct ScenarioSpec {
  double epsilon = 1e-2;
  double beta_conf = 1e-6;
  int d = 1;  // optimization variables in the scenario program
  int N = 0;
  int tau = 2000;             // horizon, steps
  double x0_halfwidth = 0.1;  // symmetric initial box, per component
  int x0_dim = 0;             // dimension of the sampled initial condition
  MprsClass input_class;
  std::uint64_t master_seed = 0;
  bool exploratory = false;  // allow N below the certified bound

  bool certified() const;
  void validate() const;
};

struct Scenario {
  VectorXd x0;
  std::vector<VectorXd> u_seq;
};

// Scenario i (1-based) is a pure function of (master_seed, i).
Scenario sample_scenario(const ScenarioSpec& spec, int i);

// Anything the reachability engine can drive: outputs y(0..tau), where
// y(0) comes from the initial condition alone.
class ReachableSystem {
 public:
  virtual ~ReachableSystem() = default;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual std::vector<VectorXd> run(const VectorXd& x0,
                                    const std::vector<VectorXd>& u_seq) const = 0;
};

// LSTM driven from chi0 sampled on the initial box; outputs are the
// model's (normalized) outputs.
class LstmSystem : public ReachableSystem {
 public:
  explicit LstmSystem(LstmStack stack);
  int state_dim() const override;
  int input_dim() const override;
  std::vector<VectorXd> run(const VectorXd& x0,
                            const std::vector<VectorXd>& u_seq) const override;

 private:
  LstmStack stack_;
};

// Surrogate plant started at its operating point perturbed by
// x0 (componentwise scaled by cfg.x0_scale); the pH output is reported
// in the supplied normalized units so it is comparable with the model.
class PlantSystem : public ReachableSystem {
 public:
  PlantSystem(PhPlantConfig cfg, NormalizationSpec y_norm);
  int state_dim() const override { return 3; }
  int input_dim() const override { return 1; }
  std::vector<VectorXd> run(const VectorXd& x0,
                            const std::vector<VectorXd>& u_seq) const override;

 private:
  PhPlantConfig cfg_;
  NormalizationSpec y_norm_;
  PhPlantState op_;
};

struct ReachResult {
  double rho_star = 0.0;
  std::vector<double> per_scenario_max;
  int argmax_scenario = 0;  // 1-based
  double epsilon = 0.0;
  double beta_conf = 0.0;
  int N = 0;
  bool certified = false;
  std::string warning;  // non-empty when N is below the certified bound
};

// Solves the one-variable scenario program exactly: rho* is the max over
// scenarios of sup_k |y(k)|_2, y(0) included.
ReachResult estimate_rho(const ReachableSystem& system, const ScenarioSpec& spec);

struct SweepPoint {
  double rho_u = 0.0;
  double rho_star = 0.0;
};

// Runs estimate_rho for each amplitude in the grid with a fresh scenario
// substream per grid point.
std::vector<SweepPoint> sweep_rho(const ReachableSystem& system,
                                  const ScenarioSpec& base_spec,
                                  const std::vector<double>& rho_u_grid);

}  // namespace isslstm
