#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isslstm/signals.hpp"

namespace isslstm {

class ChemistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TankEmptyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Third-order pH-neutralization surrogate: one stirred tank fed by an
// acid stream q1, a buffer stream q2 and a manipulated alkaline stream
// q3, level-driven outflow, pH measured at the outlet. States are the
// two reaction invariants and the liquid level. Units: mol/L, mL/s, cm.
struct PhPlantConfig {
  // inflow reaction invariants
  double Wa1 = 3.0e-3, Wb1 = 0.0;        // acid
  double Wa2 = -3.0e-2, Wb2 = 3.0e-2;    // buffer
  double Wa3 = -3.05e-3, Wb3 = 5.0e-5;   // base
  // unmanipulated disturbance flows, mL/s
  double q1 = 16.6;
  double q2 = 0.55;
  // tank geometry and outflow q4 = outflow_coeff * sqrt(h)
  double area = 207.0;          // cm^2
  double outflow_coeff = 8.75;  // mL/(s sqrt(cm))
  // carbonate equilibrium constants
  double pK1 = 6.35;
  double pK2 = 10.25;
  // sampling and integration
  double Ts = 10.0;   // s
  int substeps = 10;  // fixed-step RK4 substeps per sample
  // normalized input u in [-1,1] maps affinely to q3 = q3_mid + q3_span*u
  double q3_mid = 15.6;
  double q3_span = 14.0;
  // per-state scale used when sampling initial conditions around the
  // operating point (reachability sweeps)
  Eigen::Vector3d x0_scale{1.0e-4, 1.0e-4, 1.0};

  void validate() const;
  double q3_from_u(double u) const { return q3_mid + q3_span * u; }
};

struct PhPlantState {
  double Wa = 0.0;  // acid reaction invariant, mol/L
  double Wb = 0.0;  // buffer reaction invariant, mol/L
  double h = 1.0;   // level, cm
};

// Root of the charge balance
//   Wa + 10^{pH-14} - 10^{-pH}
//      + Wb (1 + 2*10^{pH-pK2}) / (1 + 10^{pK1-pH} + 10^{pH-pK2}) = 0
// on [0, 14], by bisection to |residual| <= 1e-12.
double ph_output(double Wa, double Wb, double pK1, double pK2);

double ph_residual(double pH, double Wa, double Wb, double pK1, double pK2);

// One Ts-long sample: RK4 integration of the mixing balances, then the
// pH of the updated state.
std::pair<PhPlantState, double> plant_step(const PhPlantConfig& cfg,
                                           const PhPlantState& s, double u);

// Steady state under constant input u, by time-marching until the state
// stops moving (successive-difference norm below tol).
PhPlantState plant_equilibrium(const PhPlantConfig& cfg, double u,
                               double tol = 1e-12, int max_steps = 200000);

struct NoiseSpec {
  // std as a fraction of each channel's max deviation; 0 disables
  double input_frac = 0.01;
  double output_frac = 0.01;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
};

// Simulates the plant from its u=0 equilibrium over the given normalized
// input sequence, adds measurement noise to input and output records,
// fits the normalization across the entire dataset and splits it.
DatasetSplit generate_dataset(const PhPlantConfig& cfg,
                              const std::vector<VectorXd>& u_seq,
                              const NoiseSpec& noise, std::uint64_t seed,
                              int train_size = 4400, int val_size = 2250);

}  // namespace isslstm
