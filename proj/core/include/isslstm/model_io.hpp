#pragma once

#include <string>

#include "isslstm/lstm.hpp"
#include "isslstm/plant.hpp"
#include "isslstm/signals.hpp"

namespace isslstm {

class FileFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trained model: the LSTM stack (the last layer owns the output map)
// plus the normalization it was trained under.
struct LstmModel {
  LstmStack stack;
  NormalizationSpec u_norm;
  NormalizationSpec y_norm;

  const LstmParams& single() const { return stack.layers.front(); }
};

// JSON model document:
//   {n_x, n_u, n_y,
//    layers: [{W_f,U_f,b_f, W_i,U_i,b_i, W_c,U_c,b_c, W_o,U_o,b_o}],
//    C, b_y,
//    norm: {u_mean, u_scale, y_mean, y_scale}}
// Matrices are row-major nested arrays.
LstmModel load_model(const std::string& path);
void save_model(const std::string& path, const LstmModel& model);

PhPlantConfig load_plant_config(const std::string& path);
void save_plant_config(const std::string& path, const PhPlantConfig& cfg);

// Dataset CSV: header "k,u1..u_nu,y1..y_ny", one row per step. Channel
// counts are inferred from the header; the loaded normalization is the
// identity unless attached separately.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const std::string& path, const Dataset& data);

// Sidecar normalization document:
//   {u_mean: [], u_scale: [], y_mean: [], y_scale: []}
void save_norm(const std::string& path, const NormalizationSpec& u_norm,
               const NormalizationSpec& y_norm);
std::pair<NormalizationSpec, NormalizationSpec> load_norm(
    const std::string& path);

// Bare trajectory CSV (no y columns): header "k,u1..u_nu".
std::vector<VectorXd> load_input_csv(const std::string& path);
void save_input_csv(const std::string& path, const std::vector<VectorXd>& u);

}  // namespace isslstm
