#include "isslstm/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace isslstm {

namespace {

using nlohmann::json;

json mat_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vec_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

MatrixXd mat_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw FileFormatError("model file: " + name + " must be a nested array");
  const auto rows = j.size();
  const auto cols = j[0].size();
  MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols)
      throw FileFormatError("model file: ragged rows in " + name);
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

VectorXd vec_from_json(const json& j, const std::string& name) {
  if (!j.is_array())
    throw FileFormatError("model file: " + name + " must be an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FileFormatError(path + ": " + e.what());
  }
  return j;
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write " + path);
  out << std::setw(2) << j << "\n";
}

const json& at(const json& j, const std::string& key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end())
    throw FileFormatError(path + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

LstmModel load_model(const std::string& path) {
  const json j = parse_file(path);
  LstmModel model;
  const json& layers = at(j, "layers", path);
  if (!layers.is_array() || layers.empty())
    throw FileFormatError(path + ": 'layers' must be a nonempty array");
  for (const auto& lj : layers) {
    LstmParams p;
    p.Wf = mat_from_json(at(lj, "W_f", path), "W_f");
    p.Uf = mat_from_json(at(lj, "U_f", path), "U_f");
    p.bf = vec_from_json(at(lj, "b_f", path), "b_f");
    p.Wi = mat_from_json(at(lj, "W_i", path), "W_i");
    p.Ui = mat_from_json(at(lj, "U_i", path), "U_i");
    p.bi = vec_from_json(at(lj, "b_i", path), "b_i");
    p.Wc = mat_from_json(at(lj, "W_c", path), "W_c");
    p.Uc = mat_from_json(at(lj, "U_c", path), "U_c");
    p.bc = vec_from_json(at(lj, "b_c", path), "b_c");
    p.Wo = mat_from_json(at(lj, "W_o", path), "W_o");
    p.Uo = mat_from_json(at(lj, "U_o", path), "U_o");
    p.bo = vec_from_json(at(lj, "b_o", path), "b_o");
    // intermediate layers carry a placeholder output map; the stack's
    // real one is installed on the last layer below
    p.C = MatrixXd::Zero(1, p.Uf.rows());
    p.by = VectorXd::Zero(1);
    model.stack.layers.push_back(std::move(p));
  }
  auto& last = model.stack.layers.back();
  last.C = mat_from_json(at(j, "C", path), "C");
  last.by = vec_from_json(at(j, "b_y", path), "b_y");

  const json& norm = at(j, "norm", path);
  model.u_norm.mean = vec_from_json(at(norm, "u_mean", path), "u_mean");
  model.u_norm.max_dev = vec_from_json(at(norm, "u_scale", path), "u_scale");
  model.y_norm.mean = vec_from_json(at(norm, "y_mean", path), "y_mean");
  model.y_norm.max_dev = vec_from_json(at(norm, "y_scale", path), "y_scale");

  try {
    model.stack.validate();
  } catch (const std::invalid_argument& e) {
    throw FileFormatError(path + ": " + e.what());
  }
  return model;
}

void save_model(const std::string& path, const LstmModel& model) {
  model.stack.validate();
  json j;
  const auto& first = model.stack.layers.front();
  const auto& last = model.stack.layers.back();
  j["n_x"] = last.n_x();
  j["n_u"] = first.n_u();
  j["n_y"] = last.n_y();
  json layers = json::array();
  for (const auto& p : model.stack.layers) {
    json lj;
    lj["W_f"] = mat_to_json(p.Wf);
    lj["U_f"] = mat_to_json(p.Uf);
    lj["b_f"] = vec_to_json(p.bf);
    lj["W_i"] = mat_to_json(p.Wi);
    lj["U_i"] = mat_to_json(p.Ui);
    lj["b_i"] = vec_to_json(p.bi);
    lj["W_c"] = mat_to_json(p.Wc);
    lj["U_c"] = mat_to_json(p.Uc);
    lj["b_c"] = vec_to_json(p.bc);
    lj["W_o"] = mat_to_json(p.Wo);
    lj["U_o"] = mat_to_json(p.Uo);
    lj["b_o"] = vec_to_json(p.bo);
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["C"] = mat_to_json(last.C);
  j["b_y"] = vec_to_json(last.by);
  j["norm"] = {{"u_mean", vec_to_json(model.u_norm.mean)},
               {"u_scale", vec_to_json(model.u_norm.max_dev)},
               {"y_mean", vec_to_json(model.y_norm.mean)},
               {"y_scale", vec_to_json(model.y_norm.max_dev)}};
  write_file(path, j);
}

PhPlantConfig load_plant_config(const std::string& path) {
  const json j = parse_file(path);
  PhPlantConfig cfg;
  auto get = [&](const char* key, double& field) {
    if (auto it = j.find(key); it != j.end()) field = it->get<double>();
  };
  get("Wa1", cfg.Wa1); get("Wb1", cfg.Wb1);
  get("Wa2", cfg.Wa2); get("Wb2", cfg.Wb2);
  get("Wa3", cfg.Wa3); get("Wb3", cfg.Wb3);
  get("q1", cfg.q1); get("q2", cfg.q2);
  get("area", cfg.area);
  get("outflow_coeff", cfg.outflow_coeff);
  get("pK1", cfg.pK1); get("pK2", cfg.pK2);
  get("Ts", cfg.Ts);
  if (auto it = j.find("substeps"); it != j.end()) cfg.substeps = it->get<int>();
  get("q3_mid", cfg.q3_mid); get("q3_span", cfg.q3_span);
  if (auto it = j.find("x0_scale"); it != j.end()) {
    const VectorXd v = vec_from_json(*it, "x0_scale");
    if (v.size() != 3)
      throw FileFormatError(path + ": x0_scale must have 3 entries");
    cfg.x0_scale = v;
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FileFormatError(path + ": " + e.what());
  }
  return cfg;
}

void save_plant_config(const std::string& path, const PhPlantConfig& cfg) {
  json j;
  j["Wa1"] = cfg.Wa1; j["Wb1"] = cfg.Wb1;
  j["Wa2"] = cfg.Wa2; j["Wb2"] = cfg.Wb2;
  j["Wa3"] = cfg.Wa3; j["Wb3"] = cfg.Wb3;
  j["q1"] = cfg.q1; j["q2"] = cfg.q2;
  j["area"] = cfg.area;
  j["outflow_coeff"] = cfg.outflow_coeff;
  j["pK1"] = cfg.pK1; j["pK2"] = cfg.pK2;
  j["Ts"] = cfg.Ts;
  j["substeps"] = cfg.substeps;
  j["q3_mid"] = cfg.q3_mid; j["q3_span"] = cfg.q3_span;
  j["x0_scale"] = vec_to_json(cfg.x0_scale);
  write_file(path, j);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FileFormatError(path + ": empty file");
  const auto header = split_csv_line(line);
  int n_u = 0, n_y = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (!header[c].empty() && header[c][0] == 'u')
      ++n_u;
    else if (!header[c].empty() && header[c][0] == 'y')
      ++n_y;
  }
  if (header.empty() || header[0] != "k" || n_u == 0 || n_y == 0)
    throw FileFormatError(path + ":1: expected header k,u1..,y1..");

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw FileFormatError(path + ":" + std::to_string(lineno) +
                            ": wrong column count");
    std::vector<double> row;
    try {
      for (std::size_t c = 1; c < fields.size(); ++c)
        row.push_back(std::stod(fields[c]));
    } catch (const std::exception&) {
      throw FileFormatError(path + ":" + std::to_string(lineno) +
                            ": malformed number");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FileFormatError(path + ": no data rows");

  Dataset data;
  data.u.resize(rows.size(), n_u);
  data.y.resize(rows.size(), n_y);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < n_u; ++c) data.u(r, c) = rows[r][c];
    for (int c = 0; c < n_y; ++c) data.y(r, c) = rows[r][n_u + c];
  }
  data.u_norm = NormalizationSpec::identity(n_u);
  data.y_norm = NormalizationSpec::identity(n_y);
  return data;
}

void save_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write " + path);
  out << "k";
  for (Eigen::Index c = 0; c < data.u.cols(); ++c) out << ",u" << (c + 1);
  for (Eigen::Index c = 0; c < data.y.cols(); ++c) out << ",y" << (c + 1);
  out << "\n" << std::setprecision(17);
  for (Eigen::Index r = 0; r < data.u.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < data.u.cols(); ++c) out << "," << data.u(r, c);
    for (Eigen::Index c = 0; c < data.y.cols(); ++c) out << "," << data.y(r, c);
    out << "\n";
  }
}

void save_norm(const std::string& path, const NormalizationSpec& u_norm,
               const NormalizationSpec& y_norm) {
  json j = {{"u_mean", vec_to_json(u_norm.mean)},
            {"u_scale", vec_to_json(u_norm.max_dev)},
            {"y_mean", vec_to_json(y_norm.mean)},
            {"y_scale", vec_to_json(y_norm.max_dev)}};
  write_file(path, j);
}

std::pair<NormalizationSpec, NormalizationSpec> load_norm(
    const std::string& path) {
  const json j = parse_file(path);
  NormalizationSpec u, y;
  u.mean = vec_from_json(at(j, "u_mean", path), "u_mean");
  u.max_dev = vec_from_json(at(j, "u_scale", path), "u_scale");
  y.mean = vec_from_json(at(j, "y_mean", path), "y_mean");
  y.max_dev = vec_from_json(at(j, "y_scale", path), "y_scale");
  return {u, y};
}

std::vector<VectorXd> load_input_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileFormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw FileFormatError(path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "k")
    throw FileFormatError(path + ":1: expected header k,u1..");
  const int n_u = static_cast<int>(header.size()) - 1;
  std::vector<VectorXd> seq;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw FileFormatError(path + ":" + std::to_string(lineno) +
                            ": wrong column count");
    VectorXd u(n_u);
    try {
      for (int c = 0; c < n_u; ++c) u(c) = std::stod(fields[c + 1]);
    } catch (const std::exception&) {
      throw FileFormatError(path + ":" + std::to_string(lineno) +
                            ": malformed number");
    }
    seq.push_back(std::move(u));
  }
  if (seq.empty()) throw FileFormatError(path + ": no data rows");
  return seq;
}

void save_input_csv(const std::string& path, const std::vector<VectorXd>& u) {
  std::ofstream out(path);
  if (!out) throw FileFormatError("cannot write " + path);
  if (u.empty()) throw std::invalid_argument("save_input_csv: empty sequence");
  out << "k";
  for (Eigen::Index c = 0; c < u.front().size(); ++c) out << ",u" << (c + 1);
  out << "\n" << std::setprecision(17);
  for (std::size_t r = 0; r < u.size(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < u[r].size(); ++c) out << "," << u[r](c);
    out << "\n";
  }
}

}  // namespace isslstm
