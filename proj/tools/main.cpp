// Command-line front end: generate data, train with the stability
// certificate enforced, verify it, and estimate output reachable sets.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "isslstm/model_io.hpp"
#include "isslstm/scenario.hpp"
#include "isslstm/stability.hpp"
#include "isslstm/training.hpp"

namespace {

using nlohmann::json;
using namespace isslstm;

constexpr const char* kVersion = "0.1.0";

std::string default_outdir() {
  const char* env = std::getenv("ISSLSTM_OUTDIR");
  return env ? std::string(env) : std::string(".");
}

class ManifestWriter {
 public:
  explicit ManifestWriter(std::string subcommand)
      : start_(std::chrono::steady_clock::now()) {
    j_["subcommand"] = std::move(subcommand);
    j_["version"] = kVersion;
  }

  json& options() { return j_["options"]; }

  void add_output(const std::string& path) { j_["outputs"].push_back(path); }

  void write(const std::string& path) {
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - start_)
                             .count();
    j_["elapsed_s"] = elapsed;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << std::setw(2) << j_ << "\n";
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

json cert_to_json(const IssCertificate& c) {
  json j = {{"lhs1", c.lhs1},
            {"lhs2", c.lhs2},
            {"delta", c.delta},
            {"is_iss", c.is_iss}};
  if (!c.per_layer.empty()) {
    j["per_layer"] = json::array();
    for (const auto& layer : c.per_layer)
      j["per_layer"].push_back(cert_to_json(layer));
  }
  return j;
}

std::vector<double> parse_grid(const std::string& grid) {
  std::vector<double> out;
  std::stringstream ss(grid);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

int cmd_gen_data(const std::string& plant_config, const std::string& out_prefix,
                 std::uint64_t seed, int train_size, int val_size, double rho_u,
                 double dwell_min, double dwell_max, double ts,
                 double noise_frac) {
  ManifestWriter manifest("gen-data");
  manifest.options() = {{"plant_config", plant_config},
                        {"out_prefix", out_prefix},
                        {"seed", seed},
                        {"train_size", train_size},
                        {"val_size", val_size},
                        {"rho_u", rho_u},
                        {"dwell_min_s", dwell_min},
                        {"dwell_max_s", dwell_max},
                        {"Ts", ts},
                        {"noise_frac", noise_frac}};

  PhPlantConfig cfg =
      plant_config.empty() ? PhPlantConfig{} : load_plant_config(plant_config);
  cfg.Ts = ts;

  MprsClass cls;
  cls.rho_u = rho_u;
  cls.tau = train_size + val_size;
  cls.Ts = ts;
  cls.dwell_min_s = dwell_min;
  cls.dwell_max_s = dwell_max;
  const auto u_seq = gen_mprs(cls, seed);

  NoiseSpec noise;
  noise.input_frac = noise_frac;
  noise.output_frac = noise_frac;
  const DatasetSplit split =
      generate_dataset(cfg, u_seq, noise, seed, train_size, val_size);

  const std::string train_path = out_prefix + "-train.csv";
  const std::string val_path = out_prefix + "-val.csv";
  const std::string norm_path = out_prefix + "-norm.json";
  save_dataset_csv(train_path, split.train);
  save_dataset_csv(val_path, split.val);
  save_norm(norm_path, split.train.u_norm, split.train.y_norm);
  manifest.add_output(train_path);
  manifest.add_output(val_path);
  manifest.add_output(norm_path);
  manifest.write(out_prefix + "-manifest.json");
  std::cout << "wrote " << train_path << " (" << train_size << " rows), "
            << val_path << " (" << val_size << " rows)\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& model_path,
              const std::string& history_path, const std::string& norm_path,
              int n_x, TrainConfig cfg, std::uint64_t seed) {
  ManifestWriter manifest("train");
  manifest.options() = {{"data", data_path},
                        {"out", model_path},
                        {"history", history_path},
                        {"norm", norm_path},
                        {"n_x", n_x},
                        {"iters", cfg.max_iterations},
                        {"step_size", cfg.step_size},
                        {"step_decay", cfg.step_decay},
                        {"output_l2", cfg.output_l2},
                        {"delta_min", cfg.delta_min},
                        {"washout", cfg.washout},
                        {"truncation", cfg.truncation},
                        {"seed", seed}};

  Dataset data = load_dataset_csv(data_path);
  LstmModel model;
  if (!norm_path.empty()) {
    auto [u_norm, y_norm] = load_norm(norm_path);
    model.u_norm = u_norm;
    model.y_norm = y_norm;
  } else {
    model.u_norm = NormalizationSpec::identity(static_cast<int>(data.u.cols()));
    model.y_norm = NormalizationSpec::identity(static_cast<int>(data.y.cols()));
  }

  cfg.seed = seed;
  const LstmParams p0 =
      init_params(n_x, static_cast<int>(data.u.cols()),
                  static_cast<int>(data.y.cols()), cfg.delta_min, seed);
  TrainResult result = train(p0, data, cfg);
  model.stack.layers = {result.params};
  save_model(model_path, model);
  manifest.add_output(model_path);

  if (!history_path.empty()) {
    std::ofstream hist(history_path);
    if (!hist) throw std::runtime_error("cannot write " + history_path);
    hist << "iter,loss,lhs1,lhs2,mu\n" << std::setprecision(12);
    for (const auto& rec : result.history)
      hist << rec.iter << "," << rec.loss << "," << rec.lhs1 << "," << rec.lhs2
           << "," << rec.mu << "\n";
    manifest.add_output(history_path);
  }
  manifest.write(model_path + ".manifest.json");

  const IssCertificate cert = iss_check(result.params);
  const double final_loss =
      result.history.empty() ? 0.0 : result.history.back().loss;
  std::cout << "trained model written to " << model_path
            << " (loss=" << final_loss << ", delta=" << cert.delta << ")\n";
  return 0;
}

int cmd_verify(const std::string& model_path, const std::string& report_path,
               double u_sup) {
  ManifestWriter manifest("verify-iss");
  manifest.options() = {
      {"model", model_path}, {"report", report_path}, {"u_sup", u_sup}};

  const LstmModel model = load_model(model_path);
  const IssCertificate cert = iss_check_stack(model.stack);
  json report = cert_to_json(cert);
  if (cert.is_iss && model.stack.layers.size() == 1) {
    const StateBound bound = analytic_state_bound(model.single(), u_sup);
    report["analytic_bound"] = {{"rate", bound.rate}, {"radius", bound.radius}};
  }
  if (report_path.empty()) {
    std::cout << std::setw(2) << report << "\n";
    manifest.write(model_path + ".verify-manifest.json");
  } else {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot write " + report_path);
    out << std::setw(2) << report << "\n";
    manifest.add_output(report_path);
    manifest.write(report_path + ".manifest.json");
  }
  return cert.is_iss ? 0 : 2;
}

std::unique_ptr<ReachableSystem> make_system(const std::string& model_path,
                                             const std::string& plant_config,
                                             const std::string& norm_path) {
  if (!model_path.empty()) {
    return std::make_unique<LstmSystem>(load_model(model_path).stack);
  }
  PhPlantConfig cfg =
      plant_config.empty() ? PhPlantConfig{} : load_plant_config(plant_config);
  NormalizationSpec y_norm = NormalizationSpec::identity(1);
  if (!norm_path.empty()) y_norm = load_norm(norm_path).second;
  return std::make_unique<PlantSystem>(cfg, y_norm);
}

ScenarioSpec make_spec(const ReachableSystem& system, double epsilon,
                       double beta, int tau, double x0_halfwidth, double rho_u,
                       std::uint64_t seed, int n_override, bool exploratory) {
  ScenarioSpec spec;
  spec.epsilon = epsilon;
  spec.beta_conf = beta;
  spec.tau = tau;
  spec.x0_halfwidth = x0_halfwidth;
  spec.x0_dim = system.state_dim();
  spec.input_class.rho_u = rho_u;
  spec.input_class.n_u = system.input_dim();
  spec.master_seed = seed;
  spec.exploratory = exploratory;
  spec.N = n_override > 0 ? n_override
                          : required_scenarios(epsilon, beta, spec.d);
  return spec;
}

int cmd_reach(const std::string& model_path, const std::string& plant_config,
              const std::string& norm_path, const std::string& out_path,
              double epsilon, double beta, int tau, double x0_halfwidth,
              double rho_u, std::uint64_t seed, int n_override,
              bool exploratory) {
  ManifestWriter manifest("reach");
  auto system = make_system(model_path, plant_config, norm_path);
  const ScenarioSpec spec = make_spec(*system, epsilon, beta, tau, x0_halfwidth,
                                      rho_u, seed, n_override, exploratory);
  manifest.options() = {{"model", model_path},
                        {"plant_config", plant_config},
                        {"norm", norm_path},
                        {"epsilon", epsilon},
                        {"beta", beta},
                        {"tau", tau},
                        {"x0_halfwidth", x0_halfwidth},
                        {"rho_u", rho_u},
                        {"seed", seed},
                        {"N", spec.N},
                        {"exploratory", exploratory}};

  const ReachResult res = estimate_rho(*system, spec);
  json j = {{"rho_star", res.rho_star},
            {"argmax_scenario", res.argmax_scenario},
            {"epsilon", res.epsilon},
            {"beta", res.beta_conf},
            {"N", res.N},
            {"certified", res.certified}};
  if (!res.warning.empty()) j["warning"] = res.warning;
  if (out_path.empty()) {
    std::cout << std::setw(2) << j << "\n";
    manifest.write(default_outdir() + "/reach-manifest.json");
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << std::setw(2) << j << "\n";
    manifest.add_output(out_path);
    manifest.write(out_path + ".manifest.json");
  }
  return 0;
}

int cmd_sweep(const std::string& model_path, const std::string& plant_config,
              const std::string& norm_path, const std::string& out_path,
              double epsilon, double beta, int tau, double x0_halfwidth,
              const std::string& grid_str, std::uint64_t seed, int n_override,
              bool exploratory) {
  ManifestWriter manifest("sweep");
  auto system = make_system(model_path, plant_config, norm_path);
  const auto grid = parse_grid(grid_str);
  const ScenarioSpec base = make_spec(*system, epsilon, beta, tau, x0_halfwidth,
                                      1.0, seed, n_override, exploratory);
  manifest.options() = {{"model", model_path},
                        {"plant_config", plant_config},
                        {"norm", norm_path},
                        {"epsilon", epsilon},
                        {"beta", beta},
                        {"tau", tau},
                        {"x0_halfwidth", x0_halfwidth},
                        {"grid", grid_str},
                        {"seed", seed},
                        {"N", base.N},
                        {"exploratory", exploratory}};

  const auto curve = sweep_rho(*system, base, grid);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << "rho_u,rho_star\n" << std::setprecision(12);
  for (const auto& pt : curve) out << pt.rho_u << "," << pt.rho_star << "\n";
  manifest.add_output(out_path);
  manifest.write(out_path + ".manifest.json");
  std::cout << "wrote " << out_path << " (" << curve.size() << " grid points)\n";
  return 0;
}

int cmd_simulate_plant(const std::string& config_path,
                       const std::string& input_path,
                       const std::string& output_path) {
  ManifestWriter manifest("simulate-plant");
  manifest.options() = {{"config", config_path},
                        {"input", input_path},
                        {"output", output_path}};
  PhPlantConfig cfg =
      config_path.empty() ? PhPlantConfig{} : load_plant_config(config_path);
  const auto u_seq = load_input_csv(input_path);

  Dataset out_data;
  out_data.u.resize(u_seq.size(), 1);
  out_data.y.resize(u_seq.size(), 1);
  out_data.u_norm = NormalizationSpec::identity(1);
  out_data.y_norm = NormalizationSpec::identity(1);
  PhPlantState s = plant_equilibrium(cfg, 0.0);
  for (std::size_t k = 0; k < u_seq.size(); ++k) {
    auto [next, pH] = plant_step(cfg, s, u_seq[k](0));
    out_data.u(k, 0) = u_seq[k](0);
    out_data.y(k, 0) = pH;
    s = next;
  }
  save_dataset_csv(output_path, out_data);
  manifest.add_output(output_path);
  manifest.write(output_path + ".manifest.json");
  std::cout << "wrote " << output_path << "\n";
  return 0;
}

int cmd_fit(const std::string& ref_path, const std::string& model_path) {
  ManifestWriter manifest("fit");
  manifest.options() = {{"reference", ref_path}, {"model", model_path}};
  const Dataset ref = load_dataset_csv(ref_path);
  const Dataset mod = load_dataset_csv(model_path);
  const double fit = fit_index(ref.y, mod.y);
  std::cout << fit << "\n";
  manifest.write(model_path + ".fit-manifest.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM stability certification and scenario-based reachability"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data",
                                 "Generate a normalized plant dataset");
  std::string gen_cfg, gen_prefix = default_outdir() + "/dataset";
  std::uint64_t gen_seed = 0;
  int gen_train = 4400, gen_val = 2250;
  double gen_rho = 1.0, gen_dmin = 300.0, gen_dmax = 2000.0, gen_ts = 10.0,
         gen_noise = 0.01;
  gen->add_option("--plant-config", gen_cfg, "Plant config JSON (default: built-in)");
  gen->add_option("--out-prefix", gen_prefix, "Output path prefix");
  gen->add_option("--seed", gen_seed, "Master seed")->required();
  gen->add_option("--train-size", gen_train, "Training rows");
  gen->add_option("--val-size", gen_val, "Validation rows");
  gen->add_option("--rho-u", gen_rho, "Excitation amplitude");
  gen->add_option("--dwell-min", gen_dmin, "Min dwell, seconds");
  gen->add_option("--dwell-max", gen_dmax, "Max dwell, seconds");
  gen->add_option("--ts", gen_ts, "Sample time, seconds");
  gen->add_option("--noise-frac", gen_noise,
                  "Noise std as fraction of channel max deviation");

  // train
  auto* tr = app.add_subcommand("train", "Train a certified LSTM model");
  std::string tr_data, tr_out, tr_hist, tr_norm;
  int tr_nx = 5;
  TrainConfig tr_cfg;
  std::uint64_t tr_seed = 0;
  tr->add_option("--data", tr_data, "Training dataset CSV")->required();
  tr->add_option("--out", tr_out, "Output model JSON")->required();
  tr->add_option("--history", tr_hist, "Training history CSV");
  tr->add_option("--norm", tr_norm, "Normalization JSON to embed");
  tr->add_option("--nx", tr_nx, "State dimension");
  tr->add_option("--iters", tr_cfg.max_iterations, "Iteration budget");
  tr->add_option("--step-size", tr_cfg.step_size, "Optimizer step size");
  tr->add_option("--step-decay", tr_cfg.step_decay,
                 "Final step-size multiplier (geometric schedule)");
  tr->add_option("--output-l2", tr_cfg.output_l2,
                 "L2 shrinkage on the output map");
  tr->add_option("--delta-min", tr_cfg.delta_min, "Required certificate margin");
  tr->add_option("--washout", tr_cfg.washout, "Loss washout, steps");
  tr->add_option("--truncation", tr_cfg.truncation,
                 "BPTT window (0 = full sequence)");
  tr->add_option("--seed", tr_seed, "Master seed")->required();

  // verify-iss
  auto* ver = app.add_subcommand("verify-iss", "Check the ISS certificate");
  std::string ver_model, ver_report;
  double ver_usup = 1.0;
  ver->add_option("--model", ver_model, "Model JSON")->required();
  ver->add_option("--report", ver_report, "Report JSON (default: stdout)");
  ver->add_option("--u-sup", ver_usup, "Input bound for the analytic state bound");

  // reach
  auto* re = app.add_subcommand("reach", "Scenario reachable-set radius");
  std::string re_model, re_cfg, re_norm, re_out;
  double re_eps = 1e-2, re_beta = 1e-6, re_hw = 0.1, re_rho = 1.0;
  int re_tau = 2000, re_n = 0;
  std::uint64_t re_seed = 0;
  bool re_expl = false;
  re->add_option("--model", re_model, "Model JSON");
  re->add_option("--plant-config", re_cfg, "Plant config JSON");
  re->add_option("--norm", re_norm, "Normalization JSON for plant outputs");
  re->add_option("--out", re_out, "Result JSON (default: stdout)");
  re->add_option("--epsilon", re_eps, "Violation probability");
  re->add_option("--beta", re_beta, "Confidence parameter");
  re->add_option("--tau", re_tau, "Horizon, steps");
  re->add_option("--x0-halfwidth", re_hw, "Initial box half-width");
  re->add_option("--rho-u", re_rho, "Input amplitude")->required();
  re->add_option("--seed", re_seed, "Master seed")->required();
  re->add_option("--scenarios", re_n, "Override N (default: certified bound)");
  re->add_flag("--exploratory", re_expl, "Allow N below the certified bound");

  // sweep
  auto* sw = app.add_subcommand("sweep", "Reachability sweep over rho_u grid");
  std::string sw_model, sw_cfg, sw_norm, sw_out = default_outdir() + "/sweep.csv";
  std::string sw_grid = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
  double sw_eps = 1e-2, sw_beta = 1e-6, sw_hw = 0.1;
  int sw_tau = 2000, sw_n = 0;
  std::uint64_t sw_seed = 0;
  bool sw_expl = false;
  sw->add_option("--model", sw_model, "Model JSON");
  sw->add_option("--plant-config", sw_cfg, "Plant config JSON");
  sw->add_option("--norm", sw_norm, "Normalization JSON for plant outputs");
  sw->add_option("--out", sw_out, "Output CSV (rho_u, rho_star)");
  sw->add_option("--grid", sw_grid, "Comma-separated rho_u grid");
  sw->add_option("--epsilon", sw_eps, "Violation probability");
  sw->add_option("--beta", sw_beta, "Confidence parameter");
  sw->add_option("--tau", sw_tau, "Horizon, steps");
  sw->add_option("--x0-halfwidth", sw_hw, "Initial box half-width");
  sw->add_option("--seed", sw_seed, "Master seed")->required();
  sw->add_option("--scenarios", sw_n, "Override N (default: certified bound)");
  sw->add_flag("--exploratory", sw_expl, "Allow N below the certified bound");

  // simulate-plant
  auto* sim = app.add_subcommand("simulate-plant",
                                 "Run the surrogate plant over an input CSV");
  std::string sim_cfg, sim_in, sim_out;
  sim->add_option("--config", sim_cfg, "Plant config JSON (default: built-in)");
  sim->add_option("--input", sim_in, "Input CSV (k,u1)")->required();
  sim->add_option("--output", sim_out, "Output CSV (k,u1,y1)")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "FIT index between two dataset CSVs");
  std::string fit_ref, fit_model;
  fit->add_option("reference", fit_ref, "Reference CSV")->required();
  fit->add_option("model", fit_model, "Model output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_data(gen_cfg, gen_prefix, gen_seed, gen_train, gen_val,
                          gen_rho, gen_dmin, gen_dmax, gen_ts, gen_noise);
    if (tr->parsed())
      return cmd_train(tr_data, tr_out, tr_hist, tr_norm, tr_nx, tr_cfg,
                       tr_seed);
    if (ver->parsed()) return cmd_verify(ver_model, ver_report, ver_usup);
    if (re->parsed()) {
      if (re_model.empty() == re_cfg.empty())
        throw std::invalid_argument(
            "reach: exactly one of --model / --plant-config is required");
      return cmd_reach(re_model, re_cfg, re_norm, re_out, re_eps, re_beta,
                       re_tau, re_hw, re_rho, re_seed, re_n, re_expl);
    }
    if (sw->parsed()) {
      if (sw_model.empty() == sw_cfg.empty())
        throw std::invalid_argument(
            "sweep: exactly one of --model / --plant-config is required");
      return cmd_sweep(sw_model, sw_cfg, sw_norm, sw_out, sw_eps, sw_beta,
                       sw_tau, sw_hw, sw_grid, sw_seed, sw_n, sw_expl);
    }
    if (sim->parsed()) return cmd_simulate_plant(sim_cfg, sim_in, sim_out);
    if (fit->parsed()) return cmd_fit(fit_ref, fit_model);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
