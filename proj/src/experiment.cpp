#include "wienerid/experiment.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace wienerid {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config error at '" + path + "': " + what);
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      config_error(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
  }
}

template <typename T>
void read_scalar(const json& obj, const std::string& key, T& out, const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(path + "." + key, e.what());
  }
}

VectorXd read_vector(const json& arr, const std::string& path) {
  if (!arr.is_array()) config_error(path, "expected an array of numbers");
  VectorXd out(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) config_error(path + "[" + std::to_string(i) + "]", "expected a number");
    out(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return out;
}

MatrixXd read_matrix(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty()) config_error(path, "expected an array of rows");
  const size_t cols = arr[0].is_array() ? arr[0].size() : 0;
  MatrixXd out(arr.size(), cols);
  for (size_t i = 0; i < arr.size(); ++i) {
    VectorXd row = read_vector(arr[i], path + "[" + std::to_string(i) + "]");
    if (static_cast<size_t>(row.size()) != cols) {
      config_error(path + "[" + std::to_string(i) + "]", "ragged matrix rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

json vector_json(const VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_json(const MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) arr.push_back(vector_json(m.row(i).transpose()));
  return arr;
}

void parse_model(const json& obj, ModelConfig& model) {
  reject_unknown_keys(obj,
                      {"state_dim", "input_dim", "horizon", "dt", "A", "B", "mu_x0", "sigma_w_sq",
                       "sigma_v_sq", "sigma_x0_sq"},
                      "model");
  read_scalar(obj, "state_dim", model.state_dim, "model");
  read_scalar(obj, "input_dim", model.input_dim, "model");
  read_scalar(obj, "horizon", model.horizon, "model");
  read_scalar(obj, "dt", model.dt, "model");
  read_scalar(obj, "sigma_w_sq", model.sigma_w_sq, "model");
  read_scalar(obj, "sigma_v_sq", model.sigma_v_sq, "model");
  if (obj.contains("A") && !obj.at("A").is_null()) model.A = read_matrix(obj.at("A"), "model.A");
  if (obj.contains("B") && !obj.at("B").is_null()) model.B = read_matrix(obj.at("B"), "model.B");
  if (obj.contains("mu_x0")) model.mu_x0 = read_vector(obj.at("mu_x0"), "model.mu_x0");
  if (obj.contains("sigma_x0_sq") && !obj.at("sigma_x0_sq").is_null()) {
    double v = 0.0;
    read_scalar(obj, "sigma_x0_sq", v, "model");
    model.sigma_x0_sq = v;
  }
}

void parse_basis(const json& obj, BasisConfig& basis) {
  reject_unknown_keys(obj, {"frequencies"}, "basis");
  if (obj.contains("frequencies")) {
    const json& arr = obj.at("frequencies");
    if (!arr.is_array()) config_error("basis.frequencies", "expected an array of vectors");
    basis.frequencies.clear();
    for (size_t i = 0; i < arr.size(); ++i) {
      basis.frequencies.push_back(
          read_vector(arr[i], "basis.frequencies[" + std::to_string(i) + "]"));
    }
  }
}

void parse_prior(const json& obj, PriorConfig& prior) {
  reject_unknown_keys(obj, {"type", "low", "high", "mean", "cov"}, "prior");
  if (obj.contains("type")) {
    std::string type = obj.at("type").get<std::string>();
    if (type == "uniform") {
      prior.kind = PriorConfig::Kind::Uniform;
    } else if (type == "gaussian") {
      prior.kind = PriorConfig::Kind::Gaussian;
    } else {
      config_error("prior.type", "expected 'uniform' or 'gaussian', got '" + type + "'");
    }
  }
  read_scalar(obj, "low", prior.low, "prior");
  read_scalar(obj, "high", prior.high, "prior");
  if (obj.contains("mean")) prior.mean = read_vector(obj.at("mean"), "prior.mean");
  if (obj.contains("cov")) prior.cov = read_matrix(obj.at("cov"), "prior.cov");
}

void parse_input(const json& obj, InputConfig& input) {
  reject_unknown_keys(
      obj, {"type", "amplitude", "rates", "lower", "upper", "optimize_initial_state", "values"},
      "input");
  if (obj.contains("type")) {
    std::string type = obj.at("type").get<std::string>();
    if (type == "sinusoid") {
      input.kind = InputConfig::Kind::Sinusoid;
    } else if (type == "explicit") {
      input.kind = InputConfig::Kind::Explicit;
    } else {
      config_error("input.type", "expected 'sinusoid' or 'explicit', got '" + type + "'");
    }
  }
  read_scalar(obj, "amplitude", input.amplitude, "input");
  read_scalar(obj, "lower", input.lower, "input");
  read_scalar(obj, "upper", input.upper, "input");
  read_scalar(obj, "optimize_initial_state", input.optimize_initial_state, "input");
  if (obj.contains("rates")) {
    input.rates = obj.at("rates").get<std::vector<double>>();
  }
  if (obj.contains("values")) {
    input.values = obj.at("values").get<std::vector<double>>();
  }
}

void parse_run(const json& obj, RunConfig& run) {
  reject_unknown_keys(obj,
                      {"benchmark", "n_reps", "seed", "lambda_min", "lambda_max", "lambda_count",
                       "horizons", "tau_list", "sigma_w_list", "tuning_reps", "design_iters",
                       "out", "format", "threads", "crossed", "crossed_theta_count"},
                      "run");
  read_scalar(obj, "benchmark", run.benchmark, "run");
  read_scalar(obj, "n_reps", run.n_reps, "run");
  read_scalar(obj, "seed", run.seed, "run");
  read_scalar(obj, "lambda_min", run.lambda_min, "run");
  read_scalar(obj, "lambda_max", run.lambda_max, "run");
  read_scalar(obj, "lambda_count", run.lambda_count, "run");
  read_scalar(obj, "tuning_reps", run.tuning_reps, "run");
  read_scalar(obj, "design_iters", run.design_iters, "run");
  read_scalar(obj, "out", run.out, "run");
  read_scalar(obj, "threads", run.threads, "run");
  read_scalar(obj, "crossed", run.crossed, "run");
  read_scalar(obj, "crossed_theta_count", run.crossed_theta_count, "run");
  if (obj.contains("horizons")) run.horizons = obj.at("horizons").get<std::vector<int>>();
  if (obj.contains("tau_list")) run.tau_list = obj.at("tau_list").get<std::vector<int>>();
  if (obj.contains("sigma_w_list")) {
    run.sigma_w_list = obj.at("sigma_w_list").get<std::vector<double>>();
  }
  if (obj.contains("format")) {
    std::string fmt = obj.at("format").get<std::string>();
    if (fmt == "csv") {
      run.format = OutputFormat::Csv;
    } else if (fmt == "json") {
      run.format = OutputFormat::Json;
    } else if (fmt == "both") {
      run.format = OutputFormat::Both;
    } else {
      config_error("run.format", "expected 'csv', 'json', or 'both', got '" + fmt + "'");
    }
  }
}

void validate(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  if (m.state_dim <= 0 || m.input_dim <= 0) config_error("model", "dimensions must be positive");
  if (m.horizon < 0) config_error("model.horizon", "must be nonnegative");
  if (m.mu_x0.size() != m.state_dim) {
    config_error("model.mu_x0", "expected " + std::to_string(m.state_dim) + " entries, got " +
                                    std::to_string(m.mu_x0.size()));
  }
  if (m.A && (m.A->rows() != m.state_dim || m.A->cols() != m.state_dim)) {
    config_error("model.A", "must be state_dim x state_dim");
  }
  if (m.B && (m.B->rows() != m.state_dim || m.B->cols() != m.input_dim)) {
    config_error("model.B", "must be state_dim x input_dim");
  }
  if (!m.A && !m.B && m.input_dim != m.state_dim) {
    config_error("model.input_dim", "defaulted B = dt I needs input_dim == state_dim");
  }
  if (m.sigma_w_sq < 0.0 || (m.sigma_x0_sq && *m.sigma_x0_sq < 0.0)) {
    config_error("model.sigma_w_sq", "variances must be nonnegative");
  }
  if (!(m.sigma_v_sq > 0.0)) config_error("model.sigma_v_sq", "must be positive");

  const auto& freqs = cfg.basis.frequencies;
  if (freqs.empty()) config_error("basis.frequencies", "needs at least the constant feature");
  if (freqs.front().cwiseAbs().maxCoeff() != 0.0) {
    config_error("basis.frequencies[0]", "the first frequency vector must be exactly zero");
  }
  for (size_t i = 0; i < freqs.size(); ++i) {
    if (freqs[i].size() != m.state_dim) {
      config_error("basis.frequencies[" + std::to_string(i) + "]",
                   "expected dimension " + std::to_string(m.state_dim));
    }
  }

  if (cfg.prior.kind == PriorConfig::Kind::Uniform) {
    if (!(cfg.prior.low < cfg.prior.high)) config_error("prior", "needs low < high");
  } else {
    if (cfg.prior.mean.size() != static_cast<Eigen::Index>(freqs.size())) {
      config_error("prior.mean", "expected " + std::to_string(freqs.size()) + " entries");
    }
    if (cfg.prior.cov.rows() != cfg.prior.mean.size() ||
        cfg.prior.cov.cols() != cfg.prior.mean.size()) {
      config_error("prior.cov", "must be square and match the mean length");
    }
  }

  if (cfg.input.kind == InputConfig::Kind::Explicit &&
      static_cast<int>(cfg.input.values.size()) != m.state_dim + m.horizon * m.input_dim) {
    config_error("input.values", "expected " +
                                     std::to_string(m.state_dim + m.horizon * m.input_dim) +
                                     " entries for the configured horizon");
  }
  if (!(cfg.input.lower < cfg.input.upper)) config_error("input", "needs lower < upper");

  const auto& r = cfg.run;
  if (r.benchmark < 1 || r.benchmark > 4) config_error("run.benchmark", "must be 1..4");
  if (r.n_reps <= 0 || r.tuning_reps <= 0) config_error("run.n_reps", "must be positive");
  if (r.lambda_count < 2 || !(r.lambda_min > 0.0) || !(r.lambda_max > r.lambda_min)) {
    config_error("run.lambda_min", "grid needs 0 < min < max and at least two points");
  }
  if (r.horizons.empty()) config_error("run.horizons", "must not be empty");
  for (int t : r.horizons) {
    if (t < 0) config_error("run.horizons", "entries must be nonnegative");
  }
  for (int tau : r.tau_list) {
    if (tau < 1) config_error("run.tau_list", "entries must be positive");
  }
  for (double s : r.sigma_w_list) {
    if (s < 0.0) config_error("run.sigma_w_list", "entries must be nonnegative");
  }
  if (r.threads < 1) config_error("run.threads", "must be at least 1");
  if (r.crossed && r.crossed_theta_count < 1) {
    config_error("run.crossed_theta_count", "must be positive");
  }
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.model.mu_x0 = VectorXd(2);
  cfg.model.mu_x0 << 3.2, 2.8;
  const double pi = 3.14159265358979323846;
  VectorXd f(2);
  f << 0, 0;
  cfg.basis.frequencies.push_back(f);
  for (int n = 1; n <= 3; ++n) {
    f << n * 2 * pi / 10, 0;
    cfg.basis.frequencies.push_back(f);
  }
  for (int n = 4; n <= 10; ++n) {
    f << (n - 7) * 2 * pi / 10, 2 * pi / 6;
    cfg.basis.frequencies.push_back(f);
  }
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + e.what());
  }
  if (!root.is_object()) {
    throw std::invalid_argument(origin + ": top level must be an object");
  }
  reject_unknown_keys(root, {"schema_version", "model", "basis", "prior", "input", "run"}, "");

  ExperimentConfig cfg = default_config();
  read_scalar(root, "schema_version", cfg.schema_version, "");
  if (cfg.schema_version != 1) {
    config_error("schema_version", "unsupported version " + std::to_string(cfg.schema_version));
  }
  if (root.contains("model")) parse_model(root.at("model"), cfg.model);
  if (root.contains("basis")) parse_basis(root.at("basis"), cfg.basis);
  if (root.contains("prior")) parse_prior(root.at("prior"), cfg.prior);
  if (root.contains("input")) parse_input(root.at("input"), cfg.input);
  if (root.contains("run")) parse_run(root.at("run"), cfg.run);
  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file '" + path + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  json model{{"state_dim", cfg.model.state_dim},
             {"input_dim", cfg.model.input_dim},
             {"horizon", cfg.model.horizon},
             {"dt", cfg.model.dt},
             {"A", cfg.model.A ? matrix_json(*cfg.model.A) : json(nullptr)},
             {"B", cfg.model.B ? matrix_json(*cfg.model.B) : json(nullptr)},
             {"mu_x0", vector_json(cfg.model.mu_x0)},
             {"sigma_w_sq", cfg.model.sigma_w_sq},
             {"sigma_v_sq", cfg.model.sigma_v_sq},
             {"sigma_x0_sq", cfg.model.sigma_x0_sq ? json(*cfg.model.sigma_x0_sq) : json(nullptr)}};
  json freqs = json::array();
  for (const auto& f : cfg.basis.frequencies) freqs.push_back(vector_json(f));
  json prior;
  if (cfg.prior.kind == PriorConfig::Kind::Uniform) {
    prior = json{{"type", "uniform"}, {"low", cfg.prior.low}, {"high", cfg.prior.high}};
  } else {
    prior = json{{"type", "gaussian"},
                 {"mean", vector_json(cfg.prior.mean)},
                 {"cov", matrix_json(cfg.prior.cov)}};
  }
  json input{{"type", cfg.input.kind == InputConfig::Kind::Sinusoid ? "sinusoid" : "explicit"},
             {"amplitude", cfg.input.amplitude},
             {"rates", cfg.input.rates},
             {"lower", cfg.input.lower},
             {"upper", cfg.input.upper},
             {"optimize_initial_state", cfg.input.optimize_initial_state}};
  if (cfg.input.kind == InputConfig::Kind::Explicit) input["values"] = cfg.input.values;
  const char* fmt = cfg.run.format == OutputFormat::Csv
                        ? "csv"
                        : (cfg.run.format == OutputFormat::Json ? "json" : "both");
  json run{{"benchmark", cfg.run.benchmark},
           {"n_reps", cfg.run.n_reps},
           {"seed", cfg.run.seed},
           {"lambda_min", cfg.run.lambda_min},
           {"lambda_max", cfg.run.lambda_max},
           {"lambda_count", cfg.run.lambda_count},
           {"horizons", cfg.run.horizons},
           {"tau_list", cfg.run.tau_list},
           {"sigma_w_list", cfg.run.sigma_w_list},
           {"tuning_reps", cfg.run.tuning_reps},
           {"design_iters", cfg.run.design_iters},
           {"out", cfg.run.out},
           {"format", fmt},
           {"threads", cfg.run.threads},
           {"crossed", cfg.run.crossed},
           {"crossed_theta_count", cfg.run.crossed_theta_count}};
  return json{{"schema_version", cfg.schema_version}, {"model", model},    {"basis", {{"frequencies", freqs}}},
              {"prior", prior},                       {"input", input},    {"run", run}};
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Execution details that cannot change the numbers are excluded, so runs
  // that differ only in parallelism or output routing share a hash.
  json echo = config_json(cfg);
  echo["run"].erase("threads");
  echo["run"].erase("out");
  echo["run"].erase("format");
  const std::string dump = echo.dump();
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : dump) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

WienerModel materialize_model(const ExperimentConfig& cfg, int horizon, double sigma_w_sq) {
  const int n_x = cfg.model.state_dim;
  MatrixXd a = cfg.model.A ? *cfg.model.A : MatrixXd::Identity(n_x, n_x);
  MatrixXd b = cfg.model.B ? *cfg.model.B
                           : MatrixXd(cfg.model.dt * MatrixXd::Identity(n_x, cfg.model.input_dim));
  LinearDynamics dyn = LinearDynamics::invariant(horizon, a, b);
  double sx0 = cfg.model.sigma_x0_sq ? *cfg.model.sigma_x0_sq : sigma_w_sq;
  NoiseModel noise = NoiseModel::isotropic(n_x, horizon, sx0, sigma_w_sq, cfg.model.sigma_v_sq);
  FourierBasis basis(cfg.basis.frequencies);
  return WienerModel(dyn, noise, basis, materialize_prior_spec(cfg).implied_prior());
}

InputTrajectory materialize_input(const ExperimentConfig& cfg, int horizon) {
  const int n_x = cfg.model.state_dim;
  const int n_u = cfg.model.input_dim;
  VectorXd stacked(n_x + horizon * n_u);
  if (cfg.input.kind == InputConfig::Kind::Explicit) {
    const int expected = n_x + horizon * n_u;
    if (static_cast<int>(cfg.input.values.size()) < expected) {
      throw std::invalid_argument("explicit input has " + std::to_string(cfg.input.values.size()) +
                                  " entries, need " + std::to_string(expected));
    }
    for (int i = 0; i < expected; ++i) stacked(i) = cfg.input.values[i];
  } else {
    stacked.head(n_x) = cfg.model.mu_x0;
    for (int t = 0; t < horizon; ++t) {
      // Multi-rate sinusoid sampled at physical time t dt; components beyond
      // the first two repeat the pattern.
      double phase = cfg.model.dt * t;
      double cx = 0.0, sx = 0.0;
      for (double r : cfg.input.rates) {
        cx += std::cos(r * phase);
        sx += std::sin(r * phase);
      }
      for (int j = 0; j < n_u; ++j) {
        stacked(n_x + t * n_u + j) = cfg.input.amplitude * (j % 2 == 0 ? cx : sx);
      }
    }
  }
  InputTrajectory u = InputTrajectory::boxed(stacked, cfg.input.lower, cfg.input.upper);
  if (!cfg.input.optimize_initial_state) {
    for (int i = 0; i < n_x; ++i) u.opt_mask(i) = false;
  }
  return u;
}

PriorSpec materialize_prior_spec(const ExperimentConfig& cfg) {
  const int count = static_cast<int>(cfg.basis.frequencies.size());
  if (cfg.prior.kind == PriorConfig::Kind::Uniform) {
    return PriorSpec::uniform(count, cfg.prior.low, cfg.prior.high);
  }
  return PriorSpec::gaussian(cfg.prior.mean, cfg.prior.cov);
}

}  // namespace wienerid
