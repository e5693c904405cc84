#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "wienerid/multi_traj.hpp"
#include "wienerid/sim.hpp"

namespace wienerid {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct ModelConfig {
  int state_dim = 2;
  int input_dim = 2;
  int horizon = 100;
  double dt = 0.1;
  std::optional<MatrixXd> A;          // defaults to identity
  std::optional<MatrixXd> B;          // defaults to dt * identity
  VectorXd mu_x0;                     // defaults to [3.2, 2.8]
  double sigma_w_sq = 0.001;
  double sigma_v_sq = 0.01;
  std::optional<double> sigma_x0_sq;  // defaults to sigma_w_sq
};

struct BasisConfig {
  std::vector<VectorXd> frequencies;  // defaults to the eleven demo frequencies
};

struct PriorConfig {
  enum class Kind { Uniform, Gaussian };
  Kind kind = Kind::Uniform;
  double low = 2.0;
  double high = 8.0;
  VectorXd mean;
  MatrixXd cov;
};

struct InputConfig {
  enum class Kind { Sinusoid, Explicit };
  Kind kind = Kind::Sinusoid;
  double amplitude = 4.5;
  std::vector<double> rates = {3, 5, 10, 20, 100};
  double lower = -200.0;
  double upper = 200.0;
  bool optimize_initial_state = false;
  std::vector<double> values;  // explicit stacked input, bounds still apply
};

enum class OutputFormat { Csv, Json, Both };

struct RunConfig {
  int benchmark = 3;
  int n_reps = 10000;
  std::uint64_t seed = 1;
  double lambda_min = 1e-6;
  double lambda_max = 1e3;
  int lambda_count = 30;
  std::vector<int> horizons = {0, 4, 10, 13, 16, 20, 25, 32, 40, 50, 63, 79, 100};
  std::vector<int> tau_list = {1, 11, 101};
  std::vector<double> sigma_w_list = {0.0, 0.001, 0.01};
  int tuning_reps = 500;
  int design_iters = 300;
  std::string out = "results";
  OutputFormat format = OutputFormat::Both;
  int threads = 1;
  bool crossed = false;
  int crossed_theta_count = 100;
};

struct ExperimentConfig {
  int schema_version = 1;
  ModelConfig model;
  BasisConfig basis;
  PriorConfig prior;
  InputConfig input;
  RunConfig run;
};

/// All defaults: the 2-D constant-velocity kinematic model with sinusoidal
/// inputs, eleven fixed frequencies, and a uniform(2, 8) coefficient prior.
ExperimentConfig default_config();

/// Parses and validates a JSON config file. Unknown keys are rejected with
/// their path; malformed files report the line. Missing keys take defaults.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical JSON echo of a fully resolved config (keys sorted).
nlohmann::json config_json(const ExperimentConfig& cfg);
/// FNV-1a hash of the canonical echo, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

/// Problem instances realized from the config. sigma_w_sq and the horizon
/// vary per benchmark setting, so they are explicit arguments.
WienerModel materialize_model(const ExperimentConfig& cfg, int horizon, double sigma_w_sq);
InputTrajectory materialize_input(const ExperimentConfig& cfg, int horizon);
PriorSpec materialize_prior_spec(const ExperimentConfig& cfg);

// --- result tables ---------------------------------------------------------

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void append(std::vector<Cell> row);
};

/// Stable text form: header row, '\n' endings, floating-point cells printed
/// with 17 significant digits so equal runs produce equal bytes.
std::string to_csv(const Table& table);

struct BenchmarkArtifacts {
  std::string name;  // file stem, e.g. "benchmark1"
  Table table;
  nlohmann::json summary;
  int replicate_failures = 0;
  nlohmann::json failure_manifest;  // populated when replicate_failures > 0
};

/// Writes the table and/or summary per the requested format, embedding the
/// config echo, its hash, and the seed into the summary. Returns the paths
/// written.
std::vector<std::string> emit_results(const BenchmarkArtifacts& artifacts,
                                      const ExperimentConfig& cfg, const std::string& out_dir,
                                      OutputFormat format);

// --- benchmark runners ------------------------------------------------------

/// Dispatches on cfg.run.benchmark (1..4).
BenchmarkArtifacts run_benchmark(const ExperimentConfig& cfg);

BenchmarkArtifacts run_benchmark1(const ExperimentConfig& cfg);  // ridge sweep vs Bayes
BenchmarkArtifacts run_benchmark2(const ExperimentConfig& cfg);  // per-replicate differences
BenchmarkArtifacts run_benchmark3(const ExperimentConfig& cfg);  // horizon sweep
BenchmarkArtifacts run_benchmark4(const ExperimentConfig& cfg);  // independent trajectories

/// One-shot estimation on provided measurements using the configured model.
nlohmann::json run_estimate(const ExperimentConfig& cfg, const VectorXd& y);

/// Input design only: optimized input, error history, and the achieved error.
nlohmann::json run_design(const ExperimentConfig& cfg);

/// Reduced-scale invariant battery; returns pass/fail lines and overall
/// status for the validate command.
struct ValidationReport {
  std::vector<std::pair<std::string, bool>> checks;
  bool all_passed() const;
};
ValidationReport run_validation(std::uint64_t seed);

}  // namespace wienerid
