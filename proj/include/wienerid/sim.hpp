#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "wienerid/model.hpp"

namespace wienerid {

enum class Stream : std::uint64_t { Theta = 1, Process = 2, Measurement = 3 };

/// Deterministic substream generator: (master seed, replicate, stream) fully
/// determines the sequence, independent of platform, thread count, or the
/// order replicates are executed in. xoshiro256** state is derived from the
/// triple by splitmix64 mixing; normals come from an explicit Box-Muller so
/// no implementation-defined distribution code is involved.
class Rng {
 public:
  Rng(std::uint64_t master, std::uint64_t replicate, Stream stream);

  std::uint64_t next_u64();
  double uniform01();  // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);
  double normal();
  VectorXd normal_vector(int n);

 private:
  std::array<std::uint64_t, 4> state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Addresses one replicate's random streams: the master seed and replicate
/// index pin every draw, with disjoint streams for the coefficient draw, the
/// process noise, and the measurement noise.
struct SimSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate = 0;

  Rng rng(Stream stream) const { return Rng(master_seed, replicate, stream); }
};

/// Sampling description of the coefficient prior. The estimator itself only
/// consumes the implied mean and covariance.
struct PriorSpec {
  enum class Kind { Uniform, Gaussian };
  Kind kind = Kind::Uniform;
  int count = 0;
  double low = 0.0;
  double high = 0.0;
  VectorXd mean;
  MatrixXd cov;

  static PriorSpec uniform(int count, double low, double high);
  static PriorSpec gaussian(VectorXd mean, MatrixXd cov);

  /// Moments used by the affine estimator: uniform(a, b) per component maps
  /// to mean (a+b)/2 and variance (b-a)^2/12.
  ParameterPrior implied_prior() const;
};

VectorXd sample_prior_theta(const PriorSpec& spec, Rng& rng);

struct SimulatedTrajectory {
  MatrixXd states;  // state_dim x (T+1)
  VectorXd y;       // T+1
};

/// One seeded draw of the model under the given input and coefficients.
SimulatedTrajectory simulate_trajectory(const WienerModel& model, const InputTrajectory& u,
                                        const VectorXd& theta, const SimSeed& seed);

/// Same recursion driven by externally supplied standard-normal draws;
/// column t of z_process scales the process noise entering state t (column 0
/// is the initial-state deviation). This is how common random numbers are
/// shared across estimation methods.
SimulatedTrajectory simulate_with_noise(const WienerModel& model, const InputTrajectory& u,
                                        const VectorXd& theta, const MatrixXd& z_process,
                                        const VectorXd& z_measurement);

struct MethodSpec {
  enum class Kind { DLS, MLS, BMS, BAL };
  Kind kind = Kind::BMS;
  double lambda = 0.0;                   // ridge modes only
  std::optional<InputTrajectory> input;  // designed input for BAL

  std::string label() const;
};

struct MethodResult {
  VectorXd estimate;
  double squared_error = 0.0;
  bool ok = false;
  std::string error;
};

struct ReplicateResult {
  VectorXd theta_true;
  std::vector<MethodResult> methods;

  bool all_ok() const;
};

struct MonteCarloConfig {
  int n_reps = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// When set, replicate r reuses coefficient draw r % crossed_theta_count
  /// against noise block r / crossed_theta_count instead of fully
  /// independent draws per replicate.
  bool crossed = false;
  int crossed_theta_count = 100;
};

/// Runs every configured method on identical noise realizations, one
/// trajectory simulation per method input. Per-replicate method failures are
/// recorded, not fatal. Results are returned in replicate order regardless
/// of scheduling.
std::vector<ReplicateResult> monte_carlo_benchmark(const WienerModel& model,
                                                   const InputTrajectory& u_base,
                                                   const PriorSpec& prior_spec,
                                                   const std::vector<MethodSpec>& methods,
                                                   const MonteCarloConfig& cfg);

/// Nearest-rank percentile, p in (0, 100]; deterministic across platforms.
double percentile_nearest_rank(std::vector<double> values, double p);

}  // namespace wienerid
