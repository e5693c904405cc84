#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wienerid/numerics.hpp"
#include "wienerid/tolerances.hpp"

namespace wienerid {

/// Known linear time-varying process model x_{t+1} = A_t x_t + B_t u_t + w_{t+1}
/// over a horizon of T steps (states x_0..x_T).
struct LinearDynamics {
  int state_dim = 0;
  int input_dim = 0;
  int horizon = 0;
  std::vector<MatrixXd> A;  // T matrices, state_dim x state_dim
  std::vector<MatrixXd> B;  // T matrices, state_dim x input_dim
  bool time_invariant = false;

  LinearDynamics(int n_x, int n_u, int T, std::vector<MatrixXd> a, std::vector<MatrixXd> b);

  /// Time-invariant convenience: replicates one (A, B) pair across the horizon.
  static LinearDynamics invariant(int T, const MatrixXd& a, const MatrixXd& b);

  /// Length of the stacked input vector [mu_x0; u_0; ...; u_{T-1}].
  int stacked_input_dim() const { return state_dim + horizon * input_dim; }
};

enum class NoiseKind { Gaussian, GenericCharacteristic };

/// Second-order noise description. The initial-state covariance plays the role
/// of the time-zero process noise, so the stacked covariance is
/// diag(Sigma_x0, Sigma_w[0], ..., Sigma_w[T-1]).
struct NoiseModel {
  MatrixXd Sigma_x0;                  // state_dim x state_dim
  std::vector<MatrixXd> Sigma_w;      // T matrices for w_1..w_T
  std::vector<double> sigma_v_sq;     // T+1 measurement noise variances
  NoiseKind kind = NoiseKind::Gaussian;

  NoiseModel(MatrixXd sigma_x0, std::vector<MatrixXd> sigma_w, std::vector<double> sigma_v,
             NoiseKind k = NoiseKind::Gaussian);

  /// Isotropic convenience: Sigma_x0 = sx0 I, Sigma_w_t = sw I, sigma_v_sq_t = sv.
  static NoiseModel isotropic(int n_x, int T, double sx0_var, double sw_var, double sv_var);

  int horizon() const { return static_cast<int>(Sigma_w.size()); }
  VectorXd sigma_v_vec() const;
};

/// Stacked input [mu_x0; u_0; ...; u_{T-1}] with box bounds and a mask marking
/// which coordinates an optimizer may move.
struct InputTrajectory {
  VectorXd stacked;
  VectorXd lower;
  VectorXd upper;
  Eigen::Array<bool, Eigen::Dynamic, 1> opt_mask;

  InputTrajectory(VectorXd values, VectorXd lo, VectorXd hi,
                  Eigen::Array<bool, Eigen::Dynamic, 1> mask);

  /// Unbounded, fully optimizable trajectory.
  static InputTrajectory free(VectorXd values);
  /// Uniform box bounds; mask defaults to everything optimizable.
  static InputTrajectory boxed(VectorXd values, double lo, double hi);

  int size() const { return static_cast<int>(stacked.size()); }
  VectorXd initial_mean(int n_x) const { return stacked.head(n_x); }
  VectorXd input_at(int n_x, int n_u, int t) const { return stacked.segment(n_x + t * n_u, n_u); }
};

/// Exact first/second-order statistics of the state trajectory: per-time
/// means and covariances plus cross-covariances C(t,t') = Cov(x_t, x_{t'}).
/// Cross blocks are stored once for t <= t'; the transpose pair is derived.
class StateStatistics {
 public:
  StateStatistics(int n_x, int T);

  int horizon() const { return T_; }
  int state_dim() const { return n_x_; }

  const VectorXd& mean(int t) const { return means_.at(t); }
  const MatrixXd& cov(int t) const { return covs_.at(t); }
  /// Cov(x_t, x_{t'}) for any ordering of (t, t').
  MatrixXd cross(int t, int t_prime) const;
  /// Stored upper block, requires t <= t'.
  const MatrixXd& cross_upper(int t, int t_prime) const;

  bool has_sensitivities() const { return !sens_.empty(); }
  /// Derivative of mean_t with respect to stacked-input coordinate `coord`.
  const VectorXd& sensitivity(int coord, int t) const;

  std::vector<VectorXd> means_;
  std::vector<MatrixXd> covs_;
  std::vector<MatrixXd> cross_;                  // upper triangle, row-major by t
  std::vector<std::vector<VectorXd>> sens_;      // [coord][t], optional

  int upper_index(int t, int t_prime) const;

 private:
  int n_x_;
  int T_;
};

/// Explicitly materialized lifted operators: the block lower-triangular state
/// transition aggregate and the block-diagonal input map.
struct LiftedBlocks {
  MatrixXd A;  // (T+1) n_x square
  MatrixXd B;  // (T+1) n_x by n_x + T n_u
};

/// Forward-propagates trajectory statistics by recursion. Never materializes
/// lifted matrices. When `with_sensitivities` is set, also fills the
/// per-coordinate mean sensitivities needed by design gradients.
StateStatistics propagate_state_stats(const LinearDynamics& dyn, const NoiseModel& noise,
                                      const InputTrajectory& u, bool with_sensitivities = false);

/// Explicit lifted operators for cross-checks and small-horizon diagnostics.
/// Refuses when (T+1) n_x exceeds `dim_cap`.
LiftedBlocks build_lifted_blocks(const LinearDynamics& dyn, int dim_cap = tol::kLiftedDimCap);

/// Sensitivity of the mean trajectory to one stacked-input coordinate,
/// computed by injecting a unit at the coordinate's entry time and
/// propagating forward. Returns one vector per t = 0..T.
std::vector<VectorXd> input_sensitivity(const LinearDynamics& dyn, int coord);

}  // namespace wienerid
