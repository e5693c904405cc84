#pragma once

#include "wienerid/input_design.hpp"

namespace wienerid {

/// One statistically independent trajectory: its own dynamics, noise, and
/// input; the horizon is the dynamics horizon.
struct TrajectoryBatch {
  LinearDynamics dyn;
  NoiseModel noise;
  InputTrajectory u;
};

struct MultiTrajectoryPlan {
  std::vector<TrajectoryBatch> batches;

  int count() const { return static_cast<int>(batches.size()); }
  /// Total number of measurements, sum of (T_i + 1).
  int total_measurements() const;
};

/// Stacked design over independent batches: feature-mean columns concatenated,
/// M block-diagonal (cross-batch covariance is structurally zero), and the
/// measurement variances concatenated in batch order.
struct MultiDesign {
  DesignStatistics design;
  VectorXd sigma_v_sq;
  std::vector<int> offsets;  // first measurement column of each batch
};

MultiDesign assemble_multi(const MultiTrajectoryPlan& plan, const FourierBasis& basis,
                           const ParameterPrior& prior);

struct InformationMatrix {
  MatrixXd matrix;  // (N+1) x (N+1) sum of initial-time rank-one terms
  double lambda_min = 0.0;
};

/// Sum over batches of mu_phi0 mu_phi0^T / (M_00 + sigma_v0^2) and its
/// smallest eigenvalue; the eigenvalue's growth with the batch count governs
/// whether the estimator converges.
InformationMatrix information_matrix(const MultiTrajectoryPlan& plan, const FourierBasis& basis,
                                     const ParameterPrior& prior);

/// Analytic error on nested prefixes of one trajectory, in the order the
/// horizons are given. For increasing horizons the values are non-increasing;
/// a plateau above zero indicates that longer dependent records stop helping.
std::vector<double> inconsistency_probe(const WienerModel& model, const InputTrajectory& u,
                                        const std::vector<int>& horizons);

/// Stacked analytic error and its gradient with respect to every batch's
/// stacked input (one vector per batch, masked entries zeroed).
std::pair<double, std::vector<VectorXd>> multi_error_value_and_gradient(
    const MultiTrajectoryPlan& plan, const FourierBasis& basis, const ParameterPrior& prior);

struct MultiDescentResult {
  std::vector<VectorXd> u_star;  // per batch
  std::vector<double> J_history;
  int iterations = 0;
  StopReason reason = StopReason::MaxIters;
};

/// Joint projected descent over all batch inputs at once.
MultiDescentResult optimize_inputs_multi(const MultiTrajectoryPlan& plan,
                                         const FourierBasis& basis, const ParameterPrior& prior,
                                         const DescentOptions& opts = {});

}  // namespace wienerid
