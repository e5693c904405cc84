#pragma once

#include <functional>
#include <limits>

#include "wienerid/model.hpp"

namespace wienerid {

/// Componentwise clamp onto the box [lower, upper].
VectorXd project_box(const VectorXd& v, const VectorXd& lower, const VectorXd& upper);

/// Adaptive stepsize: the minimum of a growth branch sqrt(1 + beta_prev) *
/// alpha_prev and a local-curvature branch |u_now - u_prev| / (2 |g_now -
/// g_prev|). With beta_prev infinite the curvature branch decides; when the
/// gradients coincide the growth branch is used alone. May return infinity in
/// the degenerate first-step case; callers fall back to alpha_prev.
double adaptive_step(double alpha_prev, double beta_prev, const VectorXd& u_now,
                     const VectorXd& u_prev, const VectorXd& grad_now, const VectorXd& grad_prev);

struct DescentOptions {
  int max_iters = tol::kDescentMaxIters;
  double grad_tol = tol::kDescentGradTol;
  double rel_J_tol = tol::kDescentRelJTol;
  int rel_J_window = tol::kDescentRelJWindow;
  double alpha0 = tol::kDescentAlpha0;
  int max_backtracks = tol::kDescentMaxBacktracks;
};

enum class StopReason { GradientTol, RelJTol, MaxIters, NoDescent };

/// Live state of the projected descent: the current iterate, the last
/// accepted stepsize and stepsize ratio, and the iteration counter. The
/// stepsize is positive after the first iteration.
struct OptimizerState {
  VectorXd u_current;
  double alpha = 0.0;
  double beta = std::numeric_limits<double>::infinity();
  int iter = 0;
};

struct DescentResult {
  VectorXd u_star;                // best accepted iterate
  std::vector<double> J_history;  // accepted values, non-increasing
  int iterations = 0;
  StopReason reason = StopReason::MaxIters;
  OptimizerState state;           // where the loop stopped
};

/// Thrown when the objective or gradient stops being finite; carries the
/// iterate and iteration index for diagnosis.
struct DescentDiagnosticsError : NumericalError {
  VectorXd iterate;
  int iteration;
  DescentDiagnosticsError(const std::string& what, VectorXd u, int k)
      : NumericalError(what), iterate(std::move(u)), iteration(k) {}
};

/// Objective interface for the projected descent: a cheap value-only
/// evaluation used while backtracking and a combined value-and-gradient
/// evaluation used at accepted points.
struct Objective {
  std::function<double(const VectorXd&)> value;
  std::function<std::pair<double, VectorXd>(const VectorXd&)> value_and_gradient;
};

/// Projected gradient descent with the adaptive stepsize and monotone
/// acceptance: uphill proposals are halved up to max_backtracks times, so the
/// accepted history never increases and the best iterate is returned.
/// Masked coordinates are never moved and their gradient entries are ignored.
DescentResult minimize_projected(const Objective& objective, const InputTrajectory& u0,
                                 const DescentOptions& opts = {});

/// Analytic gradient of the estimation error with respect to the stacked
/// input, assembled by accumulating the design-statistics gradients against
/// the optimal gain and running one adjoint pass through the dynamics.
/// Entries at masked coordinates are zero.
VectorXd error_gradient(const WienerModel& model, const InputTrajectory& u);

/// Error value and gradient from one shared design evaluation.
std::pair<double, VectorXd> error_value_and_gradient(const WienerModel& model,
                                                     const InputTrajectory& u);

/// Minimizes the analytic estimation error over the input box. Returns the
/// best-so-far iterate; J(u_star) <= J(u0) always holds.
DescentResult optimize_inputs(const WienerModel& model, const InputTrajectory& u0,
                              const DescentOptions& opts = {});

// Building blocks shared with the multi-trajectory gradient: per-time
// accumulation weights and the adjoint pass mapping them to input space.
std::vector<VectorXd> accumulate_gradient_weights(const DbsWorkspace& ws,
                                                  const ParameterPrior& prior, const MatrixXd& K,
                                                  const MatrixXd& L);
VectorXd gradient_from_weights(const LinearDynamics& dyn, const std::vector<VectorXd>& weights);

}  // namespace wienerid
