#pragma once

#include "wienerid/basis_stats.hpp"

namespace wienerid {

/// Affine estimator coefficients theta_hat(y) = Psi_star y + psi_star along
/// with the analytic mean squared estimation error J_star.
struct EstimatorGain {
  MatrixXd Psi_star;  // (N+1) x (T+1)
  VectorXd psi_star;  // N+1
  double J_star = 0.0;
};

struct PosteriorBelief {
  VectorXd mu_pos;
  MatrixXd Sigma_pos;
};

enum class RlsMode { DLS, MLS };

/// Minimum mean-square-error affine estimator for the given design. All
/// measurement noise variances must be positive; the inner matrix
/// G = phi_bar^T Sigma_theta phi_bar + M + diag(sigma_v_sq) is then positive
/// definite and is factorized rather than inverted.
EstimatorGain bayes_gain(const DesignStatistics& design, const ParameterPrior& prior,
                         const VectorXd& sigma_v_sq);

VectorXd bayes_estimate(const EstimatorGain& gain, const VectorXd& y);

/// Posterior mean and covariance after observing y; trace(Sigma_pos) equals
/// the gain's J_star.
PosteriorBelief posterior_update(const EstimatorGain& gain, const DesignStatistics& design,
                                 const ParameterPrior& prior, const VectorXd& y);

/// The analytic error evaluated through the low-dimensional information form
/// trace((Sigma_theta^{-1} + phi_bar R^{-1} phi_bar^T)^{-1}) with
/// R = M + diag(sigma_v_sq). Requires a strictly positive definite prior;
/// serves as a fast path for many measurements and as an algebraic
/// cross-check of bayes_gain's direct form.
double bayes_error_information_form(const DesignStatistics& design, const ParameterPrior& prior,
                                    const VectorXd& sigma_v_sq);

/// Analytic error using only measurements 0..t (leading principal sub-blocks
/// of the design).
double bayes_error_prefix(const DesignStatistics& design, const ParameterPrior& prior,
                          const VectorXd& sigma_v_sq, int t);

/// Expected squared error of an arbitrary affine estimator (Psi, psi) under
/// the same moment model. Evaluating it at the optimal gain recovers J_star.
double affine_mse(const MatrixXd& Psi, const VectorXd& psi, const DesignStatistics& design,
                  const ParameterPrior& prior, const VectorXd& sigma_v_sq);

/// Ridge-regression gain matrix (phi_tilde phi_tilde^T + lambda I)^{-1} phi_tilde
/// where phi_tilde evaluates the basis at the mean state (DLS) or takes the
/// feature mean (MLS). Throws when the system is singular at lambda = 0.
MatrixXd rls_gain(RlsMode mode, double lambda, const FourierBasis& basis,
                  const StateStatistics& stats);

VectorXd rls_fit(RlsMode mode, double lambda, const FourierBasis& basis,
                 const StateStatistics& stats, const VectorXd& y);

/// Log-spaced regularization grid, default 30 points spanning 1e-6..1e3.
std::vector<double> rls_lambda_grid(double lo = 1e-6, double hi = 1e3, int count = 30);

}  // namespace wienerid
