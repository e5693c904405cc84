#include "wienerid/estimators.hpp"

#include <cmath>

namespace wienerid {

namespace {

// G = phi_bar^T Sigma_theta phi_bar + M + diag(sigma_v_sq), the covariance of
// the measurement vector under the moment model.
MatrixXd inner_matrix(const DesignStatistics& design, const ParameterPrior& prior,
                      const VectorXd& sigma_v_sq) {
  MatrixXd y = design.phi_bar.transpose() * prior.Sigma_theta;
  MatrixXd g = y * design.phi_bar + design.M;
  g.diagonal() += sigma_v_sq;
  return symmetrized(g);
}

void check_inputs(const DesignStatistics& design, const ParameterPrior& prior,
                  const VectorXd& sigma_v_sq) {
  const auto cols = design.phi_bar.cols();
  if (design.M.rows() != cols || design.M.cols() != cols) {
    throw std::invalid_argument("design M must be " + std::to_string(cols) + "x" +
                                std::to_string(cols) + ", got " + shape_str(design.M));
  }
  if (prior.count() != design.phi_bar.rows()) {
    throw std::invalid_argument("prior has " + std::to_string(prior.count()) +
                                " coefficients but the design has " +
                                std::to_string(design.phi_bar.rows()));
  }
  if (sigma_v_sq.size() != cols) {
    throw std::invalid_argument("expected " + std::to_string(cols) +
                                " measurement variances, got " +
                                std::to_string(sigma_v_sq.size()));
  }
  for (Eigen::Index t = 0; t < sigma_v_sq.size(); ++t) {
    if (!(sigma_v_sq(t) > 0.0)) {
      throw std::invalid_argument("sigma_v_sq[" + std::to_string(t) + "] must be positive");
    }
  }
}

}  // namespace

EstimatorGain bayes_gain(const DesignStatistics& design, const ParameterPrior& prior,
                         const VectorXd& sigma_v_sq) {
  check_inputs(design, prior, sigma_v_sq);
  MatrixXd y = design.phi_bar.transpose() * prior.Sigma_theta;  // (T+1) x (N+1)
  MatrixXd g = y * design.phi_bar + design.M;
  g.diagonal() += sigma_v_sq;
  g = symmetrized(g);

  Eigen::LLT<MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("inner matrix is not positive definite; "
                         "check that all measurement variances are positive");
  }
  MatrixXd solved = llt.solve(y);  // G^{-1} phi_bar^T Sigma_theta

  EstimatorGain gain;
  gain.Psi_star = solved.transpose();
  gain.psi_star = prior.mu_theta - gain.Psi_star * (design.phi_bar.transpose() * prior.mu_theta);
  gain.J_star = prior.Sigma_theta.trace() - y.cwiseProduct(solved).sum();
  return gain;
}

VectorXd bayes_estimate(const EstimatorGain& gain, const VectorXd& y) {
  if (y.size() != gain.Psi_star.cols()) {
    throw std::invalid_argument("measurement vector has length " + std::to_string(y.size()) +
                                ", expected " + std::to_string(gain.Psi_star.cols()));
  }
  return gain.Psi_star * y + gain.psi_star;
}

PosteriorBelief posterior_update(const EstimatorGain& gain, const DesignStatistics& design,
                                 const ParameterPrior& prior, const VectorXd& y) {
  if (y.size() != design.phi_bar.cols()) {
    throw std::invalid_argument("measurement vector has length " + std::to_string(y.size()) +
                                ", expected " + std::to_string(design.phi_bar.cols()));
  }
  PosteriorBelief post;
  post.mu_pos = prior.mu_theta + gain.Psi_star * (y - design.phi_bar.transpose() * prior.mu_theta);
  post.Sigma_pos =
      symmetrized(prior.Sigma_theta -
                  gain.Psi_star * (design.phi_bar.transpose() * prior.Sigma_theta));
  return post;
}

double bayes_error_information_form(const DesignStatistics& design, const ParameterPrior& prior,
                                    const VectorXd& sigma_v_sq) {
  check_inputs(design, prior, sigma_v_sq);
  const int nb = prior.count();
  MatrixXd r = symmetrized(design.M);
  r.diagonal() += sigma_v_sq;
  Eigen::LLT<MatrixXd> llt_r(r);
  if (llt_r.info() != Eigen::Success) {
    throw NumericalError("M + diag(sigma_v_sq) is not positive definite");
  }
  Eigen::LLT<MatrixXd> llt_prior(prior.Sigma_theta);
  if (llt_prior.info() != Eigen::Success) {
    throw NumericalError("information form needs a strictly positive definite prior covariance");
  }
  MatrixXd a = llt_prior.solve(MatrixXd::Identity(nb, nb)) +
               design.phi_bar * llt_r.solve(design.phi_bar.transpose());
  return spd_solve(a, MatrixXd::Identity(nb, nb), "information matrix").trace();
}

double bayes_error_prefix(const DesignStatistics& design, const ParameterPrior& prior,
                          const VectorXd& sigma_v_sq, int t) {
  if (t < 0 || t > design.horizon()) {
    throw std::invalid_argument("prefix time " + std::to_string(t) + " outside horizon 0.." +
                                std::to_string(design.horizon()));
  }
  DesignStatistics head;
  head.phi_bar = design.phi_bar.leftCols(t + 1);
  head.M = design.M.topLeftCorner(t + 1, t + 1);
  return bayes_gain(head, prior, sigma_v_sq.head(t + 1)).J_star;
}

double affine_mse(const MatrixXd& Psi, const VectorXd& psi, const DesignStatistics& design,
                  const ParameterPrior& prior, const VectorXd& sigma_v_sq) {
  check_inputs(design, prior, sigma_v_sq);
  if (Psi.rows() != prior.count() || Psi.cols() != design.phi_bar.cols() ||
      psi.size() != prior.count()) {
    throw std::invalid_argument("affine gain has shape " + shape_str(Psi) + ", expected " +
                                std::to_string(prior.count()) + "x" +
                                std::to_string(design.phi_bar.cols()));
  }
  MatrixXd g = inner_matrix(design, prior, sigma_v_sq);
  VectorXd offset = psi - prior.mu_theta + Psi * (design.phi_bar.transpose() * prior.mu_theta);
  return prior.Sigma_theta.trace() -
         2.0 * (prior.Sigma_theta * design.phi_bar).cwiseProduct(Psi).sum() +
         (Psi * g).cwiseProduct(Psi).sum() + offset.squaredNorm();
}

MatrixXd rls_gain(RlsMode mode, double lambda, const FourierBasis& basis,
                  const StateStatistics& stats) {
  if (lambda < 0.0) {
    throw std::invalid_argument("regularization must be nonnegative");
  }
  const int nb = basis.count();
  const int T = stats.horizon();
  MatrixXd phi(nb, T + 1);
  for (int t = 0; t <= T; ++t) {
    phi.col(t) = (mode == RlsMode::DLS) ? basis.eval(stats.mean(t)) : fourier_mean(basis, stats, t);
  }
  MatrixXd normal = phi * phi.transpose();
  normal.diagonal().array() += lambda;
  Eigen::LLT<MatrixXd> llt(symmetrized(normal));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("normal equations are singular; use lambda > 0");
  }
  return llt.solve(phi);
}

VectorXd rls_fit(RlsMode mode, double lambda, const FourierBasis& basis,
                 const StateStatistics& stats, const VectorXd& y) {
  if (y.size() != stats.horizon() + 1) {
    throw std::invalid_argument("measurement vector has length " + std::to_string(y.size()) +
                                ", expected " + std::to_string(stats.horizon() + 1));
  }
  return rls_gain(mode, lambda, basis, stats) * y;
}

std::vector<double> rls_lambda_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw std::invalid_argument("grid needs 0 < lo < hi and at least two points");
  }
  std::vector<double> grid(count);
  const double step = std::log(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) grid[i] = lo * std::exp(step * i);
  return grid;
}

}  // namespace wienerid
