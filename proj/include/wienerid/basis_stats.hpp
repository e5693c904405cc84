#pragma once

#include <functional>
#include <vector>

#include "wienerid/lifted.hpp"

namespace wienerid {

/// Real Fourier feature set: phi_0(x) = 1 and phi_n(x) = 2 cos(f_n . x) for
/// n >= 1, the paired-frequency form whose span is real-valued.
struct FourierBasis {
  std::vector<VectorXd> frequencies;  // f_0 = 0, then f_1..f_N

  explicit FourierBasis(std::vector<VectorXd> freqs);

  int count() const { return static_cast<int>(frequencies.size()); }  // N + 1
  int dim() const { return static_cast<int>(frequencies.front().size()); }

  /// Feature vector at a point.
  VectorXd eval(const VectorXd& x) const;
  /// Rows f_1..f_N stacked into an N x dim matrix (the constant feature has
  /// no frequency content).
  MatrixXd freq_matrix() const;
};

/// Prior mean and covariance of the output-function coefficients.
struct ParameterPrior {
  VectorXd mu_theta;
  MatrixXd Sigma_theta;

  ParameterPrior(VectorXd mu, MatrixXd sigma);

  int count() const { return static_cast<int>(mu_theta.size()); }
  /// Second-moment weighting Sigma_theta + mu mu^T shared by design assembly.
  MatrixXd second_moment() const { return Sigma_theta + mu_theta * mu_theta.transpose(); }
};

/// The two matrices that fully determine the affine estimator: column t of
/// `phi_bar` is the feature mean at time t, and M(t,t') carries the trace of
/// the feature cross-covariance weighted by the prior second moment.
struct DesignStatistics {
  MatrixXd phi_bar;  // (N+1) x (T+1)
  MatrixXd M;        // (T+1) x (T+1), symmetric

  int horizon() const { return static_cast<int>(M.rows()) - 1; }
  int basis_count() const { return static_cast<int>(phi_bar.rows()); }
};

struct DesignGradient {
  MatrixXd d_phi_bar;
  MatrixXd d_M;
};

/// Characteristic generator of an elliptical noise family, evaluated on
/// quadratic forms. The Gaussian instance is rho(q) = exp(-q/2).
struct NoiseCharacteristic {
  std::function<double(double)> rho;

  static NoiseCharacteristic gaussian();
  double operator()(double q) const { return rho(q); }
};

/// Feature mean at time t under Gaussian process noise:
/// element 0 is 1, element n is 2 cos(f_n . mean_t) exp(-f_n^T P_t f_n / 2).
VectorXd fourier_mean(const FourierBasis& basis, const StateStatistics& stats, int t);

/// Cross-covariance entry (m, n) of the features at times (t, t') under
/// Gaussian process noise. Zero whenever m or n indexes the constant feature.
double fourier_cross_cov(const FourierBasis& basis, const StateStatistics& stats, int t,
                         int t_prime, int m, int n);

/// Assembles the full design statistics from the trajectory statistics.
DesignStatistics build_design(const FourierBasis& basis, const StateStatistics& stats,
                              const ParameterPrior& prior);

/// Input gradients of the design statistics with respect to one stacked-input
/// coordinate. Requires statistics propagated with sensitivities.
DesignGradient build_design_gradient(const FourierBasis& basis, const StateStatistics& stats,
                                     const ParameterPrior& prior, int coord);

// Shared precomputation for design assembly and gradients: per-feature
// cosine arguments, quadratic forms, and decay factors along the trajectory.
struct DbsWorkspace {
  const StateStatistics* stats = nullptr;
  MatrixXd freq;   // N x n_x
  MatrixXd a;      // N x (T+1): f_n . mean_t
  MatrixXd q;      // N x (T+1): f_n^T P_t f_n
  MatrixXd decay;  // exp(-q/2)
  MatrixXd cos_a;
  MatrixXd sin_a;

  /// f_m^T Cov(x_t, x_{t'}) f_n for all (m, n) at once.
  MatrixXd cross_form(int t, int t_prime) const;

  /// e1 = exp(-c - h) - exp(-h) and e2 = exp(c - h) - exp(-h) for all (m, n),
  /// with h the mean of the two quadratic forms. Every exponent is
  /// nonpositive, so these never overflow.
  void pair_exponentials(int t, int t_prime, MatrixXd& e1, MatrixXd& e2) const;
};

DbsWorkspace make_dbs_workspace(const FourierBasis& basis, const StateStatistics& stats);

/// Extensibility hook for non-Gaussian elliptical process noise. Evaluates
/// the same statistics through a characteristic generator applied to whitened
/// quadratic forms, materializing the lifted square root explicitly (subject
/// to the lifted dimension cap). Only the Gaussian generator ships; tests
/// exercise this path against the closed forms above.
class CharacteristicDbs {
 public:
  CharacteristicDbs(const LinearDynamics& dyn, const NoiseModel& noise, const InputTrajectory& u,
                    const FourierBasis& basis, NoiseCharacteristic rho,
                    int dim_cap = tol::kLiftedDimCap);

  VectorXd mean(int t) const;
  double cross_cov(int t, int t_prime, int m, int n) const;
  DesignStatistics build_design(const ParameterPrior& prior) const;

 private:
  int count_;
  int horizon_;
  NoiseCharacteristic rho_;
  MatrixXd a_;                          // N x (T+1) cosine arguments
  std::vector<std::vector<VectorXd>> whitened_;  // [n-1][t]: sqrt(Sigma_Wbar) Abar_t^T f_n
};

}  // namespace wienerid
