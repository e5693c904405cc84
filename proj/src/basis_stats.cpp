#include "wienerid/basis_stats.hpp"

#include <cmath>

namespace wienerid {

namespace {

void check_basis_dim(const FourierBasis& basis, const StateStatistics& stats) {
  if (basis.dim() != stats.state_dim()) {
    throw std::invalid_argument("basis frequencies have dimension " + std::to_string(basis.dim()) +
                                " but the state dimension is " +
                                std::to_string(stats.state_dim()));
  }
}

void check_time(int t, int T) {
  if (t < 0 || t > T) {
    throw std::invalid_argument("time index " + std::to_string(t) + " outside horizon 0.." +
                                std::to_string(T));
  }
}

void check_prior_count(const ParameterPrior& prior, int count) {
  if (prior.count() != count) {
    throw std::invalid_argument("prior has " + std::to_string(prior.count()) +
                                " coefficients but the basis has " + std::to_string(count));
  }
}

}  // namespace

FourierBasis::FourierBasis(std::vector<VectorXd> freqs) : frequencies(std::move(freqs)) {
  if (frequencies.empty()) {
    throw std::invalid_argument("basis needs at least the constant feature");
  }
  if (frequencies.front().size() == 0 || frequencies.front().cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("the first frequency vector must be exactly zero");
  }
  const auto d = frequencies.front().size();
  for (size_t n = 1; n < frequencies.size(); ++n) {
    if (frequencies[n].size() != d) {
      throw std::invalid_argument("frequency " + std::to_string(n) + " has dimension " +
                                  std::to_string(frequencies[n].size()) + ", expected " +
                                  std::to_string(d));
    }
  }
}

VectorXd FourierBasis::eval(const VectorXd& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("basis evaluated at a point of dimension " +
                                std::to_string(x.size()) + ", expected " + std::to_string(dim()));
  }
  VectorXd out(count());
  out(0) = 1.0;
  for (int n = 1; n < count(); ++n) out(n) = 2.0 * std::cos(frequencies[n].dot(x));
  return out;
}

MatrixXd FourierBasis::freq_matrix() const {
  MatrixXd f(count() - 1, dim());
  for (int n = 1; n < count(); ++n) f.row(n - 1) = frequencies[n].transpose();
  return f;
}

ParameterPrior::ParameterPrior(VectorXd mu, MatrixXd sigma)
    : mu_theta(std::move(mu)), Sigma_theta(std::move(sigma)) {
  if (Sigma_theta.rows() != mu_theta.size() || Sigma_theta.cols() != mu_theta.size()) {
    throw std::invalid_argument("prior covariance must be " + std::to_string(mu_theta.size()) +
                                "x" + std::to_string(mu_theta.size()) + ", got " +
                                shape_str(Sigma_theta));
  }
  Sigma_theta = psd_repair(Sigma_theta, "Sigma_theta", tol::kPsdRepair);
}

NoiseCharacteristic NoiseCharacteristic::gaussian() {
  return NoiseCharacteristic{[](double q) { return std::exp(-0.5 * q); }};
}

VectorXd fourier_mean(const FourierBasis& basis, const StateStatistics& stats, int t) {
  check_basis_dim(basis, stats);
  check_time(t, stats.horizon());
  VectorXd out(basis.count());
  out(0) = 1.0;
  for (int n = 1; n < basis.count(); ++n) {
    const VectorXd& f = basis.frequencies[n];
    double a = f.dot(stats.mean(t));
    double q = f.dot(stats.cov(t) * f);
    out(n) = 2.0 * std::cos(a) * std::exp(-0.5 * q);
  }
  return out;
}

double fourier_cross_cov(const FourierBasis& basis, const StateStatistics& stats, int t,
                         int t_prime, int m, int n) {
  check_basis_dim(basis, stats);
  check_time(t, stats.horizon());
  check_time(t_prime, stats.horizon());
  if (m < 0 || m >= basis.count() || n < 0 || n >= basis.count()) {
    throw std::invalid_argument("feature index outside 0.." + std::to_string(basis.count() - 1));
  }
  if (m == 0 || n == 0) return 0.0;
  const VectorXd& fm = basis.frequencies[m];
  const VectorXd& fn = basis.frequencies[n];
  double a = fm.dot(stats.mean(t));
  double b = fn.dot(stats.mean(t_prime));
  double qm = fm.dot(stats.cov(t) * fm);
  double qn = fn.dot(stats.cov(t_prime) * fn);
  double c = fm.dot(stats.cross(t, t_prime) * fn);
  double h = 0.5 * (qm + qn);
  // Both exponents are nonpositive: |c| <= h by Cauchy-Schwarz.
  double e1 = std::exp(-c - h) - std::exp(-h);
  double e2 = std::exp(c - h) - std::exp(-h);
  return 2.0 * (std::cos(a + b) * e1 + std::cos(a - b) * e2);
}

DbsWorkspace make_dbs_workspace(const FourierBasis& basis, const StateStatistics& stats) {
  check_basis_dim(basis, stats);
  const int N = basis.count() - 1;
  const int T = stats.horizon();
  DbsWorkspace ws;
  ws.stats = &stats;
  ws.freq = basis.freq_matrix();
  ws.a.resize(N, T + 1);
  ws.q.resize(N, T + 1);
  for (int t = 0; t <= T; ++t) {
    ws.a.col(t) = ws.freq * stats.mean(t);
    ws.q.col(t) = (ws.freq * stats.cov(t)).cwiseProduct(ws.freq).rowwise().sum();
  }
  ws.decay = (-0.5 * ws.q.array()).exp();
  ws.cos_a = ws.a.array().cos();
  ws.sin_a = ws.a.array().sin();
  return ws;
}

MatrixXd DbsWorkspace::cross_form(int t, int t_prime) const {
  return freq * stats->cross(t, t_prime) * freq.transpose();
}

void DbsWorkspace::pair_exponentials(int t, int t_prime, MatrixXd& e1, MatrixXd& e2) const {
  const int N = static_cast<int>(a.rows());
  MatrixXd c = cross_form(t, t_prime);
  MatrixXd h = 0.5 * (q.col(t).replicate(1, N) + q.col(t_prime).transpose().replicate(N, 1));
  MatrixXd neg_h = (-h.array()).exp();
  e1 = ((-c - h).array().exp()).matrix() - neg_h;
  e2 = ((c - h).array().exp()).matrix() - neg_h;
}

DesignStatistics build_design(const FourierBasis& basis, const StateStatistics& stats,
                              const ParameterPrior& prior) {
  check_prior_count(prior, basis.count());
  const int N = basis.count() - 1;
  const int T = stats.horizon();
  DbsWorkspace ws = make_dbs_workspace(basis, stats);

  DesignStatistics design;
  design.phi_bar.resize(N + 1, T + 1);
  design.phi_bar.row(0).setOnes();
  if (N > 0) {
    design.phi_bar.bottomRows(N) = 2.0 * ws.cos_a.cwiseProduct(ws.decay);
  }

  design.M = MatrixXd::Zero(T + 1, T + 1);
  if (N > 0) {
    MatrixXd weight = prior.second_moment().bottomRightCorner(N, N);
    for (int t = 0; t <= T; ++t) {
      for (int tp = t; tp <= T; ++tp) {
        MatrixXd e1, e2;
        ws.pair_exponentials(t, tp, e1, e2);
        MatrixXd cos_sum = ws.cos_a.col(t) * ws.cos_a.col(tp).transpose() -
                           ws.sin_a.col(t) * ws.sin_a.col(tp).transpose();
        MatrixXd cos_diff = ws.cos_a.col(t) * ws.cos_a.col(tp).transpose() +
                            ws.sin_a.col(t) * ws.sin_a.col(tp).transpose();
        double value = 2.0 * (cos_sum.cwiseProduct(e1) + cos_diff.cwiseProduct(e2))
                                 .cwiseProduct(weight)
                                 .sum();
        design.M(t, tp) = value;
        design.M(tp, t) = value;
      }
    }
    design.M = symmetrized(design.M);
  }
  return design;
}

DesignGradient build_design_gradient(const FourierBasis& basis, const StateStatistics& stats,
                                     const ParameterPrior& prior, int coord) {
  if (!stats.has_sensitivities()) {
    throw std::invalid_argument("design gradients need mean sensitivities; propagate the state "
                                "statistics with with_sensitivities = true");
  }
  check_prior_count(prior, basis.count());
  const int N = basis.count() - 1;
  const int T = stats.horizon();
  DbsWorkspace ws = make_dbs_workspace(basis, stats);

  DesignGradient grad;
  grad.d_phi_bar = MatrixXd::Zero(N + 1, T + 1);
  grad.d_M = MatrixXd::Zero(T + 1, T + 1);
  if (N == 0) return grad;

  // g(n, t) = f_n . d mean_t / d u_coord; the covariances do not depend on the input.
  MatrixXd g(N, T + 1);
  for (int t = 0; t <= T; ++t) g.col(t) = ws.freq * stats.sensitivity(coord, t);

  grad.d_phi_bar.bottomRows(N) = -2.0 * ws.sin_a.cwiseProduct(g).cwiseProduct(ws.decay);

  MatrixXd weight = prior.second_moment().bottomRightCorner(N, N);
  for (int t = 0; t <= T; ++t) {
    for (int tp = t; tp <= T; ++tp) {
      MatrixXd e1, e2;
      ws.pair_exponentials(t, tp, e1, e2);
      MatrixXd sin_sum = ws.sin_a.col(t) * ws.cos_a.col(tp).transpose() +
                         ws.cos_a.col(t) * ws.sin_a.col(tp).transpose();
      MatrixXd sin_diff = ws.sin_a.col(t) * ws.cos_a.col(tp).transpose() -
                          ws.cos_a.col(t) * ws.sin_a.col(tp).transpose();
      MatrixXd gm = g.col(t).replicate(1, N);
      MatrixXd gn = g.col(tp).transpose().replicate(N, 1);
      MatrixXd d = -2.0 * ((gm + gn).cwiseProduct(sin_sum).cwiseProduct(e1) +
                           (gm - gn).cwiseProduct(sin_diff).cwiseProduct(e2));
      double value = d.cwiseProduct(weight).sum();
      grad.d_M(t, tp) = value;
      grad.d_M(tp, t) = value;
    }
  }
  grad.d_M = symmetrized(grad.d_M);
  return grad;
}

CharacteristicDbs::CharacteristicDbs(const LinearDynamics& dyn, const NoiseModel& noise,
                                     const InputTrajectory& u, const FourierBasis& basis,
                                     NoiseCharacteristic rho, int dim_cap)
    : count_(basis.count()), horizon_(dyn.horizon), rho_(std::move(rho)) {
  const int n_x = dyn.state_dim, T = dyn.horizon;
  if (basis.dim() != n_x) {
    throw std::invalid_argument("basis frequencies have dimension " + std::to_string(basis.dim()) +
                                " but the state dimension is " + std::to_string(n_x));
  }
  LiftedBlocks blocks = build_lifted_blocks(dyn, dim_cap);

  // Block-diagonal square root of the stacked noise covariance.
  MatrixXd sqrt_wbar = MatrixXd::Zero(n_x * (T + 1), n_x * (T + 1));
  sqrt_wbar.block(0, 0, n_x, n_x) = psd_sqrt(noise.Sigma_x0);
  for (int t = 0; t < T; ++t) {
    sqrt_wbar.block(n_x * (t + 1), n_x * (t + 1), n_x, n_x) = psd_sqrt(noise.Sigma_w[t]);
  }

  VectorXd lifted_mean = blocks.A * blocks.B * u.stacked;
  a_.resize(count_ - 1, T + 1);
  whitened_.resize(count_ - 1);
  for (int n = 1; n < count_; ++n) {
    whitened_[n - 1].resize(T + 1);
    for (int t = 0; t <= T; ++t) {
      VectorXd abar_t_f = blocks.A.middleRows(n_x * t, n_x).transpose() * basis.frequencies[n];
      whitened_[n - 1][t] = sqrt_wbar * abar_t_f;
      a_(n - 1, t) = basis.frequencies[n].dot(lifted_mean.segment(n_x * t, n_x));
    }
  }
}

VectorXd CharacteristicDbs::mean(int t) const {
  check_time(t, horizon_);
  VectorXd out(count_);
  out(0) = 1.0;
  for (int n = 1; n < count_; ++n) {
    double q = whitened_[n - 1][t].squaredNorm();
    out(n) = 2.0 * std::cos(a_(n - 1, t)) * rho_(q);
  }
  return out;
}

double CharacteristicDbs::cross_cov(int t, int t_prime, int m, int n) const {
  check_time(t, horizon_);
  check_time(t_prime, horizon_);
  if (m == 0 || n == 0) return 0.0;
  const VectorXd& gm = whitened_[m - 1][t];
  const VectorXd& gn = whitened_[n - 1][t_prime];
  double qm = gm.squaredNorm(), qn = gn.squaredNorm(), c = gm.dot(gn);
  double a = a_(m - 1, t), b = a_(n - 1, t_prime);
  double marginal = rho_(qm) * rho_(qn);
  return 2.0 * (std::cos(a + b) * (rho_(qm + qn + 2.0 * c) - marginal) +
                std::cos(a - b) * (rho_(qm + qn - 2.0 * c) - marginal));
}

DesignStatistics CharacteristicDbs::build_design(const ParameterPrior& prior) const {
  check_prior_count(prior, count_);
  DesignStatistics design;
  design.phi_bar.resize(count_, horizon_ + 1);
  for (int t = 0; t <= horizon_; ++t) design.phi_bar.col(t) = mean(t);
  design.M = MatrixXd::Zero(horizon_ + 1, horizon_ + 1);
  MatrixXd weight = prior.second_moment();
  for (int t = 0; t <= horizon_; ++t) {
    for (int tp = t; tp <= horizon_; ++tp) {
      double value = 0.0;
      for (int m = 1; m < count_; ++m)
        for (int n = 1; n < count_; ++n) value += cross_cov(t, tp, m, n) * weight(m, n);
      design.M(t, tp) = value;
      design.M(tp, t) = value;
    }
  }
  design.M = symmetrized(design.M);
  return design;
}

}  // namespace wienerid
