#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wienerid/estimators.hpp"
#include "wienerid/model.hpp"

using namespace wienerid;

namespace {

std::mt19937_64 test_rng(271828ull);

MatrixXd random_matrix(int r, int c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * n(test_rng);
  return m;
}

MatrixXd random_spd(int n, double scale = 1.0) {
  MatrixXd a = random_matrix(n, n);
  return scale * (a * a.transpose() + 0.1 * MatrixXd::Identity(n, n));
}

FourierBasis random_basis(int n_x, int N) {
  std::vector<VectorXd> f{VectorXd::Zero(n_x)};
  for (int n = 0; n < N; ++n) f.push_back(random_matrix(n_x, 1, 1.1));
  return FourierBasis(f);
}

WienerModel random_model(int n_x, int n_u, int T, int N, double noise_scale = 0.2) {
  std::vector<MatrixXd> as, bs, sw;
  for (int t = 0; t < T; ++t) {
    as.push_back(random_matrix(n_x, n_x, 0.45));
    bs.push_back(random_matrix(n_x, n_u, 0.8));
    sw.push_back(random_spd(n_x, noise_scale));
  }
  LinearDynamics dyn(n_x, n_u, T, as, bs);
  NoiseModel noise(random_spd(n_x, noise_scale), sw, std::vector<double>(T + 1, 0.01));
  ParameterPrior prior(random_matrix(N + 1, 1, 2.0), random_spd(N + 1));
  return WienerModel(dyn, noise, random_basis(n_x, N), prior);
}

InputTrajectory random_input(const LinearDynamics& dyn, double scale = 1.0) {
  return InputTrajectory::free(random_matrix(dyn.stacked_input_dim(), 1, scale));
}

}  // namespace

TEST_CASE("scalar conjugate case: gain one half") {
  // Constant basis, one measurement, unit prior variance and unit noise.
  DesignStatistics design;
  design.phi_bar = MatrixXd::Ones(1, 1);
  design.M = MatrixXd::Zero(1, 1);
  ParameterPrior prior(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  VectorXd sv = VectorXd::Ones(1);
  auto gain = bayes_gain(design, prior, sv);
  CHECK(gain.Psi_star(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gain.psi_star(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(gain.J_star == doctest::Approx(0.5).epsilon(1e-14));

  VectorXd y(1);
  y << 2.0;
  CHECK(bayes_estimate(gain, y)(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("uninformative measurements return the prior") {
  auto model = random_model(2, 1, 8, 4);
  InputTrajectory u = random_input(model.dyn);
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  auto design = build_design(model.basis, stats, model.prior);
  VectorXd sv = VectorXd::Constant(9, 1e12);
  auto gain = bayes_gain(design, model.prior, sv);
  CHECK(gain.Psi_star.norm() < 1e-9);
  CHECK(std::abs(gain.J_star - model.prior.Sigma_theta.trace()) /
            model.prior.Sigma_theta.trace() < 1e-6);

  auto post = posterior_update(gain, design, model.prior, VectorXd::Zero(9));
  CHECK((post.Sigma_pos - model.prior.Sigma_theta).norm() / model.prior.Sigma_theta.norm() < 1e-9);
}

TEST_CASE("direct and information-form errors agree") {
  for (int rep = 0; rep < 10; ++rep) {
    auto model = random_model(2, 2, 20, 5);
    InputTrajectory u = random_input(model.dyn);
    auto stats = propagate_state_stats(model.dyn, model.noise, u);
    auto design = build_design(model.basis, stats, model.prior);
    VectorXd sv = model.noise.sigma_v_vec();
    auto gain = bayes_gain(design, model.prior, sv);
    double info = bayes_error_information_form(design, model.prior, sv);
    CHECK(std::abs(gain.J_star - info) / info < 1e-8);
    CHECK(gain.J_star >= 0.0);
    CHECK(gain.J_star <= model.prior.Sigma_theta.trace() + 1e-12);
  }
}

TEST_CASE("prior-predicted measurements leave the estimate at the prior mean") {
  auto model = random_model(2, 1, 6, 3);
  InputTrajectory u = random_input(model.dyn);
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  auto design = build_design(model.basis, stats, model.prior);
  auto gain = bayes_gain(design, model.prior, model.noise.sigma_v_vec());
  VectorXd y = design.phi_bar.transpose() * model.prior.mu_theta;
  CHECK((bayes_estimate(gain, y) - model.prior.mu_theta).norm() < 1e-10);
  auto post = posterior_update(gain, design, model.prior, y);
  CHECK((post.mu_pos - model.prior.mu_theta).norm() < 1e-10);
}

TEST_CASE("estimator is unbiased over the joint draw") {
  auto model = random_model(2, 1, 8, 3, 0.15);
  InputTrajectory u = random_input(model.dyn);
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  auto design = build_design(model.basis, stats, model.prior);
  auto gain = bayes_gain(design, model.prior, model.noise.sigma_v_vec());

  const int n_reps = 10000;
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd l_theta = psd_sqrt(model.prior.Sigma_theta);
  MatrixXd lx0 = psd_sqrt(model.noise.Sigma_x0);
  std::vector<MatrixXd> lw;
  for (auto& s : model.noise.Sigma_w) lw.push_back(psd_sqrt(s));
  const int nb = model.basis.count();
  VectorXd sum_diff = VectorXd::Zero(nb);
  VectorXd sum_sq = VectorXd::Zero(nb);
  for (int r = 0; r < n_reps; ++r) {
    VectorXd zt(nb);
    for (int i = 0; i < nb; ++i) zt(i) = gauss(rng);
    VectorXd theta = model.prior.mu_theta + l_theta * zt;
    VectorXd z(2);
    z << gauss(rng), gauss(rng);
    VectorXd x = u.initial_mean(2) + lx0 * z;
    VectorXd y(9);
    for (int t = 0; t <= 8; ++t) {
      y(t) = model.basis.eval(x).dot(theta) + std::sqrt(0.01) * gauss(rng);
      if (t < 8) {
        z << gauss(rng), gauss(rng);
        x = model.dyn.A[t] * x + model.dyn.B[t] * u.input_at(2, 1, t) + lw[t] * z;
      }
    }
    VectorXd diff = theta - bayes_estimate(gain, y);
    sum_diff += diff;
    sum_sq += diff.cwiseProduct(diff);
  }
  VectorXd mean_diff = sum_diff / n_reps;
  for (int i = 0; i < nb; ++i) {
    double var = sum_sq(i) / n_reps - mean_diff(i) * mean_diff(i);
    double se = std::sqrt(var / n_reps);
    CHECK(std::abs(mean_diff(i)) < 4.0 * se);
  }
}

TEST_CASE("posterior trace equals the analytic error") {
  for (int rep = 0; rep < 5; ++rep) {
    auto model = random_model(2, 2, 10, 4);
    InputTrajectory u = random_input(model.dyn);
    auto stats = propagate_state_stats(model.dyn, model.noise, u);
    auto design = build_design(model.basis, stats, model.prior);
    auto gain = bayes_gain(design, model.prior, model.noise.sigma_v_vec());
    auto post = posterior_update(gain, design, model.prior, random_matrix(11, 1));
    CHECK(std::abs(post.Sigma_pos.trace() - gain.J_star) < 1e-12 * std::max(1.0, gain.J_star));

    // Contraction relative to the prior.
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(model.prior.Sigma_theta - post.Sigma_pos);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("error shrinks monotonically with each measurement") {
  for (int rep = 0; rep < 100; ++rep) {
    int T = 4 + static_cast<int>(test_rng() % 6);
    auto model = random_model(2, 1, T, 3);
    InputTrajectory u = random_input(model.dyn);
    auto stats = propagate_state_stats(model.dyn, model.noise, u);
    auto design = build_design(model.basis, stats, model.prior);
    VectorXd sv = model.noise.sigma_v_vec();
    double prev = std::numeric_limits<double>::infinity();
    for (int t = 0; t <= T; ++t) {
      double jt = bayes_error_prefix(design, model.prior, sv, t);
      CHECK(jt <= prev + 1e-12);
      prev = jt;
    }
    CHECK(bayes_error_prefix(design, model.prior, sv, T) ==
          doctest::Approx(bayes_gain(design, model.prior, sv).J_star).epsilon(1e-12));
  }
}

TEST_CASE("optimal gain is a stationary point of the affine error") {
  auto model = random_model(2, 1, 8, 3);
  InputTrajectory u = random_input(model.dyn);
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  auto design = build_design(model.basis, stats, model.prior);
  VectorXd sv = model.noise.sigma_v_vec();
  auto gain = bayes_gain(design, model.prior, sv);
  double at_opt = affine_mse(gain.Psi_star, gain.psi_star, design, model.prior, sv);
  CHECK(at_opt == doctest::Approx(gain.J_star).epsilon(1e-10));
  for (int rep = 0; rep < 20; ++rep) {
    MatrixXd delta = random_matrix(gain.Psi_star.rows(), gain.Psi_star.cols());
    delta *= 1e-3 / delta.norm();
    double perturbed = affine_mse(gain.Psi_star + delta, gain.psi_star, design, model.prior, sv);
    CHECK(perturbed >= at_opt - 1e-14);
  }
}

TEST_CASE("conjugate case: matches the exact Gaussian posterior mean") {
  // Without process noise the features are deterministic, so the model is
  // plain Bayesian linear regression with known feature matrix.
  int T = 12, N = 3;
  LinearDynamics dyn = LinearDynamics::invariant(T, random_matrix(2, 2, 0.5), random_matrix(2, 2));
  NoiseModel noise = NoiseModel::isotropic(2, T, 0.0, 0.0, 0.01);
  ParameterPrior prior(random_matrix(N + 1, 1, 2.0), random_spd(N + 1));
  WienerModel model(dyn, noise, random_basis(2, N), prior);
  InputTrajectory u = random_input(dyn);
  auto stats = propagate_state_stats(dyn, noise, u);
  auto design = build_design(model.basis, stats, prior);
  auto gain = bayes_gain(design, prior, noise.sigma_v_vec());

  VectorXd theta_true = random_matrix(N + 1, 1, 3.0);
  VectorXd y(T + 1);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t <= T; ++t)
    y(t) = model.basis.eval(stats.mean(t)).dot(theta_true) + 0.1 * gauss(rng);

  // Exact posterior mean of a Gaussian prior with Gaussian likelihood.
  MatrixXd phi = design.phi_bar;  // deterministic features here
  MatrixXd sigma_inv = prior.Sigma_theta.llt().solve(MatrixXd::Identity(N + 1, N + 1));
  MatrixXd a = sigma_inv + phi * phi.transpose() / 0.01;
  VectorXd b = sigma_inv * prior.mu_theta + phi * y / 0.01;
  VectorXd exact = a.llt().solve(b);
  CHECK((bayes_estimate(gain, y) - exact).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ridge with huge regularization shrinks to zero") {
  auto model = random_model(2, 1, 10, 3);
  InputTrajectory u = random_input(model.dyn);
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  VectorXd y = random_matrix(11, 1, 2.0);
  VectorXd theta = rls_fit(RlsMode::MLS, 1e12, model.basis, stats, y);
  // Features are bounded by 2 in magnitude.
  double phi_y_bound = 2.0 * std::sqrt(4.0 * 11.0) * y.norm();
  CHECK(theta.norm() < 1e-9 * phi_y_bound);
}

TEST_CASE("without process noise DLS and MLS coincide") {
  int T = 9;
  LinearDynamics dyn = LinearDynamics::invariant(T, random_matrix(2, 2, 0.5), random_matrix(2, 1));
  NoiseModel noise = NoiseModel::isotropic(2, T, 0.0, 0.0, 0.01);
  auto basis = random_basis(2, 4);
  InputTrajectory u = random_input(dyn);
  auto stats = propagate_state_stats(dyn, noise, u);
  VectorXd y = random_matrix(T + 1, 1);
  VectorXd dls = rls_fit(RlsMode::DLS, 0.1, basis, stats, y);
  VectorXd mls = rls_fit(RlsMode::MLS, 0.1, basis, stats, y);
  CHECK((dls - mls).norm() == 0.0);
}

TEST_CASE("ridge recovers the truth on clean long trajectories") {
  // Noise-free measurements of a basis-exact function: error decreases with T.
  auto basis = random_basis(2, 3);
  VectorXd theta_true = random_matrix(4, 1, 2.0);
  auto run = [&](int T) {
    LinearDynamics dyn = LinearDynamics::invariant(T, MatrixXd::Identity(2, 2),
                                                   0.3 * MatrixXd::Identity(2, 2));
    NoiseModel noise = NoiseModel::isotropic(2, T, 0.0, 0.0, 1e-12);
    InputTrajectory u = random_input(dyn, 1.0);
    auto stats = propagate_state_stats(dyn, noise, u);
    VectorXd y(T + 1);
    for (int t = 0; t <= T; ++t) y(t) = basis.eval(stats.mean(t)).dot(theta_true);
    return (rls_fit(RlsMode::DLS, 1e-8, basis, stats, y) - theta_true).norm();
  };
  double err_short = run(12);
  double err_long = run(60);
  CHECK(err_long < err_short);
  CHECK(err_long < 1e-4);
}

TEST_CASE("singular normal equations at zero regularization are reported") {
  // A single measurement cannot determine four coefficients.
  auto model = random_model(2, 1, 0, 3);
  InputTrajectory u = InputTrajectory::free(random_matrix(2, 1));
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  VectorXd y = random_matrix(1, 1);
  CHECK_THROWS_WITH_AS(rls_fit(RlsMode::MLS, 0.0, model.basis, stats, y),
                       doctest::Contains("lambda"), NumericalError);
}

TEST_CASE("lambda grid is log-spaced with documented defaults") {
  auto grid = rls_lambda_grid();
  REQUIRE(grid.size() == 30);
  CHECK(grid.front() == doctest::Approx(1e-6));
  CHECK(grid.back() == doctest::Approx(1e3));
  for (size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(grid[1] / grid[0]).epsilon(1e-9));
  }
}

TEST_CASE("gain rejects non-positive measurement variance") {
  DesignStatistics design;
  design.phi_bar = MatrixXd::Ones(1, 2);
  design.M = MatrixXd::Zero(2, 2);
  ParameterPrior prior(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  VectorXd sv(2);
  sv << 0.5, 0.0;
  CHECK_THROWS_AS(bayes_gain(design, prior, sv), std::invalid_argument);
  VectorXd wrong_len = VectorXd::Ones(3);
  CHECK_THROWS_AS(bayes_gain(design, prior, wrong_len), std::invalid_argument);
}

TEST_CASE("estimate rejects mismatched measurement length") {
  DesignStatistics design;
  design.phi_bar = MatrixXd::Ones(1, 2);
  design.M = MatrixXd::Zero(2, 2);
  ParameterPrior prior(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
  auto gain = bayes_gain(design, prior, VectorXd::Ones(2));
  CHECK_THROWS_AS(bayes_estimate(gain, VectorXd::Ones(3)), std::invalid_argument);
}
