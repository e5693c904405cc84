#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "wienerid/input_design.hpp"

using namespace wienerid;
using namespace testutil;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-coordinate assembly of the error gradient through the design-statistics
// gradients, used as an independent oracle for the adjoint route.
VectorXd gradient_per_coordinate(const WienerModel& model, const InputTrajectory& u) {
  auto stats = propagate_state_stats(model.dyn, model.noise, u, true);
  auto design = build_design(model.basis, stats, model.prior);
  auto gain = bayes_gain(design, model.prior, model.noise.sigma_v_vec());
  MatrixXd K = gain.Psi_star.transpose() * gain.Psi_star;
  MatrixXd L = 2.0 * gain.Psi_star.transpose() *
               (gain.Psi_star * design.phi_bar.transpose() -
                MatrixXd::Identity(model.prior.count(), model.prior.count())) *
               model.prior.Sigma_theta;
  VectorXd grad = VectorXd::Zero(u.size());
  for (int i = 0; i < u.size(); ++i) {
    if (!u.opt_mask(i)) continue;
    auto dg = build_design_gradient(model.basis, stats, model.prior, i);
    grad(i) = (K * dg.d_M).trace() + (L * dg.d_phi_bar).trace();
  }
  return grad;
}

double fd_error(const WienerModel& model, const InputTrajectory& u, int coord, double h) {
  VectorXd up = u.stacked, dn = u.stacked;
  up(coord) += h;
  dn(coord) -= h;
  return (mmse_error(model, InputTrajectory::free(up)) -
          mmse_error(model, InputTrajectory::free(dn))) /
         (2 * h);
}

}  // namespace

TEST_CASE("box projection clamps to the bounds") {
  VectorXd v(3), lo = VectorXd::Constant(3, -200.0), hi = VectorXd::Constant(3, 200.0);
  v << 250.0, -300.0, 13.5;
  VectorXd p = project_box(v, lo, hi);
  CHECK(p(0) == 200.0);
  CHECK(p(1) == -200.0);
  CHECK(p(2) == 13.5);

  for (int rep = 0; rep < 20; ++rep) {
    VectorXd x = random_matrix(6, 1, 300.0);
    VectorXd l = VectorXd::Constant(6, -150.0), u = VectorXd::Constant(6, 150.0);
    VectorXd once = project_box(x, l, u);
    CHECK((project_box(once, l, u) - once).norm() == 0.0);
    CHECK((once.array() >= l.array()).all());
    CHECK((once.array() <= u.array()).all());
  }
}

TEST_CASE("projection of an interior point is the identity") {
  VectorXd v = random_matrix(4, 1, 1.0);
  VectorXd p = project_box(v, VectorXd::Constant(4, -10.0), VectorXd::Constant(4, 10.0));
  CHECK((p - v).norm() == 0.0);
}

TEST_CASE("adaptive step: first iteration uses the curvature branch") {
  VectorXd u0 = VectorXd::Zero(3), u1(3), g0(3), g1(3);
  u1 << 0.1, 0.0, -0.2;
  g0 << 1.0, 2.0, 0.5;
  g1 << 0.8, 1.9, 0.7;
  double expected = (u1 - u0).norm() / (2.0 * (g1 - g0).norm());
  CHECK(adaptive_step(1e-10, kInf, u1, u0, g1, g0) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("adaptive step: identical gradients fall back to the growth branch") {
  VectorXd u0 = VectorXd::Zero(2), u1 = VectorXd::Ones(2);
  VectorXd g = VectorXd::Ones(2);
  double alpha_prev = 0.3, beta_prev = 1.5;
  CHECK(adaptive_step(alpha_prev, beta_prev, u1, u0, g, g) ==
        doctest::Approx(std::sqrt(1.0 + beta_prev) * alpha_prev).epsilon(1e-14));
}

TEST_CASE("projected descent solves a box-constrained quadratic") {
  MatrixXd q = random_spd(5, 1.0);
  Objective obj;
  obj.value = [&](const VectorXd& u) { return 0.5 * u.dot(q * u); };
  obj.value_and_gradient = [&](const VectorXd& u) {
    return std::make_pair(0.5 * u.dot(q * u), VectorXd(q * u));
  };
  InputTrajectory u0 = InputTrajectory::boxed(VectorXd::Constant(5, 2.0), -4.0, 4.0);
  auto result = minimize_projected(obj, u0);
  CHECK((q * result.u_star).norm() < 1e-8);
  CHECK(result.u_star.norm() < 1e-7);
  for (size_t i = 1; i < result.J_history.size(); ++i)
    CHECK(result.J_history[i] <= result.J_history[i - 1]);
}

TEST_CASE("already-stationary starts return immediately") {
  MatrixXd q = MatrixXd::Identity(3, 3);
  Objective obj;
  obj.value = [&](const VectorXd& u) { return 0.5 * u.squaredNorm(); };
  obj.value_and_gradient = [&](const VectorXd& u) {
    return std::make_pair(0.5 * u.squaredNorm(), VectorXd(u));
  };
  InputTrajectory u0 = InputTrajectory::boxed(VectorXd::Zero(3), -1.0, 1.0);
  auto result = minimize_projected(obj, u0);
  CHECK(result.iterations == 0);
  CHECK(result.u_star.norm() == 0.0);
  CHECK(result.reason == StopReason::GradientTol);
}

TEST_CASE("non-finite objective values abort with diagnostics") {
  Objective obj;
  obj.value = [](const VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
  obj.value_and_gradient = [](const VectorXd& u) {
    return std::make_pair(std::numeric_limits<double>::quiet_NaN(), VectorXd(u));
  };
  InputTrajectory u0 = InputTrajectory::boxed(VectorXd::Ones(2), -5.0, 5.0);
  CHECK_THROWS_AS(minimize_projected(obj, u0), DescentDiagnosticsError);
}

TEST_CASE("error gradient vanishes when no information flows") {
  int T = 6;
  LinearDynamics dyn = LinearDynamics::invariant(T, MatrixXd::Identity(2, 2),
                                                 0.1 * MatrixXd::Identity(2, 2));
  NoiseModel noise = NoiseModel::isotropic(2, T, 0.0, 0.0, 1e12);
  WienerModel model(dyn, noise, demo_basis(),
                    ParameterPrior(VectorXd::Constant(11, 5.0), 3.0 * MatrixXd::Identity(11, 11)));
  VectorXd grad = error_gradient(model, demo_input(T));
  CHECK(grad.norm() < 1e-9);
}

TEST_CASE("masked coordinates receive zero gradient") {
  auto model = demo_model(5, 0.001);
  InputTrajectory u = demo_input(5);  // initial-state block masked
  VectorXd grad = error_gradient(model, u);
  CHECK(grad(0) == 0.0);
  CHECK(grad(1) == 0.0);
  CHECK(grad.tail(10).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("adjoint gradient equals the per-coordinate assembly") {
  for (int rep = 0; rep < 3; ++rep) {
    auto model = random_model(2, 2, 6, 3);
    InputTrajectory u = random_input(model.dyn);
    VectorXd fast = error_gradient(model, u);
    VectorXd slow = gradient_per_coordinate(model, u);
    CHECK((fast - slow).norm() / std::max(1.0, slow.norm()) < 1e-12);
  }
}

TEST_CASE("error gradient matches finite differences on the demo setup") {
  auto model = demo_model(10, 0.001);
  InputTrajectory u = demo_input(10);
  VectorXd grad = error_gradient(model, u);
  for (int coord : {2, 3, 9, 14, 21}) {
    double fd = fd_error(model, u, coord, 1e-5);
    CHECK(std::abs(fd - grad(coord)) / std::max(1e-12, std::abs(fd)) < 1e-6);
  }
}

TEST_CASE("error gradient matches finite differences on random instances") {
  for (int rep = 0; rep < 6; ++rep) {
    auto model = random_model(2, 1, 4 + rep, 3);
    InputTrajectory u = random_input(model.dyn);
    VectorXd grad = error_gradient(model, u);
    double max_rel = 0.0;
    for (int coord = 0; coord < u.size(); ++coord) {
      double fd = fd_error(model, u, coord, 1e-5);
      double denom = std::max({1e-8, std::abs(fd), std::abs(grad(coord))});
      max_rel = std::max(max_rel, std::abs(fd - grad(coord)) / denom);
    }
    CHECK(max_rel < 1e-6);
  }
}

TEST_CASE("input optimization strictly reduces the demo error") {
  auto model = demo_model(20, 0.001);
  InputTrajectory u0 = demo_input(20);
  double j0 = mmse_error(model, u0);
  DescentOptions opts;
  opts.max_iters = 150;
  auto result = optimize_inputs(model, u0, opts);
  double j_star = mmse_error(model, InputTrajectory(result.u_star, u0.lower, u0.upper, u0.opt_mask));
  CHECK(j_star < j0);
  CHECK(result.J_history.front() == doctest::Approx(j0));
  CHECK(result.J_history.back() <= j0);

  // The masked initial-state block is untouched, bit for bit.
  CHECK(result.u_star(0) == u0.stacked(0));
  CHECK(result.u_star(1) == u0.stacked(1));
  // All coordinates feasible.
  CHECK((result.u_star.array() >= u0.lower.array()).all());
  CHECK((result.u_star.array() <= u0.upper.array()).all());
}

TEST_CASE("optimizer keeps every accepted value non-increasing") {
  auto model = demo_model(8, 0.01);
  InputTrajectory u0 = demo_input(8);
  DescentOptions opts;
  opts.max_iters = 60;
  auto result = optimize_inputs(model, u0, opts);
  for (size_t i = 1; i < result.J_history.size(); ++i)
    CHECK(result.J_history[i] <= result.J_history[i - 1] + 1e-15);

  // Final loop state is consistent with the history.
  CHECK(result.state.iter == result.iterations);
  CHECK(result.state.alpha > 0.0);
  CHECK(std::isfinite(result.state.beta));
  CHECK(result.state.u_current.size() == u0.size());
  for (double j : result.J_history) CHECK(std::isfinite(j));
}
