#include "wienerid/input_design.hpp"

#include <cmath>
#include <limits>

namespace wienerid {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd masked(VectorXd g, const InputTrajectory& u) {
  for (int i = 0; i < u.size(); ++i) {
    if (!u.opt_mask(i)) g(i) = 0.0;
  }
  return g;
}

void require_finite(double value, const VectorXd& grad, const VectorXd& iterate, int iteration) {
  bool ok = std::isfinite(value);
  for (Eigen::Index i = 0; ok && i < grad.size(); ++i) ok = std::isfinite(grad(i));
  if (!ok) {
    throw DescentDiagnosticsError("objective or gradient became non-finite at iteration " +
                                      std::to_string(iteration),
                                  iterate, iteration);
  }
}

}  // namespace

VectorXd project_box(const VectorXd& v, const VectorXd& lower, const VectorXd& upper) {
  if (lower.size() != v.size() || upper.size() != v.size()) {
    throw std::invalid_argument("bounds must match the vector length");
  }
  return v.cwiseMax(lower).cwiseMin(upper);
}

double adaptive_step(double alpha_prev, double beta_prev, const VectorXd& u_now,
                     const VectorXd& u_prev, const VectorXd& grad_now, const VectorXd& grad_prev) {
  if (!(alpha_prev > 0.0)) {
    throw std::invalid_argument("previous stepsize must be positive");
  }
  double growth = std::sqrt(1.0 + beta_prev) * alpha_prev;
  double grad_change = (grad_now - grad_prev).norm();
  if (grad_change == 0.0) return growth;
  return std::min(growth, (u_now - u_prev).norm() / (2.0 * grad_change));
}

DescentResult minimize_projected(const Objective& objective, const InputTrajectory& u0,
                                 const DescentOptions& opts) {
  VectorXd u = project_box(u0.stacked, u0.lower, u0.upper);
  auto [J, g_raw] = objective.value_and_gradient(u);
  require_finite(J, g_raw, u, 0);
  VectorXd g = masked(g_raw, u0);

  DescentResult result;
  result.u_star = u;
  result.J_history.push_back(J);
  result.state.u_current = u;
  double best_J = J;

  if (g.norm() < opts.grad_tol) {
    result.reason = StopReason::GradientTol;
    return result;
  }

  double alpha_prev = opts.alpha0;
  double beta_prev = kInf;
  VectorXd u_prev, g_prev;
  // The stepsize rule grows at most geometrically from alpha0, so early
  // iterations probe the landscape at far-too-small scales. The stall window
  // is armed only once the curvature branch has taken over.
  bool curvature_engaged = false;

  for (int k = 1; k <= opts.max_iters; ++k) {
    double alpha;
    if (k == 1) {
      alpha = opts.alpha0;
    } else {
      alpha = adaptive_step(alpha_prev, beta_prev, u, u_prev, g, g_prev);
      if (!std::isfinite(alpha) || alpha <= 0.0) alpha = alpha_prev;
      double growth = std::sqrt(1.0 + beta_prev) * alpha_prev;
      if (std::isfinite(growth) && alpha < growth) curvature_engaged = true;
    }

    // Monotone acceptance: halve uphill proposals, give up after the budget.
    bool accepted = false;
    VectorXd u_cand;
    double J_probe = 0.0;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      u_cand = project_box(u - alpha * g, u0.lower, u0.upper);
      J_probe = objective.value(u_cand);
      require_finite(J_probe, g, u_cand, k);
      if (J_probe <= J) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      result.reason = StopReason::NoDescent;
      break;
    }

    double beta = alpha / alpha_prev;
    u_prev = u;
    g_prev = g;
    auto [J_new, g_new] = objective.value_and_gradient(u_cand);
    require_finite(J_new, g_new, u_cand, k);
    u = u_cand;
    J = J_new;
    g = masked(g_new, u0);
    alpha_prev = alpha;
    beta_prev = beta;

    result.J_history.push_back(J);
    result.iterations = k;
    result.state = OptimizerState{u, alpha_prev, beta_prev, k};
    if (J <= best_J) {
      best_J = J;
      result.u_star = u;
    }

    if (g.norm() < opts.grad_tol) {
      result.reason = StopReason::GradientTol;
      break;
    }
    const auto window = static_cast<size_t>(opts.rel_J_window);
    if (curvature_engaged && result.J_history.size() > window) {
      double before = result.J_history[result.J_history.size() - 1 - window];
      if (before - J < opts.rel_J_tol * std::max(std::abs(before), 1e-300)) {
        result.reason = StopReason::RelJTol;
        break;
      }
    }
    if (k == opts.max_iters) result.reason = StopReason::MaxIters;
  }
  return result;
}

std::vector<VectorXd> accumulate_gradient_weights(const DbsWorkspace& ws,
                                                  const ParameterPrior& prior, const MatrixXd& K,
                                                  const MatrixXd& L) {
  const int N = static_cast<int>(ws.a.rows());
  const int T = static_cast<int>(ws.a.cols()) - 1;
  const int n_x = static_cast<int>(ws.freq.cols());
  if (K.rows() != T + 1 || K.cols() != T + 1 || L.rows() != T + 1 || L.cols() != N + 1) {
    throw std::invalid_argument("gradient weight shapes do not match the workspace horizon");
  }
  std::vector<VectorXd> w(T + 1, VectorXd::Zero(n_x));
  if (N == 0) return w;

  // Mean-statistics part: d phi_bar(n, t) = -2 sin(a) decay * (f_n . s_t).
  MatrixXd d = -2.0 * ws.sin_a.cwiseProduct(ws.decay);
  for (int t = 0; t <= T; ++t) {
    VectorXd coeff = L.row(t).tail(N).transpose().cwiseProduct(d.col(t));
    w[t] += ws.freq.transpose() * coeff;
  }

  // Covariance-statistics part, split into the factor multiplying f_m . s_t
  // and the factor multiplying f_n . s_{t'}.
  MatrixXd weight = prior.second_moment().bottomRightCorner(N, N);
  for (int t = 0; t <= T; ++t) {
    for (int tp = t; tp <= T; ++tp) {
      MatrixXd e1, e2;
      ws.pair_exponentials(t, tp, e1, e2);
      MatrixXd sin_sum = ws.sin_a.col(t) * ws.cos_a.col(tp).transpose() +
                         ws.cos_a.col(t) * ws.sin_a.col(tp).transpose();
      MatrixXd sin_diff = ws.sin_a.col(t) * ws.cos_a.col(tp).transpose() -
                          ws.cos_a.col(t) * ws.sin_a.col(tp).transpose();
      MatrixXd p = -2.0 * (sin_sum.cwiseProduct(e1) + sin_diff.cwiseProduct(e2));
      MatrixXd q = -2.0 * (sin_sum.cwiseProduct(e1) - sin_diff.cwiseProduct(e2));
      double kappa = (t == tp) ? K(t, t) : 2.0 * K(t, tp);
      w[t] += kappa * (ws.freq.transpose() * weight.cwiseProduct(p).rowwise().sum());
      w[tp] += kappa * (ws.freq.transpose() * weight.cwiseProduct(q).colwise().sum().transpose());
    }
  }
  return w;
}

VectorXd gradient_from_weights(const LinearDynamics& dyn, const std::vector<VectorXd>& weights) {
  const int T = dyn.horizon;
  if (static_cast<int>(weights.size()) != T + 1) {
    throw std::invalid_argument("expected " + std::to_string(T + 1) + " weight vectors, got " +
                                std::to_string(weights.size()));
  }
  VectorXd grad = VectorXd::Zero(dyn.stacked_input_dim());
  // Adjoint pass: z_k = w_k + A_k^T z_{k+1}; the u_k block reads B_k^T z_{k+1}.
  VectorXd z = weights[T];
  for (int k = T - 1; k >= 0; --k) {
    grad.segment(dyn.state_dim + k * dyn.input_dim, dyn.input_dim) = dyn.B[k].transpose() * z;
    z = weights[k] + dyn.A[k].transpose() * z;
  }
  grad.head(dyn.state_dim) = z;
  return grad;
}

std::pair<double, VectorXd> error_value_and_gradient(const WienerModel& model,
                                                     const InputTrajectory& u) {
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  DbsWorkspace ws = make_dbs_workspace(model.basis, stats);
  auto design = build_design(model.basis, stats, model.prior);
  auto gain = bayes_gain(design, model.prior, model.noise.sigma_v_vec());

  const int nb = model.prior.count();
  MatrixXd K = gain.Psi_star.transpose() * gain.Psi_star;
  MatrixXd L = 2.0 * gain.Psi_star.transpose() *
               ((gain.Psi_star * design.phi_bar.transpose() - MatrixXd::Identity(nb, nb)) *
                model.prior.Sigma_theta);
  auto w = accumulate_gradient_weights(ws, model.prior, K, L);
  return {gain.J_star, masked(gradient_from_weights(model.dyn, w), u)};
}

VectorXd error_gradient(const WienerModel& model, const InputTrajectory& u) {
  return error_value_and_gradient(model, u).second;
}

DescentResult optimize_inputs(const WienerModel& model, const InputTrajectory& u0,
                              const DescentOptions& opts) {
  auto rebuild = [&](const VectorXd& v) {
    return InputTrajectory(v, u0.lower, u0.upper, u0.opt_mask);
  };
  Objective objective;
  objective.value = [&](const VectorXd& v) { return mmse_error(model, rebuild(v)); };
  objective.value_and_gradient = [&](const VectorXd& v) {
    return error_value_and_gradient(model, rebuild(v));
  };
  return minimize_projected(objective, u0, opts);
}

}  // namespace wienerid
