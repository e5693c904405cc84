#include "wienerid/multi_traj.hpp"

#include <Eigen/Eigenvalues>

namespace wienerid {

namespace {

void check_plan(const MultiTrajectoryPlan& plan, const FourierBasis& basis,
                const ParameterPrior& prior) {
  if (plan.batches.empty()) {
    throw std::invalid_argument("plan needs at least one batch");
  }
  if (prior.count() != basis.count()) {
    throw std::invalid_argument("prior has " + std::to_string(prior.count()) +
                                " coefficients but the basis has " + std::to_string(basis.count()));
  }
  for (size_t i = 0; i < plan.batches.size(); ++i) {
    if (plan.batches[i].dyn.state_dim != basis.dim()) {
      throw std::invalid_argument("batch " + std::to_string(i) + " has state dimension " +
                                  std::to_string(plan.batches[i].dyn.state_dim) +
                                  " but the shared basis expects " + std::to_string(basis.dim()));
    }
  }
}

}  // namespace

int MultiTrajectoryPlan::total_measurements() const {
  int total = 0;
  for (const auto& b : batches) total += b.dyn.horizon + 1;
  return total;
}

MultiDesign assemble_multi(const MultiTrajectoryPlan& plan, const FourierBasis& basis,
                           const ParameterPrior& prior) {
  check_plan(plan, basis, prior);
  const int total = plan.total_measurements();
  MultiDesign out;
  out.design.phi_bar = MatrixXd::Zero(basis.count(), total);
  out.design.M = MatrixXd::Zero(total, total);
  out.sigma_v_sq = VectorXd::Zero(total);

  int offset = 0;
  for (const auto& batch : plan.batches) {
    const int len = batch.dyn.horizon + 1;
    out.offsets.push_back(offset);
    auto stats = propagate_state_stats(batch.dyn, batch.noise, batch.u);
    auto design = build_design(basis, stats, prior);
    out.design.phi_bar.middleCols(offset, len) = design.phi_bar;
    out.design.M.block(offset, offset, len, len) = design.M;
    out.sigma_v_sq.segment(offset, len) = batch.noise.sigma_v_vec();
    offset += len;
  }
  return out;
}

InformationMatrix information_matrix(const MultiTrajectoryPlan& plan, const FourierBasis& basis,
                                     const ParameterPrior& prior) {
  check_plan(plan, basis, prior);
  const int nb = basis.count();
  MatrixXd weight = prior.second_moment();
  InformationMatrix out;
  out.matrix = MatrixXd::Zero(nb, nb);
  for (const auto& batch : plan.batches) {
    auto stats = propagate_state_stats(batch.dyn, batch.noise, batch.u);
    VectorXd mu_phi = fourier_mean(basis, stats, 0);
    double m00 = 0.0;
    for (int m = 1; m < nb; ++m)
      for (int n = 1; n < nb; ++n)
        m00 += fourier_cross_cov(basis, stats, 0, 0, m, n) * weight(m, n);
    out.matrix += mu_phi * mu_phi.transpose() / (m00 + batch.noise.sigma_v_sq[0]);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(out.matrix));
  out.lambda_min = eig.eigenvalues().minCoeff();
  return out;
}

std::vector<double> inconsistency_probe(const WienerModel& model, const InputTrajectory& u,
                                        const std::vector<int>& horizons) {
  auto design = design_for(model, u);
  VectorXd sv = model.noise.sigma_v_vec();
  std::vector<double> values;
  values.reserve(horizons.size());
  for (int t : horizons) {
    values.push_back(bayes_error_prefix(design, model.prior, sv, t));
  }
  return values;
}

std::pair<double, std::vector<VectorXd>> multi_error_value_and_gradient(
    const MultiTrajectoryPlan& plan, const FourierBasis& basis, const ParameterPrior& prior) {
  check_plan(plan, basis, prior);
  const int nb = basis.count();

  // Per-batch statistics and designs, then one stacked gain.
  std::vector<StateStatistics> stats;
  stats.reserve(plan.batches.size());
  MultiDesign multi;
  const int total = plan.total_measurements();
  multi.design.phi_bar = MatrixXd::Zero(nb, total);
  multi.design.M = MatrixXd::Zero(total, total);
  multi.sigma_v_sq = VectorXd::Zero(total);
  int offset = 0;
  for (const auto& batch : plan.batches) {
    const int len = batch.dyn.horizon + 1;
    multi.offsets.push_back(offset);
    stats.push_back(propagate_state_stats(batch.dyn, batch.noise, batch.u));
    auto design = build_design(basis, stats.back(), prior);
    multi.design.phi_bar.middleCols(offset, len) = design.phi_bar;
    multi.design.M.block(offset, offset, len, len) = design.M;
    multi.sigma_v_sq.segment(offset, len) = batch.noise.sigma_v_vec();
    offset += len;
  }
  auto gain = bayes_gain(multi.design, prior, multi.sigma_v_sq);

  MatrixXd K = gain.Psi_star.transpose() * gain.Psi_star;
  MatrixXd L = 2.0 * gain.Psi_star.transpose() *
               ((gain.Psi_star * multi.design.phi_bar.transpose() -
                 MatrixXd::Identity(nb, nb)) *
                prior.Sigma_theta);

  // The stacked statistics only couple batches through K's off-diagonal
  // blocks, and those multiply gradients of cross-batch M entries, which are
  // identically zero. Each batch therefore sees its own diagonal slice.
  std::vector<VectorXd> grads;
  grads.reserve(plan.batches.size());
  for (size_t b = 0; b < plan.batches.size(); ++b) {
    const auto& batch = plan.batches[b];
    const int len = batch.dyn.horizon + 1;
    const int o = multi.offsets[b];
    DbsWorkspace ws = make_dbs_workspace(basis, stats[b]);
    auto w = accumulate_gradient_weights(ws, prior, K.block(o, o, len, len),
                                         L.middleRows(o, len));
    VectorXd grad = gradient_from_weights(batch.dyn, w);
    for (int i = 0; i < batch.u.size(); ++i) {
      if (!batch.u.opt_mask(i)) grad(i) = 0.0;
    }
    grads.push_back(std::move(grad));
  }
  return {gain.J_star, std::move(grads)};
}

MultiDescentResult optimize_inputs_multi(const MultiTrajectoryPlan& plan,
                                         const FourierBasis& basis, const ParameterPrior& prior,
                                         const DescentOptions& opts) {
  check_plan(plan, basis, prior);
  // Concatenate every batch input into one box-constrained vector.
  int total_dim = 0;
  for (const auto& b : plan.batches) total_dim += b.u.size();
  VectorXd stacked(total_dim), lower(total_dim), upper(total_dim);
  Eigen::Array<bool, Eigen::Dynamic, 1> mask(total_dim);
  int pos = 0;
  for (const auto& b : plan.batches) {
    const int len = b.u.size();
    stacked.segment(pos, len) = b.u.stacked;
    lower.segment(pos, len) = b.u.lower;
    upper.segment(pos, len) = b.u.upper;
    mask.segment(pos, len) = b.u.opt_mask;
    pos += len;
  }

  auto split = [&](const VectorXd& v) {
    MultiTrajectoryPlan current = plan;
    int at = 0;
    for (auto& b : current.batches) {
      const int len = b.u.size();
      b.u = InputTrajectory(v.segment(at, len), b.u.lower, b.u.upper, b.u.opt_mask);
      at += len;
    }
    return current;
  };
  auto joined = [&](const std::vector<VectorXd>& parts) {
    VectorXd v(total_dim);
    int at = 0;
    for (const auto& p : parts) {
      v.segment(at, p.size()) = p;
      at += static_cast<int>(p.size());
    }
    return v;
  };

  Objective objective;
  objective.value = [&](const VectorXd& v) {
    auto multi = assemble_multi(split(v), basis, prior);
    return bayes_gain(multi.design, prior, multi.sigma_v_sq).J_star;
  };
  objective.value_and_gradient = [&](const VectorXd& v) {
    auto [j, grads] = multi_error_value_and_gradient(split(v), basis, prior);
    return std::make_pair(j, joined(grads));
  };

  auto result = minimize_projected(objective, InputTrajectory(stacked, lower, upper, mask), opts);

  MultiDescentResult out;
  out.J_history = std::move(result.J_history);
  out.iterations = result.iterations;
  out.reason = result.reason;
  int at = 0;
  for (const auto& b : plan.batches) {
    out.u_star.push_back(result.u_star.segment(at, b.u.size()));
    at += b.u.size();
  }
  return out;
}

}  // namespace wienerid
