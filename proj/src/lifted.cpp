#include "wienerid/lifted.hpp"

#include <utility>

namespace wienerid {

namespace {

void check_square(const MatrixXd& m, int n, const std::string& name) {
  if (m.rows() != n || m.cols() != n) {
    throw std::invalid_argument(name + " must be " + std::to_string(n) + "x" + std::to_string(n) +
                                ", got " + shape_str(m));
  }
}

}  // namespace

LinearDynamics::LinearDynamics(int n_x, int n_u, int T, std::vector<MatrixXd> a,
                               std::vector<MatrixXd> b)
    : state_dim(n_x), input_dim(n_u), horizon(T), A(std::move(a)), B(std::move(b)) {
  if (n_x <= 0 || n_u <= 0 || T < 0) {
    throw std::invalid_argument("dynamics dimensions must satisfy n_x > 0, n_u > 0, T >= 0");
  }
  if (static_cast<int>(A.size()) != T || static_cast<int>(B.size()) != T) {
    throw std::invalid_argument("expected " + std::to_string(T) + " A and B matrices, got " +
                                std::to_string(A.size()) + " and " + std::to_string(B.size()));
  }
  for (int t = 0; t < T; ++t) {
    check_square(A[t], n_x, "A[" + std::to_string(t) + "]");
    if (B[t].rows() != n_x || B[t].cols() != n_u) {
      throw std::invalid_argument("B[" + std::to_string(t) + "] must be " + std::to_string(n_x) +
                                  "x" + std::to_string(n_u) + ", got " + shape_str(B[t]));
    }
  }
  time_invariant = true;
  for (int t = 1; t < T && time_invariant; ++t) {
    time_invariant = (A[t] - A[0]).norm() == 0.0 && (B[t] - B[0]).norm() == 0.0;
  }
}

LinearDynamics LinearDynamics::invariant(int T, const MatrixXd& a, const MatrixXd& b) {
  std::vector<MatrixXd> as(T, a), bs(T, b);
  LinearDynamics dyn(static_cast<int>(a.rows()), static_cast<int>(b.cols()), T, std::move(as),
                     std::move(bs));
  dyn.time_invariant = true;
  return dyn;
}

NoiseModel::NoiseModel(MatrixXd sigma_x0, std::vector<MatrixXd> sigma_w,
                       std::vector<double> sigma_v, NoiseKind k)
    : Sigma_x0(std::move(sigma_x0)), Sigma_w(std::move(sigma_w)), sigma_v_sq(std::move(sigma_v)),
      kind(k) {
  const int n_x = static_cast<int>(Sigma_x0.rows());
  Sigma_x0 = psd_repair(Sigma_x0, "Sigma_x0", tol::kPsdRepair);
  for (size_t t = 0; t < Sigma_w.size(); ++t) {
    check_square(Sigma_w[t], n_x, "Sigma_w[" + std::to_string(t + 1) + "]");
    Sigma_w[t] = psd_repair(Sigma_w[t], "Sigma_w[" + std::to_string(t + 1) + "]", tol::kPsdRepair);
  }
  if (sigma_v_sq.size() != Sigma_w.size() + 1) {
    throw std::invalid_argument("expected " + std::to_string(Sigma_w.size() + 1) +
                                " measurement variances, got " + std::to_string(sigma_v_sq.size()));
  }
  for (size_t t = 0; t < sigma_v_sq.size(); ++t) {
    if (!(sigma_v_sq[t] > 0.0)) {
      throw std::invalid_argument("sigma_v_sq[" + std::to_string(t) + "] must be positive");
    }
  }
}

NoiseModel NoiseModel::isotropic(int n_x, int T, double sx0_var, double sw_var, double sv_var) {
  return NoiseModel(sx0_var * MatrixXd::Identity(n_x, n_x),
                    std::vector<MatrixXd>(T, sw_var * MatrixXd::Identity(n_x, n_x)),
                    std::vector<double>(T + 1, sv_var));
}

VectorXd NoiseModel::sigma_v_vec() const {
  return Eigen::Map<const VectorXd>(sigma_v_sq.data(), static_cast<Eigen::Index>(sigma_v_sq.size()));
}

InputTrajectory::InputTrajectory(VectorXd values, VectorXd lo, VectorXd hi,
                                 Eigen::Array<bool, Eigen::Dynamic, 1> mask)
    : stacked(std::move(values)), lower(std::move(lo)), upper(std::move(hi)),
      opt_mask(std::move(mask)) {
  const auto n = stacked.size();
  if (lower.size() != n || upper.size() != n || opt_mask.size() != n) {
    throw std::invalid_argument("input trajectory bounds/mask must match stacked length " +
                                std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (stacked(i) < lower(i) || stacked(i) > upper(i)) {
      throw std::invalid_argument("stacked input coordinate " + std::to_string(i) +
                                  " violates its box bound");
    }
  }
}

InputTrajectory InputTrajectory::free(VectorXd values) {
  const auto n = values.size();
  const double inf = std::numeric_limits<double>::infinity();
  return InputTrajectory(std::move(values), VectorXd::Constant(n, -inf), VectorXd::Constant(n, inf),
                         Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true));
}

InputTrajectory InputTrajectory::boxed(VectorXd values, double lo, double hi) {
  const auto n = values.size();
  return InputTrajectory(std::move(values), VectorXd::Constant(n, lo), VectorXd::Constant(n, hi),
                         Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true));
}

StateStatistics::StateStatistics(int n_x, int T) : n_x_(n_x), T_(T) {
  means_.resize(T + 1, VectorXd::Zero(n_x));
  covs_.resize(T + 1, MatrixXd::Zero(n_x, n_x));
  cross_.resize(static_cast<size_t>(T + 1) * (T + 2) / 2, MatrixXd::Zero(n_x, n_x));
}

int StateStatistics::upper_index(int t, int t_prime) const {
  // Row-major offsets over the upper triangle with row t spanning t..T.
  return t * (T_ + 1) - t * (t - 1) / 2 + (t_prime - t);
}

MatrixXd StateStatistics::cross(int t, int t_prime) const {
  if (t <= t_prime) return cross_[upper_index(t, t_prime)];
  return cross_[upper_index(t_prime, t)].transpose();
}

const MatrixXd& StateStatistics::cross_upper(int t, int t_prime) const {
  return cross_[upper_index(t, t_prime)];
}

const VectorXd& StateStatistics::sensitivity(int coord, int t) const {
  if (sens_.empty()) {
    throw std::logic_error("state statistics were propagated without sensitivities; "
                           "request them via propagate_state_stats(..., true)");
  }
  return sens_.at(coord).at(t);
}

StateStatistics propagate_state_stats(const LinearDynamics& dyn, const NoiseModel& noise,
                                      const InputTrajectory& u, bool with_sensitivities) {
  const int n_x = dyn.state_dim, n_u = dyn.input_dim, T = dyn.horizon;
  if (noise.horizon() != T) {
    throw std::invalid_argument("noise horizon " + std::to_string(noise.horizon()) +
                                " does not match dynamics horizon " + std::to_string(T));
  }
  if (static_cast<int>(noise.Sigma_x0.rows()) != n_x) {
    throw std::invalid_argument("Sigma_x0 must be " + std::to_string(n_x) + "x" +
                                std::to_string(n_x) + ", got " + shape_str(noise.Sigma_x0));
  }
  if (u.size() != dyn.stacked_input_dim()) {
    throw std::invalid_argument("stacked input length " + std::to_string(u.size()) +
                                " does not match n_x + T n_u = " +
                                std::to_string(dyn.stacked_input_dim()));
  }

  StateStatistics stats(n_x, T);
  stats.means_[0] = u.initial_mean(n_x);
  stats.covs_[0] = noise.Sigma_x0;
  for (int t = 0; t < T; ++t) {
    stats.means_[t + 1] = dyn.A[t] * stats.means_[t] + dyn.B[t] * u.input_at(n_x, n_u, t);
    stats.covs_[t + 1] =
        symmetrized(dyn.A[t] * stats.covs_[t] * dyn.A[t].transpose() + noise.Sigma_w[t]);
  }
  // Cov(x_t, x_{t'}) = P_t (A_{t'-1} ... A_t)^T for t' > t, built one step at a time.
  for (int t = 0; t <= T; ++t) {
    stats.cross_[stats.upper_index(t, t)] = stats.covs_[t];
    for (int tp = t + 1; tp <= T; ++tp) {
      stats.cross_[stats.upper_index(t, tp)] =
          stats.cross_[stats.upper_index(t, tp - 1)] * dyn.A[tp - 1].transpose();
    }
  }
  if (with_sensitivities) {
    stats.sens_.resize(dyn.stacked_input_dim());
    for (int coord = 0; coord < dyn.stacked_input_dim(); ++coord) {
      stats.sens_[coord] = input_sensitivity(dyn, coord);
    }
  }
  return stats;
}

LiftedBlocks build_lifted_blocks(const LinearDynamics& dyn, int dim_cap) {
  const int n_x = dyn.state_dim, n_u = dyn.input_dim, T = dyn.horizon;
  const int dim = n_x * (T + 1);
  if (dim > dim_cap) {
    throw std::invalid_argument("refusing to materialize " + std::to_string(dim) +
                                "-dimensional lifted blocks (cap " + std::to_string(dim_cap) +
                                "); use the recursive statistics instead");
  }
  LiftedBlocks blocks;
  blocks.A = MatrixXd::Zero(dim, dim);
  for (int t = 0; t <= T; ++t) {
    blocks.A.block(t * n_x, t * n_x, n_x, n_x) = MatrixXd::Identity(n_x, n_x);
    // Fill row t right to left: block (t, k) = A_{t-1} ... A_k.
    for (int k = t - 1; k >= 0; --k) {
      blocks.A.block(t * n_x, k * n_x, n_x, n_x) =
          blocks.A.block(t * n_x, (k + 1) * n_x, n_x, n_x) * dyn.A[k];
    }
  }
  blocks.B = MatrixXd::Zero(dim, n_x + T * n_u);
  blocks.B.block(0, 0, n_x, n_x) = MatrixXd::Identity(n_x, n_x);
  for (int t = 0; t < T; ++t) {
    blocks.B.block((t + 1) * n_x, n_x + t * n_u, n_x, n_u) = dyn.B[t];
  }
  return blocks;
}

std::vector<VectorXd> input_sensitivity(const LinearDynamics& dyn, int coord) {
  const int n_x = dyn.state_dim, n_u = dyn.input_dim, T = dyn.horizon;
  if (coord < 0 || coord >= dyn.stacked_input_dim()) {
    throw std::invalid_argument("input coordinate " + std::to_string(coord) + " out of range [0, " +
                                std::to_string(dyn.stacked_input_dim()) + ")");
  }
  std::vector<VectorXd> s(T + 1, VectorXd::Zero(n_x));
  int entry_time;
  if (coord < n_x) {
    entry_time = 0;
    s[0] = VectorXd::Unit(n_x, coord);
  } else {
    const int k = (coord - n_x) / n_u;
    const int j = (coord - n_x) % n_u;
    entry_time = k + 1;
    s[k + 1] = dyn.B[k].col(j);
  }
  for (int t = entry_time; t < T; ++t) s[t + 1] = dyn.A[t] * s[t];
  return s;
}

}  // namespace wienerid
