#include "wienerid/numerics.hpp"

#include <Eigen/Eigenvalues>

namespace wienerid {

MatrixXd psd_repair(const MatrixXd& m, const std::string& what, double reject_tol) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(what + " must be square, got " + shape_str(m));
  }
  MatrixXd sym = symmetrized(m);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed for " + what);
  }
  VectorXd vals = eig.eigenvalues();
  if (vals.minCoeff() < -reject_tol) {
    throw std::invalid_argument(what + " is not positive semidefinite (min eigenvalue " +
                                std::to_string(vals.minCoeff()) + ")");
  }
  if (vals.minCoeff() >= 0.0) {
    return sym;
  }
  vals = vals.cwiseMax(0.0);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(m));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed while forming matrix square root");
  }
  VectorXd vals = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * vals.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

MatrixXd spd_solve(const MatrixXd& g, const MatrixXd& b, const std::string& what) {
  Eigen::LLT<MatrixXd> llt(symmetrized(g));
  if (llt.info() != Eigen::Success) {
    throw NumericalError(what + " is not positive definite");
  }
  return llt.solve(b);
}

std::string shape_str(const MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace wienerid
