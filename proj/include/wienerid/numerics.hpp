#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace wienerid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Thrown when a factorization or other numeric step fails in a way that
// indicates an invalid problem instance rather than a usage error.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

// Symmetrizes `m` and clips tiny negative eigenvalues to zero. Throws
// std::invalid_argument naming `what` if an eigenvalue falls below -reject_tol.
MatrixXd psd_repair(const MatrixXd& m, const std::string& what, double reject_tol);

// Symmetric PSD square root with small negative eigenvalues clipped.
MatrixXd psd_sqrt(const MatrixXd& m);

// Cholesky solve helper: returns G^{-1} B for symmetric positive definite G,
// throwing NumericalError naming `what` if the factorization fails.
MatrixXd spd_solve(const MatrixXd& g, const MatrixXd& b, const std::string& what);

std::string shape_str(const MatrixXd& m);

}  // namespace wienerid
