#pragma once

// Shared fixtures for the test suites: random problem instances, the 2-D
// constant-velocity demo setup used by the benchmark-style checks, and the
// complex-arithmetic feature-statistics oracle.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "wienerid/model.hpp"

namespace testutil {

using wienerid::FourierBasis;
using wienerid::InputTrajectory;
using wienerid::LinearDynamics;
using wienerid::MatrixXd;
using wienerid::NoiseModel;
using wienerid::ParameterPrior;
using wienerid::VectorXd;
using wienerid::WienerModel;

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(987654321ull);
  return gen;
}

inline MatrixXd random_matrix(int r, int c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * n(rng());
  return m;
}

inline MatrixXd random_spd(int n, double scale = 1.0) {
  MatrixXd a = random_matrix(n, n);
  return scale * (a * a.transpose() + 0.1 * MatrixXd::Identity(n, n));
}

inline FourierBasis random_basis(int n_x, int N, double scale = 1.1) {
  std::vector<VectorXd> f{VectorXd::Zero(n_x)};
  for (int n = 0; n < N; ++n) f.push_back(random_matrix(n_x, 1, scale));
  return FourierBasis(f);
}

inline WienerModel random_model(int n_x, int n_u, int T, int N, double noise_scale = 0.2,
                                double sigma_v = 0.01) {
  std::vector<MatrixXd> as, bs, sw;
  for (int t = 0; t < T; ++t) {
    as.push_back(random_matrix(n_x, n_x, 0.45));
    bs.push_back(random_matrix(n_x, n_u, 0.8));
    sw.push_back(random_spd(n_x, noise_scale));
  }
  LinearDynamics dyn(n_x, n_u, T, as, bs);
  NoiseModel noise(random_spd(n_x, noise_scale), sw, std::vector<double>(T + 1, sigma_v));
  ParameterPrior prior(random_matrix(N + 1, 1, 2.0), random_spd(N + 1));
  return WienerModel(dyn, noise, random_basis(n_x, N), prior);
}

inline InputTrajectory random_input(const LinearDynamics& dyn, double scale = 1.0) {
  return InputTrajectory::free(random_matrix(dyn.stacked_input_dim(), 1, scale));
}

// The 2-D constant-velocity kinematic demo: A = I, B = dt I with dt = 0.1,
// multi-rate sinusoids sampled at physical time t dt and bounded by 200,
// eleven fixed frequencies, uniform(2, 8) coefficient prior (mean 5,
// variance 3 per component).
inline VectorXd demo_sinusoid_stacked(int T) {
  VectorXd stacked(2 + 2 * T);
  stacked.head(2) << 3.2, 2.8;
  const double rates[] = {3, 5, 10, 20, 100};
  const double dt = 0.1;
  for (int t = 0; t < T; ++t) {
    double cx = 0.0, sx = 0.0;
    for (double r : rates) {
      cx += std::cos(r * dt * t);
      sx += std::sin(r * dt * t);
    }
    stacked(2 + 2 * t) = 4.5 * cx;
    stacked(2 + 2 * t + 1) = 4.5 * sx;
  }
  return stacked;
}

inline FourierBasis demo_basis() {
  constexpr double pi = std::numbers::pi;
  std::vector<VectorXd> freqs;
  VectorXd f(2);
  f << 0, 0;
  freqs.push_back(f);
  for (int n = 1; n <= 3; ++n) {
    f << n * 2 * pi / 10, 0;
    freqs.push_back(f);
  }
  for (int n = 4; n <= 10; ++n) {
    f << (n - 7) * 2 * pi / 10, 2 * pi / 6;
    freqs.push_back(f);
  }
  return FourierBasis(freqs);
}

inline WienerModel demo_model(int T, double sw_var, double sv_var = 0.01) {
  LinearDynamics dyn =
      LinearDynamics::invariant(T, MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2));
  NoiseModel noise = NoiseModel::isotropic(2, T, sw_var, sw_var, sv_var);
  ParameterPrior prior(VectorXd::Constant(11, 5.0), 3.0 * MatrixXd::Identity(11, 11));
  return WienerModel(dyn, noise, demo_basis(), prior);
}

inline InputTrajectory demo_input(int T, bool optimize_initial_state = false) {
  VectorXd stacked = demo_sinusoid_stacked(T);
  InputTrajectory u = InputTrajectory::boxed(stacked, -200.0, 200.0);
  if (!optimize_initial_state) {
    u.opt_mask(0) = false;
    u.opt_mask(1) = false;
  }
  return u;
}

// Complex four-term evaluation of the feature statistics under Gaussian
// noise, independent of the library's real cosine forms.
inline std::complex<double> complex_feature_mean(const VectorXd& f, const VectorXd& mean,
                                                 const MatrixXd& cov) {
  std::complex<double> out(0, 0);
  const std::complex<double> j(0, 1);
  for (int l : {-1, 1}) {
    out += std::exp(j * (l * f.dot(mean))) * std::exp(-0.5 * f.dot(cov * f));
  }
  return out;
}

inline std::complex<double> complex_feature_cross(const VectorXd& fm, const VectorXd& fn,
                                                  const VectorXd& mt, const VectorXd& mtp,
                                                  const MatrixXd& pt, const MatrixXd& ptp,
                                                  const MatrixXd& ctt) {
  std::complex<double> out(0, 0);
  const std::complex<double> j(0, 1);
  double qm = fm.dot(pt * fm), qn = fn.dot(ptp * fn), c = fm.dot(ctt * fn);
  for (int l : {-1, 1}) {
    for (int lp : {-1, 1}) {
      double arg = l * fm.dot(mt) + lp * fn.dot(mtp);
      double joint = qm + qn + 2.0 * l * lp * c;
      out += std::exp(j * arg) * (std::exp(-0.5 * joint) - std::exp(-0.5 * (qm + qn)));
    }
  }
  return out;
}

}  // namespace testutil
