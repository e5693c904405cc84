#pragma once

// Numerical tolerance and default termination constants, kept in one place
// so tests and library agree on exact values.
namespace wienerid::tol {

// Covariance inputs are symmetrized; eigenvalues below this are rejected,
// eigenvalues in [-kPsdRepair, 0] are clipped to zero.
inline constexpr double kPsdRepair = 1e-10;

// Eigenvalue clip used when forming matrix square roots.
inline constexpr double kSqrtClip = 1e-12;

// Two algebraic routes to the same quantity must agree this tightly.
inline constexpr double kEquivalence = 1e-12;

// Relative agreement required between analytic gradients and central
// finite differences.
inline constexpr double kGradCheck = 1e-7;

// Relative agreement between the direct and information-form error.
inline constexpr double kErrorFormAgreement = 1e-8;

// Explicit lifted matrices refuse to materialize above this dimension.
inline constexpr int kLiftedDimCap = 4096;

// Projected descent defaults.
inline constexpr int kDescentMaxIters = 500;
inline constexpr double kDescentGradTol = 1e-8;
inline constexpr double kDescentRelJTol = 1e-10;
inline constexpr int kDescentRelJWindow = 10;
inline constexpr double kDescentAlpha0 = 1e-10;
inline constexpr int kDescentMaxBacktracks = 20;

}  // namespace wienerid::tol
