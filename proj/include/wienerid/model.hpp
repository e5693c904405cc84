#pragma once

#include "wienerid/estimators.hpp"

namespace wienerid {

/// One complete identification problem: known dynamics and noise, the
/// feature set spanning the unknown output function, and the coefficient prior.
struct WienerModel {
  LinearDynamics dyn;
  NoiseModel noise;
  FourierBasis basis;
  ParameterPrior prior;

  WienerModel(LinearDynamics d, NoiseModel n, FourierBasis b, ParameterPrior p);

  int horizon() const { return dyn.horizon; }
};

/// Design statistics for the model driven by the given input.
DesignStatistics design_for(const WienerModel& model, const InputTrajectory& u);

/// Analytic estimation error as a function of the input trajectory.
double mmse_error(const WienerModel& model, const InputTrajectory& u);

}  // namespace wienerid
