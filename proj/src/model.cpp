#include "wienerid/model.hpp"

#include <utility>

namespace wienerid {

WienerModel::WienerModel(LinearDynamics d, NoiseModel n, FourierBasis b, ParameterPrior p)
    : dyn(std::move(d)), noise(std::move(n)), basis(std::move(b)), prior(std::move(p)) {
  if (noise.horizon() != dyn.horizon) {
    throw std::invalid_argument("noise horizon " + std::to_string(noise.horizon()) +
                                " does not match dynamics horizon " + std::to_string(dyn.horizon));
  }
  if (basis.dim() != dyn.state_dim) {
    throw std::invalid_argument("basis frequencies have dimension " + std::to_string(basis.dim()) +
                                " but the state dimension is " + std::to_string(dyn.state_dim));
  }
  if (prior.count() != basis.count()) {
    throw std::invalid_argument("prior has " + std::to_string(prior.count()) +
                                " coefficients but the basis has " + std::to_string(basis.count()));
  }
}

DesignStatistics design_for(const WienerModel& model, const InputTrajectory& u) {
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  return build_design(model.basis, stats, model.prior);
}

double mmse_error(const WienerModel& model, const InputTrajectory& u) {
  return bayes_gain(design_for(model, u), model.prior, model.noise.sigma_v_vec()).J_star;
}

}  // namespace wienerid
