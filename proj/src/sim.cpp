#include "wienerid/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "wienerid/estimators.hpp"

namespace wienerid {

namespace {

inline std::uint64_t splitmix_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t master, std::uint64_t replicate, Stream stream) {
  // Fold the triple into one seed, then expand to the generator state.
  std::uint64_t s = master;
  std::uint64_t rep_key = replicate;
  s ^= splitmix_next(rep_key);
  std::uint64_t stream_key = static_cast<std::uint64_t>(stream) * 0xBF58476D1CE4E5B9ull;
  s ^= splitmix_next(stream_key);
  for (auto& word : state_) word = splitmix_next(s);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on (0, 1] to keep the logarithm finite.
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

VectorXd Rng::normal_vector(int n) {
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = normal();
  return out;
}

PriorSpec PriorSpec::uniform(int count, double low, double high) {
  if (count <= 0 || !(low < high)) {
    throw std::invalid_argument("uniform prior needs count > 0 and low < high");
  }
  PriorSpec spec;
  spec.kind = Kind::Uniform;
  spec.count = count;
  spec.low = low;
  spec.high = high;
  return spec;
}

PriorSpec PriorSpec::gaussian(VectorXd mean, MatrixXd cov) {
  PriorSpec spec;
  spec.kind = Kind::Gaussian;
  spec.count = static_cast<int>(mean.size());
  spec.mean = std::move(mean);
  spec.cov = psd_repair(cov, "prior covariance", tol::kPsdRepair);
  return spec;
}

ParameterPrior PriorSpec::implied_prior() const {
  if (kind == Kind::Uniform) {
    double mean = 0.5 * (low + high);
    double var = (high - low) * (high - low) / 12.0;
    return ParameterPrior(VectorXd::Constant(count, mean), var * MatrixXd::Identity(count, count));
  }
  return ParameterPrior(mean, cov);
}

VectorXd sample_prior_theta(const PriorSpec& spec, Rng& rng) {
  if (spec.kind == PriorSpec::Kind::Uniform) {
    VectorXd theta(spec.count);
    for (int i = 0; i < spec.count; ++i) theta(i) = rng.uniform(spec.low, spec.high);
    return theta;
  }
  return spec.mean + psd_sqrt(spec.cov) * rng.normal_vector(spec.count);
}

SimulatedTrajectory simulate_with_noise(const WienerModel& model, const InputTrajectory& u,
                                        const VectorXd& theta, const MatrixXd& z_process,
                                        const VectorXd& z_measurement) {
  const int n_x = model.dyn.state_dim, n_u = model.dyn.input_dim, T = model.dyn.horizon;
  if (u.size() != model.dyn.stacked_input_dim()) {
    throw std::invalid_argument("stacked input length " + std::to_string(u.size()) +
                                " does not match n_x + T n_u = " +
                                std::to_string(model.dyn.stacked_input_dim()));
  }
  if (theta.size() != model.basis.count()) {
    throw std::invalid_argument("coefficient vector has length " + std::to_string(theta.size()) +
                                ", expected " + std::to_string(model.basis.count()));
  }
  if (z_process.rows() != n_x || z_process.cols() != T + 1 || z_measurement.size() != T + 1) {
    throw std::invalid_argument("noise draw shapes do not match the horizon");
  }

  MatrixXd sqrt_x0 = psd_sqrt(model.noise.Sigma_x0);
  SimulatedTrajectory out;
  out.states.resize(n_x, T + 1);
  out.y.resize(T + 1);
  VectorXd x = u.initial_mean(n_x) + sqrt_x0 * z_process.col(0);
  for (int t = 0; t <= T; ++t) {
    out.states.col(t) = x;
    out.y(t) = model.basis.eval(x).dot(theta) +
               std::sqrt(model.noise.sigma_v_sq[t]) * z_measurement(t);
    if (t < T) {
      x = model.dyn.A[t] * x + model.dyn.B[t] * u.input_at(n_x, n_u, t) +
          psd_sqrt(model.noise.Sigma_w[t]) * z_process.col(t + 1);
    }
  }
  return out;
}

SimulatedTrajectory simulate_trajectory(const WienerModel& model, const InputTrajectory& u,
                                        const VectorXd& theta, const SimSeed& seed) {
  const int n_x = model.dyn.state_dim, T = model.dyn.horizon;
  Rng process = seed.rng(Stream::Process);
  Rng measurement = seed.rng(Stream::Measurement);
  MatrixXd z_process(n_x, T + 1);
  for (int t = 0; t <= T; ++t) z_process.col(t) = process.normal_vector(n_x);
  VectorXd z_measurement = measurement.normal_vector(T + 1);
  return simulate_with_noise(model, u, theta, z_process, z_measurement);
}

std::string MethodSpec::label() const {
  switch (kind) {
    case Kind::DLS: return "dls";
    case Kind::MLS: return "mls";
    case Kind::BMS: return "bms";
    case Kind::BAL: return "bal";
  }
  return "unknown";
}

bool ReplicateResult::all_ok() const {
  return std::all_of(methods.begin(), methods.end(), [](const MethodResult& m) { return m.ok; });
}

namespace {

// Everything derivable once per method before the replicate loop: the input
// actually driving the system, its trajectory statistics, and the affine
// gain to apply.
struct PreparedMethod {
  MethodSpec spec;
  InputTrajectory input;
  MatrixXd Psi;   // affine gain
  VectorXd psi;   // affine offset (zero for ridge modes)
};

PreparedMethod prepare_method(const WienerModel& model, const InputTrajectory& u_base,
                              const ParameterPrior& prior, const MethodSpec& spec) {
  PreparedMethod prepared{spec, spec.input ? *spec.input : u_base, MatrixXd(), VectorXd()};
  auto stats = propagate_state_stats(model.dyn, model.noise, prepared.input);
  switch (spec.kind) {
    case MethodSpec::Kind::DLS:
    case MethodSpec::Kind::MLS: {
      RlsMode mode = spec.kind == MethodSpec::Kind::DLS ? RlsMode::DLS : RlsMode::MLS;
      prepared.Psi = rls_gain(mode, spec.lambda, model.basis, stats);
      prepared.psi = VectorXd::Zero(model.basis.count());
      break;
    }
    case MethodSpec::Kind::BMS:
    case MethodSpec::Kind::BAL: {
      auto design = build_design(model.basis, stats, prior);
      auto gain = bayes_gain(design, prior, model.noise.sigma_v_vec());
      prepared.Psi = gain.Psi_star;
      prepared.psi = gain.psi_star;
      break;
    }
  }
  return prepared;
}

}  // namespace

std::vector<ReplicateResult> monte_carlo_benchmark(const WienerModel& model,
                                                   const InputTrajectory& u_base,
                                                   const PriorSpec& prior_spec,
                                                   const std::vector<MethodSpec>& methods,
                                                   const MonteCarloConfig& cfg) {
  if (cfg.n_reps <= 0) {
    throw std::invalid_argument("replicate count must be positive");
  }
  if (methods.empty()) {
    throw std::invalid_argument("at least one method must be configured");
  }
  ParameterPrior prior = prior_spec.implied_prior();
  if (prior.count() != model.basis.count()) {
    throw std::invalid_argument("prior spec has " + std::to_string(prior.count()) +
                                " coefficients but the basis has " +
                                std::to_string(model.basis.count()));
  }

  std::vector<PreparedMethod> prepared;
  prepared.reserve(methods.size());
  for (const auto& m : methods) prepared.push_back(prepare_method(model, u_base, prior, m));

  // Methods often share an input; simulate each distinct input once per
  // replicate. Noise square roots are factored once up front.
  std::vector<const InputTrajectory*> unique_inputs;
  std::vector<size_t> input_index(prepared.size());
  for (size_t m = 0; m < prepared.size(); ++m) {
    size_t found = unique_inputs.size();
    for (size_t k = 0; k < unique_inputs.size(); ++k) {
      if (unique_inputs[k]->stacked == prepared[m].input.stacked) {
        found = k;
        break;
      }
    }
    if (found == unique_inputs.size()) unique_inputs.push_back(&prepared[m].input);
    input_index[m] = found;
  }
  const int n_x = model.dyn.state_dim, T = model.dyn.horizon;
  const MatrixXd sqrt_x0 = psd_sqrt(model.noise.Sigma_x0);
  std::vector<MatrixXd> sqrt_w;
  sqrt_w.reserve(model.noise.Sigma_w.size());
  for (const auto& s : model.noise.Sigma_w) sqrt_w.push_back(psd_sqrt(s));
  VectorXd sigma_v_std = model.noise.sigma_v_vec().cwiseSqrt();

  std::vector<ReplicateResult> results(cfg.n_reps);

  auto run_replicate = [&](int r) {
    ReplicateResult& rep = results[r];
    std::uint64_t theta_rep = cfg.crossed ? static_cast<std::uint64_t>(r % cfg.crossed_theta_count)
                                          : static_cast<std::uint64_t>(r);
    std::uint64_t noise_rep = cfg.crossed ? static_cast<std::uint64_t>(r / cfg.crossed_theta_count)
                                          : static_cast<std::uint64_t>(r);
    Rng theta_rng(cfg.seed, theta_rep, Stream::Theta);
    rep.theta_true = sample_prior_theta(prior_spec, theta_rng);

    Rng process(cfg.seed, noise_rep, Stream::Process);
    Rng measurement(cfg.seed, noise_rep, Stream::Measurement);
    MatrixXd z_process(n_x, T + 1);
    for (int t = 0; t <= T; ++t) z_process.col(t) = process.normal_vector(n_x);
    VectorXd z_measurement = measurement.normal_vector(T + 1);

    std::vector<VectorXd> y_per_input(unique_inputs.size());
    for (size_t k = 0; k < unique_inputs.size(); ++k) {
      const InputTrajectory& u = *unique_inputs[k];
      VectorXd y(T + 1);
      VectorXd x = u.initial_mean(n_x) + sqrt_x0 * z_process.col(0);
      for (int t = 0; t <= T; ++t) {
        y(t) = model.basis.eval(x).dot(rep.theta_true) + sigma_v_std(t) * z_measurement(t);
        if (t < T) {
          x = model.dyn.A[t] * x + model.dyn.B[t] * u.input_at(n_x, model.dyn.input_dim, t) +
              sqrt_w[t] * z_process.col(t + 1);
        }
      }
      y_per_input[k] = std::move(y);
    }

    rep.methods.resize(prepared.size());
    for (size_t m = 0; m < prepared.size(); ++m) {
      MethodResult& out = rep.methods[m];
      try {
        const VectorXd& y = y_per_input[input_index[m]];
        if (!y.allFinite()) {
          throw NumericalError("simulated measurements are not finite");
        }
        out.estimate = prepared[m].Psi * y + prepared[m].psi;
        out.squared_error = (rep.theta_true - out.estimate).squaredNorm();
        out.ok = out.estimate.allFinite();
        if (!out.ok) out.error = "estimate is not finite";
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };

  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    for (int r = 0; r < cfg.n_reps; ++r) run_replicate(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < cfg.n_reps; r = next.fetch_add(1)) run_replicate(r);
      });
    }
    for (auto& th : pool) th.join();
  }
  return results;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("percentile of an empty sample");
  }
  if (!(p > 0.0) || p > 100.0) {
    throw std::invalid_argument("percentile must lie in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  auto rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::max<size_t>(rank, 1) - 1];
}

}  // namespace wienerid
