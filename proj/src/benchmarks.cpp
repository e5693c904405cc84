#include <algorithm>
#include <cmath>
#include <numeric>

#include "wienerid/experiment.hpp"
#include "wienerid/input_design.hpp"

namespace wienerid {

using nlohmann::json;

namespace {

struct MethodAggregate {
  double mse = 0.0;
  double p20 = 0.0;
  double p80 = 0.0;
  int failures = 0;
};

MethodAggregate aggregate_method(const std::vector<ReplicateResult>& reps, size_t m) {
  MethodAggregate out;
  std::vector<double> errors;
  errors.reserve(reps.size());
  for (const auto& rep : reps) {
    if (rep.methods[m].ok) {
      errors.push_back(rep.methods[m].squared_error);
    } else {
      ++out.failures;
    }
  }
  if (!errors.empty()) {
    out.mse = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
    out.p20 = percentile_nearest_rank(errors, 20.0);
    out.p80 = percentile_nearest_rank(errors, 80.0);
  }
  return out;
}

void record_failures(BenchmarkArtifacts& artifacts, const std::vector<ReplicateResult>& reps,
                     const std::vector<MethodSpec>& methods, const json& setting) {
  for (size_t r = 0; r < reps.size(); ++r) {
    for (size_t m = 0; m < reps[r].methods.size(); ++m) {
      if (!reps[r].methods[m].ok) {
        ++artifacts.replicate_failures;
        artifacts.failure_manifest["failures"].push_back(
            json{{"setting", setting},
                 {"replicate", r},
                 {"method", methods[m].label()},
                 {"error", reps[r].methods[m].error}});
      }
    }
  }
}

MonteCarloConfig mc_config(const ExperimentConfig& cfg, int n_reps, std::uint64_t seed) {
  MonteCarloConfig mc;
  mc.n_reps = n_reps;
  mc.seed = seed;
  mc.threads = cfg.run.threads;
  mc.crossed = cfg.run.crossed;
  mc.crossed_theta_count = cfg.run.crossed_theta_count;
  return mc;
}

// Tuning runs draw from a seed offset so the comparison replicates stay
// untouched by hyperparameter selection.
constexpr std::uint64_t kTuningSeedOffset = 0x9E3779B97F4A7C15ull;

double tuned_lambda(const ExperimentConfig& cfg, const WienerModel& model,
                    const InputTrajectory& u, RlsMode mode) {
  auto grid = rls_lambda_grid(cfg.run.lambda_min, cfg.run.lambda_max, cfg.run.lambda_count);
  std::vector<MethodSpec> methods;
  for (double lambda : grid) {
    methods.push_back({mode == RlsMode::DLS ? MethodSpec::Kind::DLS : MethodSpec::Kind::MLS,
                       lambda, std::nullopt});
  }
  auto reps = monte_carlo_benchmark(model, u, materialize_prior_spec(cfg), methods,
                                    mc_config(cfg, cfg.run.tuning_reps,
                                              cfg.run.seed + kTuningSeedOffset));
  double best_lambda = grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < grid.size(); ++k) {
    double mse = aggregate_method(reps, k).mse;
    if (mse < best_mse) {
      best_mse = mse;
      best_lambda = grid[k];
    }
  }
  return best_lambda;
}

InputTrajectory designed_input(const WienerModel& model, const InputTrajectory& u0,
                               int max_iters) {
  DescentOptions opts;
  opts.max_iters = max_iters;
  auto result = optimize_inputs(model, u0, opts);
  return InputTrajectory(result.u_star, u0.lower, u0.upper, u0.opt_mask);
}

double analytic_rls_mse(const WienerModel& model, const InputTrajectory& u, RlsMode mode,
                        double lambda) {
  auto stats = propagate_state_stats(model.dyn, model.noise, u);
  auto design = build_design(model.basis, stats, model.prior);
  MatrixXd psi = rls_gain(mode, lambda, model.basis, stats);
  return affine_mse(psi, VectorXd::Zero(model.prior.count()), design, model.prior,
                    model.noise.sigma_v_vec());
}

// Batch layout for a given trajectory count: sizes of ceil(n/tau), the last
// batch taking the remainder (101 samples at tau = 11 gives ten of 10 plus
// one of 1).
std::vector<int> batch_sizes(int total, int tau) {
  int size = (total + tau - 1) / tau;
  std::vector<int> sizes;
  int remaining = total;
  while (remaining > 0) {
    int take = std::min(size, remaining);
    sizes.push_back(take);
    remaining -= take;
  }
  return sizes;
}

// Deterministic 2-D spread over one period of the default basis, used to
// differentiate batch initial means before descent (identical batches would
// otherwise keep identical gradients forever).
VectorXd spread_mean(const VectorXd& base, int index) {
  if (base.size() != 2 || index == 0) return base;
  VectorXd mu(2);
  mu << 10.0 * std::fmod(0.7071067811865476 * index, 1.0),
      6.0 * std::fmod(0.5773502691896258 * index, 1.0);
  return mu;
}

}  // namespace

BenchmarkArtifacts run_benchmark1(const ExperimentConfig& cfg) {
  BenchmarkArtifacts artifacts;
  artifacts.name = "benchmark1";
  artifacts.table.columns = {"sigma_w_sq", "method", "lambda", "empirical_mse", "analytic_mse"};
  auto grid = rls_lambda_grid(cfg.run.lambda_min, cfg.run.lambda_max, cfg.run.lambda_count);
  json settings = json::array();

  for (double sigma_w : cfg.run.sigma_w_list) {
    WienerModel model = materialize_model(cfg, cfg.model.horizon, sigma_w);
    InputTrajectory u = materialize_input(cfg, cfg.model.horizon);

    std::vector<MethodSpec> methods;
    for (double lambda : grid) methods.push_back({MethodSpec::Kind::DLS, lambda, std::nullopt});
    for (double lambda : grid) methods.push_back({MethodSpec::Kind::MLS, lambda, std::nullopt});
    methods.push_back({MethodSpec::Kind::BMS, 0.0, std::nullopt});

    auto reps = monte_carlo_benchmark(model, u, materialize_prior_spec(cfg), methods,
                                      mc_config(cfg, cfg.run.n_reps, cfg.run.seed));
    record_failures(artifacts, reps, methods, json{{"sigma_w_sq", sigma_w}});

    auto design = design_for(model, u);
    double j_bms = bayes_gain(design, model.prior, model.noise.sigma_v_vec()).J_star;
    json lam_rows = json::array();
    for (size_t k = 0; k < methods.size(); ++k) {
      auto agg = aggregate_method(reps, k);
      double analytic = (methods[k].kind == MethodSpec::Kind::BMS)
                            ? j_bms
                            : analytic_rls_mse(model, u,
                                               methods[k].kind == MethodSpec::Kind::DLS
                                                   ? RlsMode::DLS
                                                   : RlsMode::MLS,
                                               methods[k].lambda);
      artifacts.table.append({sigma_w, methods[k].label(), methods[k].lambda, agg.mse, analytic});
      lam_rows.push_back(json{{"method", methods[k].label()},
                              {"lambda", methods[k].lambda},
                              {"empirical_mse", agg.mse},
                              {"analytic_mse", analytic}});
    }
    settings.push_back(json{{"sigma_w_sq", sigma_w}, {"analytic_bms", j_bms}, {"rows", lam_rows}});
  }
  artifacts.summary = json{{"benchmark", 1}, {"settings", settings}};
  return artifacts;
}

BenchmarkArtifacts run_benchmark2(const ExperimentConfig& cfg) {
  BenchmarkArtifacts artifacts;
  artifacts.name = "benchmark2";
  artifacts.table.columns = {"sigma_w_sq", "replicate",  "se_mls",     "se_bms",
                             "se_bal",     "d_mls_bms",  "d_mls_bal",  "d_bms_bal"};
  json settings = json::array();

  for (double sigma_w : cfg.run.sigma_w_list) {
    WienerModel model = materialize_model(cfg, cfg.model.horizon, sigma_w);
    InputTrajectory u = materialize_input(cfg, cfg.model.horizon);
    double lambda_star = tuned_lambda(cfg, model, u, RlsMode::MLS);
    InputTrajectory u_star = designed_input(model, u, cfg.run.design_iters);

    std::vector<MethodSpec> methods{{MethodSpec::Kind::MLS, lambda_star, std::nullopt},
                                    {MethodSpec::Kind::BMS, 0.0, std::nullopt},
                                    {MethodSpec::Kind::BAL, 0.0, u_star}};
    auto reps = monte_carlo_benchmark(model, u, materialize_prior_spec(cfg), methods,
                                      mc_config(cfg, cfg.run.n_reps, cfg.run.seed));
    record_failures(artifacts, reps, methods, json{{"sigma_w_sq", sigma_w}});

    int n_ok = 0, mls_beats_bms = 0, mls_beats_bal = 0, bms_beats_bal = 0;
    for (size_t r = 0; r < reps.size(); ++r) {
      const auto& rep = reps[r];
      if (!rep.all_ok()) continue;
      double se_mls = rep.methods[0].squared_error;
      double se_bms = rep.methods[1].squared_error;
      double se_bal = rep.methods[2].squared_error;
      artifacts.table.append({sigma_w, static_cast<long long>(r), se_mls, se_bms, se_bal,
                              se_mls - se_bms, se_mls - se_bal, se_bms - se_bal});
      ++n_ok;
      if (se_mls < se_bms) ++mls_beats_bms;
      if (se_mls < se_bal) ++mls_beats_bal;
      if (se_bms < se_bal) ++bms_beats_bal;
    }

    auto design = design_for(model, u);
    double j_bms = bayes_gain(design, model.prior, model.noise.sigma_v_vec()).J_star;
    double j_bal = mmse_error(model, u_star);
    double mse_mls = analytic_rls_mse(model, u, RlsMode::MLS, lambda_star);
    settings.push_back(json{{"sigma_w_sq", sigma_w},
                            {"lambda_star_mls", lambda_star},
                            {"replicates", n_ok},
                            {"frac_mls_beats_bms", n_ok ? double(mls_beats_bms) / n_ok : 0.0},
                            {"frac_mls_beats_bal", n_ok ? double(mls_beats_bal) / n_ok : 0.0},
                            {"frac_bms_beats_bal", n_ok ? double(bms_beats_bal) / n_ok : 0.0},
                            {"analytic_mean_d_mls_bms", mse_mls - j_bms},
                            {"analytic_mean_d_mls_bal", mse_mls - j_bal},
                            {"analytic_mean_d_bms_bal", j_bms - j_bal}});
  }
  artifacts.summary = json{{"benchmark", 2}, {"settings", settings}};
  return artifacts;
}

BenchmarkArtifacts run_benchmark3(const ExperimentConfig& cfg) {
  BenchmarkArtifacts artifacts;
  artifacts.name = "benchmark3";
  artifacts.table.columns = {"sigma_w_sq", "T",  "method",       "empirical_mse",
                             "p20",        "p80", "analytic_mse"};
  std::vector<int> horizons = cfg.run.horizons;
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  const int t_max = horizons.back();
  json settings = json::array();

  for (double sigma_w : cfg.run.sigma_w_list) {
    WienerModel model_max = materialize_model(cfg, t_max, sigma_w);
    InputTrajectory u_max = materialize_input(cfg, t_max);
    double lambda_dls = tuned_lambda(cfg, model_max, u_max, RlsMode::DLS);
    double lambda_mls = tuned_lambda(cfg, model_max, u_max, RlsMode::MLS);

    json per_t = json::array();
    std::optional<VectorXd> warm;  // designed input from the previous horizon
    for (int t : horizons) {
      WienerModel model = materialize_model(cfg, t, sigma_w);
      InputTrajectory u = materialize_input(cfg, t);
      // Warm-starting from the shorter horizon's design keeps the analytic
      // error overlay non-increasing in T.
      InputTrajectory u0 = u;
      if (warm && warm->size() <= u.size()) {
        VectorXd seeded = u.stacked;
        seeded.head(warm->size()) = *warm;
        u0 = InputTrajectory(seeded, u.lower, u.upper, u.opt_mask);
      }
      InputTrajectory u_star = designed_input(model, u0, cfg.run.design_iters);
      warm = u_star.stacked;

      std::vector<MethodSpec> methods{{MethodSpec::Kind::DLS, lambda_dls, std::nullopt},
                                      {MethodSpec::Kind::MLS, lambda_mls, std::nullopt},
                                      {MethodSpec::Kind::BMS, 0.0, std::nullopt},
                                      {MethodSpec::Kind::BAL, 0.0, u_star}};
      auto reps = monte_carlo_benchmark(model, u, materialize_prior_spec(cfg), methods,
                                        mc_config(cfg, cfg.run.n_reps, cfg.run.seed));
      record_failures(artifacts, reps, methods,
                      json{{"sigma_w_sq", sigma_w}, {"T", t}});

      auto design = design_for(model, u);
      double j_bms = bayes_gain(design, model.prior, model.noise.sigma_v_vec()).J_star;
      json row_group = json{{"T", t}};
      for (size_t m = 0; m < methods.size(); ++m) {
        auto agg = aggregate_method(reps, m);
        double analytic;
        switch (methods[m].kind) {
          case MethodSpec::Kind::DLS:
            analytic = analytic_rls_mse(model, u, RlsMode::DLS, lambda_dls);
            break;
          case MethodSpec::Kind::MLS:
            analytic = analytic_rls_mse(model, u, RlsMode::MLS, lambda_mls);
            break;
          case MethodSpec::Kind::BMS:
            analytic = j_bms;
            break;
          case MethodSpec::Kind::BAL:
          default:
            analytic = mmse_error(model, u_star);
            break;
        }
        artifacts.table.append({sigma_w, static_cast<long long>(t), methods[m].label(), agg.mse,
                                agg.p20, agg.p80, analytic});
        row_group[methods[m].label()] =
            json{{"empirical_mse", agg.mse}, {"p20", agg.p20}, {"p80", agg.p80},
                 {"analytic_mse", analytic}};
      }
      per_t.push_back(row_group);
    }
    settings.push_back(json{{"sigma_w_sq", sigma_w},
                            {"lambda_star_dls", lambda_dls},
                            {"lambda_star_mls", lambda_mls},
                            {"by_horizon", per_t}});
  }
  artifacts.summary = json{{"benchmark", 3}, {"settings", settings}};
  return artifacts;
}

BenchmarkArtifacts run_benchmark4(const ExperimentConfig& cfg) {
  BenchmarkArtifacts artifacts;
  artifacts.name = "benchmark4";
  artifacts.table.columns = {"sigma_w_sq", "tau", "replicate", "squared_error"};
  const int total = cfg.model.horizon + 1;
  const int n_x = cfg.model.state_dim;
  json settings = json::array();

  for (double sigma_w : cfg.run.sigma_w_list) {
    if (!(sigma_w > 0.0)) continue;  // independent batches only differ under process noise
    for (int tau : cfg.run.tau_list) {
      auto sizes = batch_sizes(total, tau);

      // Build the plan: every batch runs the configured sinusoid on its own
      // clock; initial means of later batches start on the deterministic
      // spread and all coordinates except batch 1's initial state are free.
      MultiTrajectoryPlan plan;
      FourierBasis basis(cfg.basis.frequencies);
      ParameterPrior prior = materialize_prior_spec(cfg).implied_prior();
      for (size_t b = 0; b < sizes.size(); ++b) {
        int t_b = sizes[b] - 1;
        WienerModel m_b = materialize_model(cfg, t_b, sigma_w);
        InputTrajectory u_b = materialize_input(cfg, t_b);
        VectorXd stacked = u_b.stacked;
        stacked.head(n_x) = spread_mean(cfg.model.mu_x0, static_cast<int>(b));
        Eigen::Array<bool, Eigen::Dynamic, 1> mask =
            Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(u_b.size(), true);
        if (b == 0) mask.head(n_x).setConstant(false);
        plan.batches.push_back(
            {m_b.dyn, m_b.noise, InputTrajectory(stacked, u_b.lower, u_b.upper, mask)});
      }

      DescentOptions opts;
      opts.max_iters = cfg.run.design_iters;
      auto designed = optimize_inputs_multi(plan, basis, prior, opts);
      for (size_t b = 0; b < plan.batches.size(); ++b) {
        auto& u_b = plan.batches[b].u;
        u_b = InputTrajectory(designed.u_star[b], u_b.lower, u_b.upper, u_b.opt_mask);
      }

      auto multi = assemble_multi(plan, basis, prior);
      auto gain = bayes_gain(multi.design, prior, multi.sigma_v_sq);
      auto info = information_matrix(plan, basis, prior);

      // Shared realizations: every (sigma_w, tau) setting consumes the same
      // standard-normal draws in the same order.
      PriorSpec prior_spec = materialize_prior_spec(cfg);
      MatrixXd sqrt_x0 = psd_sqrt(plan.batches[0].noise.Sigma_x0);
      double sw_std = std::sqrt(sigma_w);
      double sv_std = std::sqrt(cfg.model.sigma_v_sq);

      std::vector<double> errors(cfg.run.n_reps);
      for (int r = 0; r < cfg.run.n_reps; ++r) {
        Rng theta_rng(cfg.run.seed, r, Stream::Theta);
        VectorXd theta = sample_prior_theta(prior_spec, theta_rng);
        Rng process(cfg.run.seed, r, Stream::Process);
        Rng measurement(cfg.run.seed, r, Stream::Measurement);
        MatrixXd z(n_x, total);
        for (int i = 0; i < total; ++i) z.col(i) = process.normal_vector(n_x);
        VectorXd zv = measurement.normal_vector(total);

        VectorXd y(total);
        int at = 0;
        for (const auto& batch : plan.batches) {
          const int len = batch.dyn.horizon + 1;
          VectorXd x = batch.u.initial_mean(n_x) + sqrt_x0 * z.col(at);
          for (int t = 0; t < len; ++t) {
            y(at + t) = basis.eval(x).dot(theta) + sv_std * zv(at + t);
            if (t + 1 < len) {
              x = batch.dyn.A[t] * x +
                  batch.dyn.B[t] * batch.u.input_at(n_x, batch.dyn.input_dim, t) +
                  sw_std * z.col(at + t + 1);
            }
          }
          at += len;
        }
        errors[r] = (theta - bayes_estimate(gain, y)).squaredNorm();
        artifacts.table.append({sigma_w, static_cast<long long>(tau), static_cast<long long>(r),
                                errors[r]});
      }
      double mse = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
      settings.push_back(json{{"sigma_w_sq", sigma_w},
                              {"tau", tau},
                              {"batches", sizes.size()},
                              {"empirical_mse", mse},
                              {"p20", percentile_nearest_rank(errors, 20.0)},
                              {"p80", percentile_nearest_rank(errors, 80.0)},
                              {"analytic_mse", gain.J_star},
                              {"information_lambda_min", info.lambda_min}});
    }
  }
  artifacts.summary = json{{"benchmark", 4}, {"settings", settings}};
  return artifacts;
}

BenchmarkArtifacts run_benchmark(const ExperimentConfig& cfg) {
  switch (cfg.run.benchmark) {
    case 1: return run_benchmark1(cfg);
    case 2: return run_benchmark2(cfg);
    case 3: return run_benchmark3(cfg);
    case 4: return run_benchmark4(cfg);
    default:
      throw std::invalid_argument("benchmark id must be 1..4, got " +
                                  std::to_string(cfg.run.benchmark));
  }
}

json run_estimate(const ExperimentConfig& cfg, const VectorXd& y) {
  WienerModel model = materialize_model(cfg, cfg.model.horizon, cfg.model.sigma_w_sq);
  InputTrajectory u = materialize_input(cfg, cfg.model.horizon);
  auto design = design_for(model, u);
  auto gain = bayes_gain(design, model.prior, model.noise.sigma_v_vec());
  if (y.size() != design.phi_bar.cols()) {
    throw std::invalid_argument("data has " + std::to_string(y.size()) + " measurements, model expects " +
                                std::to_string(design.phi_bar.cols()));
  }
  if (!y.allFinite()) {
    throw std::invalid_argument("measurements must be finite");
  }
  auto post = posterior_update(gain, design, model.prior, y);
  json theta = json::array(), mu_pos = json::array();
  VectorXd estimate = bayes_estimate(gain, y);
  for (Eigen::Index i = 0; i < estimate.size(); ++i) theta.push_back(estimate(i));
  for (Eigen::Index i = 0; i < post.mu_pos.size(); ++i) mu_pos.push_back(post.mu_pos(i));
  return json{{"theta_hat", theta},
              {"analytic_error", gain.J_star},
              {"posterior_mean", mu_pos},
              {"posterior_trace", post.Sigma_pos.trace()},
              {"measurements", y.size()}};
}

json run_design(const ExperimentConfig& cfg) {
  WienerModel model = materialize_model(cfg, cfg.model.horizon, cfg.model.sigma_w_sq);
  InputTrajectory u0 = materialize_input(cfg, cfg.model.horizon);
  DescentOptions opts;
  opts.max_iters = cfg.run.design_iters;
  auto result = optimize_inputs(model, u0, opts);
  json u_star = json::array(), history = json::array();
  for (Eigen::Index i = 0; i < result.u_star.size(); ++i) u_star.push_back(result.u_star(i));
  for (double j : result.J_history) history.push_back(j);
  return json{{"u_star", u_star},
              {"error_history", history},
              {"initial_error", result.J_history.front()},
              {"final_error", result.J_history.back()},
              {"iterations", result.iterations}};
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.second; });
}

namespace {

MatrixXd rng_matrix(Rng& rng, int r, int c, double scale = 1.0) {
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

MatrixXd rng_spd(Rng& rng, int n, double scale = 1.0) {
  MatrixXd a = rng_matrix(rng, n, n);
  return scale * (a * a.transpose() + 0.1 * MatrixXd::Identity(n, n));
}

WienerModel rng_model(Rng& rng, int T, int N) {
  std::vector<MatrixXd> as, bs, sw;
  for (int t = 0; t < T; ++t) {
    as.push_back(rng_matrix(rng, 2, 2, 0.45));
    bs.push_back(rng_matrix(rng, 2, 2, 0.8));
    sw.push_back(rng_spd(rng, 2, 0.2));
  }
  std::vector<VectorXd> freqs{VectorXd::Zero(2)};
  for (int n = 0; n < N; ++n) freqs.push_back(rng_matrix(rng, 2, 1, 1.1));
  return WienerModel(LinearDynamics(2, 2, T, as, bs),
                     NoiseModel(rng_spd(rng, 2, 0.2), sw, std::vector<double>(T + 1, 0.01)),
                     FourierBasis(freqs), ParameterPrior(rng_matrix(rng, N + 1, 1, 2.0),
                                                          rng_spd(rng, N + 1)));
}

}  // namespace

ValidationReport run_validation(std::uint64_t seed) {
  ValidationReport report;
  Rng rng(seed, 0, Stream::Theta);

  {  // analytic gradient vs finite differences
    bool ok = true;
    for (int inst = 0; inst < 5 && ok; ++inst) {
      WienerModel model = rng_model(rng, 5 + inst, 3);
      InputTrajectory u = InputTrajectory::free(rng_matrix(rng, model.dyn.stacked_input_dim(), 1));
      VectorXd grad = error_gradient(model, u);
      for (int coord = 0; coord < u.size() && ok; ++coord) {
        VectorXd up = u.stacked, dn = u.stacked;
        up(coord) += 1e-5;
        dn(coord) -= 1e-5;
        double fd = (mmse_error(model, InputTrajectory::free(up)) -
                     mmse_error(model, InputTrajectory::free(dn))) /
                    2e-5;
        ok = std::abs(fd - grad(coord)) / std::max({1e-8, std::abs(fd), std::abs(grad(coord))}) <
             1e-6;
      }
    }
    report.checks.emplace_back("gradient matches finite differences", ok);
  }

  {  // error monotone in the measurement count
    bool ok = true;
    for (int inst = 0; inst < 20 && ok; ++inst) {
      WienerModel model = rng_model(rng, 4 + inst % 5, 3);
      InputTrajectory u = InputTrajectory::free(rng_matrix(rng, model.dyn.stacked_input_dim(), 1));
      auto design = design_for(model, u);
      double prev = std::numeric_limits<double>::infinity();
      for (int t = 0; t <= model.horizon() && ok; ++t) {
        double jt = bayes_error_prefix(design, model.prior, model.noise.sigma_v_vec(), t);
        ok = jt <= prev + 1e-12;
        prev = jt;
      }
    }
    report.checks.emplace_back("error decreases with every measurement", ok);
  }

  {  // two algebraic routes to the error agree; posterior trace matches
    bool ok = true;
    for (int inst = 0; inst < 5 && ok; ++inst) {
      WienerModel model = rng_model(rng, 8, 4);
      InputTrajectory u = InputTrajectory::free(rng_matrix(rng, model.dyn.stacked_input_dim(), 1));
      auto design = design_for(model, u);
      VectorXd sv = model.noise.sigma_v_vec();
      auto gain = bayes_gain(design, model.prior, sv);
      double info = bayes_error_information_form(design, model.prior, sv);
      ok = std::abs(gain.J_star - info) / info < 1e-8;
      if (ok) {
        auto post = posterior_update(gain, design, model.prior,
                                     rng_matrix(rng, model.horizon() + 1, 1));
        ok = std::abs(post.Sigma_pos.trace() - gain.J_star) < 1e-12 * std::max(1.0, gain.J_star);
      }
    }
    report.checks.emplace_back("direct and information-form errors agree", ok);
  }

  {  // conjugate case equals the exact Gaussian posterior mean
    WienerModel noisy = rng_model(rng, 10, 3);
    WienerModel model(noisy.dyn, NoiseModel::isotropic(2, 10, 0.0, 0.0, 0.01), noisy.basis,
                      noisy.prior);
    InputTrajectory u = InputTrajectory::free(rng_matrix(rng, model.dyn.stacked_input_dim(), 1));
    auto stats = propagate_state_stats(model.dyn, model.noise, u);
    auto design = build_design(model.basis, stats, model.prior);
    auto gain = bayes_gain(design, model.prior, model.noise.sigma_v_vec());
    VectorXd y = rng_matrix(rng, 11, 1, 2.0);
    const int nb = model.prior.count();
    MatrixXd sigma_inv = model.prior.Sigma_theta.llt().solve(MatrixXd::Identity(nb, nb));
    MatrixXd a = sigma_inv + design.phi_bar * design.phi_bar.transpose() / 0.01;
    VectorXd exact = a.llt().solve(sigma_inv * model.prior.mu_theta + design.phi_bar * y / 0.01);
    bool ok = (bayes_estimate(gain, y) - exact).cwiseAbs().maxCoeff() < 1e-10;
    report.checks.emplace_back("conjugate case matches the exact posterior mean", ok);
  }

  {  // simulation determinism across thread counts
    ExperimentConfig cfg = default_config();
    cfg.model.horizon = 8;
    WienerModel model = materialize_model(cfg, 8, 0.001);
    InputTrajectory u = materialize_input(cfg, 8);
    std::vector<MethodSpec> methods{{MethodSpec::Kind::BMS, 0.0, std::nullopt}};
    MonteCarloConfig one = mc_config(cfg, 32, seed);
    one.threads = 1;
    MonteCarloConfig two = one;
    two.threads = 2;
    auto r1 = monte_carlo_benchmark(model, u, materialize_prior_spec(cfg), methods, one);
    auto r2 = monte_carlo_benchmark(model, u, materialize_prior_spec(cfg), methods, two);
    bool ok = true;
    for (size_t i = 0; i < r1.size() && ok; ++i) {
      ok = r1[i].methods[0].squared_error == r2[i].methods[0].squared_error;
    }
    report.checks.emplace_back("replicates are deterministic across thread counts", ok);
  }

  return report;
}

}  // namespace wienerid
