#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wienerid/experiment.hpp"
#include "wienerid/input_design.hpp"

namespace py = pybind11;
using namespace wienerid;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian identification of basis-expanded output maps under known linear dynamics";
  m.attr("__version__") = kLibraryVersion;

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  // --- process model -------------------------------------------------------
  py::class_<LinearDynamics>(m, "LinearDynamics")
      .def(py::init<int, int, int, std::vector<MatrixXd>, std::vector<MatrixXd>>(),
           py::arg("state_dim"), py::arg("input_dim"), py::arg("horizon"), py::arg("A"),
           py::arg("B"))
      .def_static("invariant", &LinearDynamics::invariant, py::arg("horizon"), py::arg("A"),
                  py::arg("B"))
      .def_readonly("state_dim", &LinearDynamics::state_dim)
      .def_readonly("input_dim", &LinearDynamics::input_dim)
      .def_readonly("horizon", &LinearDynamics::horizon)
      .def_readonly("A", &LinearDynamics::A)
      .def_readonly("B", &LinearDynamics::B)
      .def_readonly("time_invariant", &LinearDynamics::time_invariant)
      .def("stacked_input_dim", &LinearDynamics::stacked_input_dim);

  py::enum_<NoiseKind>(m, "NoiseKind")
      .value("Gaussian", NoiseKind::Gaussian)
      .value("GenericCharacteristic", NoiseKind::GenericCharacteristic);

  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<MatrixXd, std::vector<MatrixXd>, std::vector<double>, NoiseKind>(),
           py::arg("Sigma_x0"), py::arg("Sigma_w"), py::arg("sigma_v_sq"),
           py::arg("kind") = NoiseKind::Gaussian)
      .def_static("isotropic", &NoiseModel::isotropic, py::arg("state_dim"), py::arg("horizon"),
                  py::arg("sigma_x0_sq"), py::arg("sigma_w_sq"), py::arg("sigma_v_sq"))
      .def_readonly("Sigma_x0", &NoiseModel::Sigma_x0)
      .def_readonly("Sigma_w", &NoiseModel::Sigma_w)
      .def_readonly("sigma_v_sq", &NoiseModel::sigma_v_sq)
      .def("sigma_v_vec", &NoiseModel::sigma_v_vec);

  py::class_<InputTrajectory>(m, "InputTrajectory")
      .def(py::init<VectorXd, VectorXd, VectorXd, Eigen::Array<bool, Eigen::Dynamic, 1>>(),
           py::arg("stacked"), py::arg("lower"), py::arg("upper"), py::arg("opt_mask"))
      .def_static("free", &InputTrajectory::free, py::arg("stacked"))
      .def_static("boxed", &InputTrajectory::boxed, py::arg("stacked"), py::arg("lower"),
                  py::arg("upper"))
      .def_readonly("stacked", &InputTrajectory::stacked)
      .def_readonly("lower", &InputTrajectory::lower)
      .def_readonly("upper", &InputTrajectory::upper)
      .def_readonly("opt_mask", &InputTrajectory::opt_mask)
      .def("size", &InputTrajectory::size);

  py::class_<StateStatistics>(m, "StateStatistics")
      .def("horizon", &StateStatistics::horizon)
      .def("state_dim", &StateStatistics::state_dim)
      .def("mean", &StateStatistics::mean, py::arg("t"))
      .def("cov", &StateStatistics::cov, py::arg("t"))
      .def("cross", &StateStatistics::cross, py::arg("t"), py::arg("t_prime"))
      .def("has_sensitivities", &StateStatistics::has_sensitivities)
      .def("sensitivity", &StateStatistics::sensitivity, py::arg("coord"), py::arg("t"));

  py::class_<LiftedBlocks>(m, "LiftedBlocks")
      .def_readonly("A", &LiftedBlocks::A)
      .def_readonly("B", &LiftedBlocks::B);

  m.def("propagate_state_stats", &propagate_state_stats, py::arg("dyn"), py::arg("noise"),
        py::arg("u"), py::arg("with_sensitivities") = false);
  m.def("build_lifted_blocks", &build_lifted_blocks, py::arg("dyn"),
        py::arg("dim_cap") = tol::kLiftedDimCap);
  m.def("input_sensitivity", &input_sensitivity, py::arg("dyn"), py::arg("coord"));

  // --- features and design statistics --------------------------------------
  py::class_<FourierBasis>(m, "FourierBasis")
      .def(py::init<std::vector<VectorXd>>(), py::arg("frequencies"))
      .def_readonly("frequencies", &FourierBasis::frequencies)
      .def("count", &FourierBasis::count)
      .def("dim", &FourierBasis::dim)
      .def("eval", &FourierBasis::eval, py::arg("x"));

  py::class_<ParameterPrior>(m, "ParameterPrior")
      .def(py::init<VectorXd, MatrixXd>(), py::arg("mu_theta"), py::arg("Sigma_theta"))
      .def_readonly("mu_theta", &ParameterPrior::mu_theta)
      .def_readonly("Sigma_theta", &ParameterPrior::Sigma_theta)
      .def("count", &ParameterPrior::count);

  py::class_<DesignStatistics>(m, "DesignStatistics")
      .def(py::init([](MatrixXd phi_bar, MatrixXd big_m) {
             return DesignStatistics{std::move(phi_bar), std::move(big_m)};
           }),
           py::arg("phi_bar"), py::arg("M"))
      .def_readonly("phi_bar", &DesignStatistics::phi_bar)
      .def_readonly("M", &DesignStatistics::M)
      .def("horizon", &DesignStatistics::horizon);

  py::class_<DesignGradient>(m, "DesignGradient")
      .def_readonly("d_phi_bar", &DesignGradient::d_phi_bar)
      .def_readonly("d_M", &DesignGradient::d_M);

  m.def("fourier_mean", &fourier_mean, py::arg("basis"), py::arg("stats"), py::arg("t"));
  m.def("fourier_cross_cov", &fourier_cross_cov, py::arg("basis"), py::arg("stats"), py::arg("t"),
        py::arg("t_prime"), py::arg("m"), py::arg("n"));
  m.def("build_design", &build_design, py::arg("basis"), py::arg("stats"), py::arg("prior"));
  m.def("build_design_gradient", &build_design_gradient, py::arg("basis"), py::arg("stats"),
        py::arg("prior"), py::arg("coord"));

  // --- estimators -----------------------------------------------------------
  py::class_<EstimatorGain>(m, "EstimatorGain")
      .def_readonly("Psi_star", &EstimatorGain::Psi_star)
      .def_readonly("psi_star", &EstimatorGain::psi_star)
      .def_readonly("J_star", &EstimatorGain::J_star);

  py::class_<PosteriorBelief>(m, "PosteriorBelief")
      .def_readonly("mu_pos", &PosteriorBelief::mu_pos)
      .def_readonly("Sigma_pos", &PosteriorBelief::Sigma_pos);

  py::enum_<RlsMode>(m, "RlsMode").value("DLS", RlsMode::DLS).value("MLS", RlsMode::MLS);

  m.def("bayes_gain", &bayes_gain, py::arg("design"), py::arg("prior"), py::arg("sigma_v_sq"));
  m.def("bayes_estimate", &bayes_estimate, py::arg("gain"), py::arg("y"));
  m.def("posterior_update", &posterior_update, py::arg("gain"), py::arg("design"),
        py::arg("prior"), py::arg("y"));
  m.def("bayes_error_information_form", &bayes_error_information_form, py::arg("design"),
        py::arg("prior"), py::arg("sigma_v_sq"));
  m.def("bayes_error_prefix", &bayes_error_prefix, py::arg("design"), py::arg("prior"),
        py::arg("sigma_v_sq"), py::arg("t"));
  m.def("affine_mse", &affine_mse, py::arg("Psi"), py::arg("psi"), py::arg("design"),
        py::arg("prior"), py::arg("sigma_v_sq"));
  m.def("rls_fit", &rls_fit, py::arg("mode"), py::arg("lambda"), py::arg("basis"),
        py::arg("stats"), py::arg("y"));
  m.def("rls_gain", &rls_gain, py::arg("mode"), py::arg("lambda"), py::arg("basis"),
        py::arg("stats"));
  m.def("rls_lambda_grid", &rls_lambda_grid, py::arg("lo") = 1e-6, py::arg("hi") = 1e3,
        py::arg("count") = 30);

  // --- model bundle and input design ---------------------------------------
  py::class_<WienerModel>(m, "WienerModel")
      .def(py::init<LinearDynamics, NoiseModel, FourierBasis, ParameterPrior>(), py::arg("dyn"),
           py::arg("noise"), py::arg("basis"), py::arg("prior"))
      .def_readonly("dyn", &WienerModel::dyn)
      .def_readonly("noise", &WienerModel::noise)
      .def_readonly("basis", &WienerModel::basis)
      .def_readonly("prior", &WienerModel::prior)
      .def("horizon", &WienerModel::horizon);

  m.def("design_for", &design_for, py::arg("model"), py::arg("u"));
  m.def("mmse_error", &mmse_error, py::arg("model"), py::arg("u"));

  py::enum_<StopReason>(m, "StopReason")
      .value("GradientTol", StopReason::GradientTol)
      .value("RelJTol", StopReason::RelJTol)
      .value("MaxIters", StopReason::MaxIters)
      .value("NoDescent", StopReason::NoDescent);

  py::class_<DescentOptions>(m, "DescentOptions")
      .def(py::init<>())
      .def_readwrite("max_iters", &DescentOptions::max_iters)
      .def_readwrite("grad_tol", &DescentOptions::grad_tol)
      .def_readwrite("rel_J_tol", &DescentOptions::rel_J_tol)
      .def_readwrite("rel_J_window", &DescentOptions::rel_J_window)
      .def_readwrite("alpha0", &DescentOptions::alpha0)
      .def_readwrite("max_backtracks", &DescentOptions::max_backtracks);

  py::class_<OptimizerState>(m, "OptimizerState")
      .def_readonly("u_current", &OptimizerState::u_current)
      .def_readonly("alpha", &OptimizerState::alpha)
      .def_readonly("beta", &OptimizerState::beta)
      .def_readonly("iter", &OptimizerState::iter);

  py::class_<DescentResult>(m, "DescentResult")
      .def_readonly("u_star", &DescentResult::u_star)
      .def_readonly("J_history", &DescentResult::J_history)
      .def_readonly("iterations", &DescentResult::iterations)
      .def_readonly("reason", &DescentResult::reason)
      .def_readonly("state", &DescentResult::state);

  m.def("project_box", &project_box, py::arg("v"), py::arg("lower"), py::arg("upper"));
  m.def("adaptive_step", &adaptive_step, py::arg("alpha_prev"), py::arg("beta_prev"),
        py::arg("u_now"), py::arg("u_prev"), py::arg("grad_now"), py::arg("grad_prev"));
  m.def("error_gradient", &error_gradient, py::arg("model"), py::arg("u"));
  m.def("optimize_inputs", &optimize_inputs, py::arg("model"), py::arg("u0"),
        py::arg("options") = DescentOptions{});

  // --- multiple trajectories -------------------------------------------------
  py::class_<TrajectoryBatch>(m, "TrajectoryBatch")
      .def(py::init<LinearDynamics, NoiseModel, InputTrajectory>(), py::arg("dyn"),
           py::arg("noise"), py::arg("u"))
      .def_readonly("dyn", &TrajectoryBatch::dyn)
      .def_readonly("noise", &TrajectoryBatch::noise)
      .def_readonly("u", &TrajectoryBatch::u);

  py::class_<MultiTrajectoryPlan>(m, "MultiTrajectoryPlan")
      .def(py::init<std::vector<TrajectoryBatch>>(), py::arg("batches"))
      .def_readonly("batches", &MultiTrajectoryPlan::batches)
      .def("count", &MultiTrajectoryPlan::count)
      .def("total_measurements", &MultiTrajectoryPlan::total_measurements);

  py::class_<MultiDesign>(m, "MultiDesign")
      .def_readonly("design", &MultiDesign::design)
      .def_readonly("sigma_v_sq", &MultiDesign::sigma_v_sq)
      .def_readonly("offsets", &MultiDesign::offsets);

  py::class_<InformationMatrix>(m, "InformationMatrix")
      .def_readonly("matrix", &InformationMatrix::matrix)
      .def_readonly("lambda_min", &InformationMatrix::lambda_min);

  m.def("assemble_multi", &assemble_multi, py::arg("plan"), py::arg("basis"), py::arg("prior"));
  m.def("information_matrix", &information_matrix, py::arg("plan"), py::arg("basis"),
        py::arg("prior"));
  m.def("inconsistency_probe", &inconsistency_probe, py::arg("model"), py::arg("u"),
        py::arg("horizons"));

  // --- simulation -------------------------------------------------------------
  py::enum_<Stream>(m, "Stream")
      .value("Theta", Stream::Theta)
      .value("Process", Stream::Process)
      .value("Measurement", Stream::Measurement);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t, std::uint64_t, Stream>(), py::arg("master"),
           py::arg("replicate"), py::arg("stream"))
      .def("uniform01", &Rng::uniform01)
      .def("uniform", &Rng::uniform, py::arg("lo"), py::arg("hi"))
      .def("normal", &Rng::normal)
      .def("normal_vector", &Rng::normal_vector, py::arg("n"));

  py::class_<SimSeed>(m, "SimSeed")
      .def(py::init([](std::uint64_t master, std::uint64_t replicate) {
             return SimSeed{master, replicate};
           }),
           py::arg("master_seed"), py::arg("replicate") = 0)
      .def_readonly("master_seed", &SimSeed::master_seed)
      .def_readonly("replicate", &SimSeed::replicate)
      .def("rng", &SimSeed::rng, py::arg("stream"));

  py::class_<PriorSpec>(m, "PriorSpec")
      .def_static("uniform", &PriorSpec::uniform, py::arg("count"), py::arg("low"),
                  py::arg("high"))
      .def_static("gaussian", &PriorSpec::gaussian, py::arg("mean"), py::arg("cov"))
      .def("implied_prior", &PriorSpec::implied_prior);

  py::class_<SimulatedTrajectory>(m, "SimulatedTrajectory")
      .def_readonly("states", &SimulatedTrajectory::states)
      .def_readonly("y", &SimulatedTrajectory::y);

  m.def("sample_prior_theta", &sample_prior_theta, py::arg("spec"), py::arg("rng"));
  m.def("simulate_trajectory", &simulate_trajectory, py::arg("model"), py::arg("u"),
        py::arg("theta"), py::arg("seed"));
  m.def("simulate_with_noise", &simulate_with_noise, py::arg("model"), py::arg("u"),
        py::arg("theta"), py::arg("z_process"), py::arg("z_measurement"));

  py::class_<MethodSpec> method_spec(m, "MethodSpec");
  py::enum_<MethodSpec::Kind>(method_spec, "Kind")
      .value("DLS", MethodSpec::Kind::DLS)
      .value("MLS", MethodSpec::Kind::MLS)
      .value("BMS", MethodSpec::Kind::BMS)
      .value("BAL", MethodSpec::Kind::BAL);
  method_spec
      .def(py::init([](MethodSpec::Kind kind, double lambda, std::optional<InputTrajectory> u) {
             return MethodSpec{kind, lambda, std::move(u)};
           }),
           py::arg("kind"), py::arg("lambda") = 0.0, py::arg("input") = std::nullopt)
      .def_readonly("kind", &MethodSpec::kind)
      .def_readonly("lambda_", &MethodSpec::lambda)
      .def("label", &MethodSpec::label);

  py::class_<MethodResult>(m, "MethodResult")
      .def_readonly("estimate", &MethodResult::estimate)
      .def_readonly("squared_error", &MethodResult::squared_error)
      .def_readonly("ok", &MethodResult::ok)
      .def_readonly("error", &MethodResult::error);

  py::class_<ReplicateResult>(m, "ReplicateResult")
      .def_readonly("theta_true", &ReplicateResult::theta_true)
      .def_readonly("methods", &ReplicateResult::methods)
      .def("all_ok", &ReplicateResult::all_ok);

  py::class_<MonteCarloConfig>(m, "MonteCarloConfig")
      .def(py::init<>())
      .def_readwrite("n_reps", &MonteCarloConfig::n_reps)
      .def_readwrite("seed", &MonteCarloConfig::seed)
      .def_readwrite("threads", &MonteCarloConfig::threads)
      .def_readwrite("crossed", &MonteCarloConfig::crossed)
      .def_readwrite("crossed_theta_count", &MonteCarloConfig::crossed_theta_count);

  m.def("monte_carlo_benchmark", &monte_carlo_benchmark, py::arg("model"), py::arg("u_base"),
        py::arg("prior_spec"), py::arg("methods"), py::arg("config"));
  m.def("percentile_nearest_rank", &percentile_nearest_rank, py::arg("values"), py::arg("p"));

  // --- experiment configs (JSON-backed) --------------------------------------
  m.def(
      "default_config_json", [] { return config_json(default_config()).dump(2); },
      "Canonical JSON of the default experiment configuration");
  m.def(
      "run_benchmark_from_json",
      [](const std::string& text) {
        auto cfg = parse_config_text(text, "<python>");
        auto artifacts = run_benchmark(cfg);
        return py::make_tuple(to_csv(artifacts.table), artifacts.summary.dump(2));
      },
      py::arg("config_text"),
      "Runs the configured benchmark and returns (csv, summary_json) as strings");
}
