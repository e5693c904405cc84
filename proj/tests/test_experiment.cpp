#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wienerid/experiment.hpp"

using namespace wienerid;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig tiny_config(int benchmark) {
  ExperimentConfig cfg = default_config();
  cfg.model.horizon = 10;
  cfg.run.benchmark = benchmark;
  cfg.run.n_reps = 40;
  cfg.run.tuning_reps = 30;
  cfg.run.lambda_count = 4;
  cfg.run.lambda_max = 1e-1;
  cfg.run.design_iters = 15;
  cfg.run.horizons = {2, 5, 8};
  cfg.run.tau_list = {1, 3};
  cfg.run.sigma_w_list = {0.001};
  return cfg;
}

}  // namespace

TEST_CASE("empty config resolves to the documented defaults") {
  auto cfg = parse_config_text("{}", "inline");
  CHECK(cfg.model.state_dim == 2);
  CHECK(cfg.model.dt == 0.1);
  CHECK(cfg.model.horizon == 100);
  CHECK(cfg.model.mu_x0(0) == 3.2);
  CHECK(cfg.model.mu_x0(1) == 2.8);
  CHECK(cfg.model.sigma_w_sq == 0.001);
  CHECK(cfg.model.sigma_v_sq == 0.01);
  CHECK(cfg.basis.frequencies.size() == 11);
  CHECK(cfg.basis.frequencies[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(cfg.basis.frequencies[1](0) == doctest::Approx(2 * 3.14159265358979 / 10));
  CHECK(cfg.prior.low == 2.0);
  CHECK(cfg.prior.high == 8.0);
  CHECK(cfg.input.amplitude == 4.5);
  CHECK(cfg.input.rates == std::vector<double>({3, 5, 10, 20, 100}));
  CHECK(cfg.input.lower == -200.0);
  CHECK(cfg.input.upper == 200.0);
  CHECK(cfg.run.sigma_w_list == std::vector<double>({0.0, 0.001, 0.01}));

  // Implied prior moments of uniform(2, 8).
  auto prior = materialize_prior_spec(cfg).implied_prior();
  CHECK((prior.mu_theta.array() == 5.0).all());
  CHECK(prior.Sigma_theta(3, 3) == 3.0);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"model": {"horizonn": 3}})", "inline"),
                       doctest::Contains("model.horizonn"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config_text(R"({"extra": 1})", "inline"),
                       doctest::Contains("extra"), std::invalid_argument);
}

TEST_CASE("malformed files report the line") {
  CHECK_THROWS_WITH_AS(parse_config_text("{\n  \"model\": {\n  oops\n}}", "broken.json"),
                       doctest::Contains("broken.json:3"), std::invalid_argument);
}

TEST_CASE("nonzero leading frequency is rejected") {
  CHECK_THROWS_WITH_AS(
      parse_config_text(R"({"basis": {"frequencies": [[0.1, 0], [1, 0]]}})", "inline"),
      doctest::Contains("frequencies[0]"), std::invalid_argument);
}

TEST_CASE("config echo round-trips") {
  ExperimentConfig cfg = tiny_config(2);
  cfg.run.seed = 987654321;
  cfg.model.sigma_x0_sq = 0.5;
  std::string dumped = config_json(cfg).dump();
  auto reparsed = parse_config_text(dumped, "echo");
  CHECK(config_json(reparsed).dump() == dumped);
  CHECK(config_hash(reparsed) == config_hash(cfg));
  cfg.run.seed += 1;
  CHECK(config_hash(reparsed) != config_hash(cfg));
}

TEST_CASE("csv formatting is stable and round-trip exact") {
  Table table;
  table.columns = {"name", "value", "count"};
  table.append({std::string("row,with,commas"), 0.1 + 0.2, 7LL});
  table.append({std::string("plain"), 1e-17, -3LL});
  std::string csv = to_csv(table);
  CHECK(csv == to_csv(table));
  CHECK(csv.find("\"row,with,commas\"") != std::string::npos);
  // 17 significant digits round-trip doubles exactly.
  CHECK(csv.find("0.30000000000000004") != std::string::npos);
  CHECK_THROWS_AS(table.append({std::string("short")}), std::invalid_argument);
}

TEST_CASE("benchmark 1 emits a full sweep table") {
  auto cfg = tiny_config(1);
  auto artifacts = run_benchmark1(cfg);
  // dls and mls per lambda plus one bms row, per sigma_w setting.
  CHECK(artifacts.table.rows.size() == (2 * 4 + 1) * cfg.run.sigma_w_list.size());
  CHECK(artifacts.replicate_failures == 0);
  // Analytic and empirical errors should be on the same scale.
  for (const auto& row : artifacts.table.rows) {
    double emp = std::get<double>(row[3]);
    double ana = std::get<double>(row[4]);
    CHECK(emp > 0.0);
    CHECK(ana > 0.0);
  }
}

TEST_CASE("benchmark 2 rows hold per-replicate differences") {
  auto cfg = tiny_config(2);
  auto artifacts = run_benchmark2(cfg);
  CHECK(artifacts.table.rows.size() == static_cast<size_t>(cfg.run.n_reps));
  for (const auto& row : artifacts.table.rows) {
    double se_mls = std::get<double>(row[2]);
    double se_bms = std::get<double>(row[3]);
    double d = std::get<double>(row[5]);
    CHECK(d == se_mls - se_bms);
  }
  auto& setting = artifacts.summary["settings"][0];
  CHECK(setting["frac_mls_beats_bms"].get<double>() >= 0.0);
  CHECK(setting["frac_mls_beats_bms"].get<double>() <= 1.0);
}

TEST_CASE("benchmark 3 analytic overlay is non-increasing in the horizon") {
  auto cfg = tiny_config(3);
  auto artifacts = run_benchmark3(cfg);
  for (auto& setting : artifacts.summary["settings"]) {
    double prev_bms = std::numeric_limits<double>::infinity();
    double prev_bal = std::numeric_limits<double>::infinity();
    for (auto& group : setting["by_horizon"]) {
      double bms = group["bms"]["analytic_mse"].get<double>();
      double bal = group["bal"]["analytic_mse"].get<double>();
      CHECK(bms <= prev_bms + 1e-12);
      CHECK(bal <= prev_bal + 1e-12);
      prev_bms = bms;
      prev_bal = bal;
    }
  }
}

TEST_CASE("benchmark 4 orders independent trajectories ahead of dependent ones") {
  auto cfg = tiny_config(4);
  cfg.model.horizon = 20;  // 21 samples split across tau settings
  cfg.run.tau_list = {1, 7, 21};
  cfg.run.n_reps = 60;
  cfg.run.design_iters = 60;
  auto artifacts = run_benchmark4(cfg);
  REQUIRE(artifacts.summary["settings"].size() == 3);
  double j1 = artifacts.summary["settings"][0]["analytic_mse"].get<double>();
  double j7 = artifacts.summary["settings"][1]["analytic_mse"].get<double>();
  double j21 = artifacts.summary["settings"][2]["analytic_mse"].get<double>();
  CHECK(j7 < j1);
  CHECK(j21 < j7);
  // 21 singletons, each optimizable except the first batch's initial state.
  CHECK(artifacts.summary["settings"][2]["batches"].get<int>() == 21);
  CHECK(artifacts.table.rows.size() == 3 * 60);
}

TEST_CASE("emitted files embed hash and seed and are byte-stable") {
  auto cfg = tiny_config(1);
  cfg.run.n_reps = 10;
  auto artifacts = run_benchmark1(cfg);
  auto dir = std::filesystem::temp_directory_path() / "wienerid_emit_test";
  std::filesystem::remove_all(dir);
  auto files = emit_results(artifacts, cfg, dir.string(), OutputFormat::Both);
  REQUIRE(files.size() == 2);
  std::string csv_first = slurp(files[0]);
  std::string json_first = slurp(files[1]);

  json summary = json::parse(json_first);
  CHECK(summary["config_hash"] == config_hash(cfg));
  CHECK(summary["seed"].get<std::uint64_t>() == cfg.run.seed);
  CHECK(summary["version"] == kLibraryVersion);
  CHECK(summary["config"] == config_json(cfg));

  // Re-running the benchmark and emission reproduces identical bytes.
  auto again = run_benchmark1(cfg);
  auto files2 = emit_results(again, cfg, dir.string(), OutputFormat::Both);
  CHECK(slurp(files2[0]) == csv_first);
  CHECK(slurp(files2[1]) == json_first);
  std::filesystem::remove_all(dir);
}

TEST_CASE("estimate and design runs produce usable reports") {
  auto cfg = tiny_config(1);
  cfg.model.horizon = 8;
  WienerModel model = materialize_model(cfg, 8, cfg.model.sigma_w_sq);
  InputTrajectory u = materialize_input(cfg, 8);
  auto design = design_for(model, u);
  VectorXd y = design.phi_bar.transpose() * model.prior.mu_theta;
  auto estimate = run_estimate(cfg, y);
  // Prior-predicted data keeps the estimate at the prior mean.
  for (int i = 0; i < 11; ++i) {
    CHECK(estimate["theta_hat"][i].get<double>() == doctest::Approx(5.0).epsilon(1e-9));
  }
  CHECK(estimate["analytic_error"].get<double>() ==
        doctest::Approx(estimate["posterior_trace"].get<double>()).epsilon(1e-12));

  cfg.run.design_iters = 25;
  auto designed = run_design(cfg);
  CHECK(designed["final_error"].get<double>() <= designed["initial_error"].get<double>());
}

TEST_CASE("validation battery passes") {
  auto report = run_validation(7);
  for (const auto& [name, ok] : report.checks) {
    INFO(name);
    CHECK(ok);
  }
  CHECK(report.all_passed());
}
