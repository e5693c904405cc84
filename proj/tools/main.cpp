#include <clocale>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wienerid/experiment.hpp"

namespace {

using namespace wienerid;

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNumericalError = 2;
constexpr int kExitPartialFailures = 3;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  int reps = 0;
  int threads = 0;
  bool seed_set = false, reps_set = false, threads_set = false, out_set = false, format_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file; defaults apply when omitted");
  cmd->add_option("--seed", flags.seed, "master seed")->each([&](const std::string&) {
    flags.seed_set = true;
  });
  cmd->add_option("--reps", flags.reps, "replicate count")->each([&](const std::string&) {
    flags.reps_set = true;
  });
  cmd->add_option("--out", flags.out, "output directory")->each([&](const std::string&) {
    flags.out_set = true;
  });
  cmd->add_option("--format", flags.format, "output format: csv, json, or both")
      ->check(CLI::IsMember({"csv", "json", "both"}))
      ->each([&](const std::string&) { flags.format_set = true; });
  cmd->add_option("--threads", flags.threads, "worker threads")->each([&](const std::string&) {
    flags.threads_set = true;
  });
}

ExperimentConfig load_config(const CommonFlags& flags) {
  ExperimentConfig cfg =
      flags.config_path.empty() ? default_config() : parse_config(flags.config_path);
  if (flags.seed_set) cfg.run.seed = flags.seed;
  if (flags.reps_set) cfg.run.n_reps = flags.reps;
  if (flags.out_set) cfg.run.out = flags.out;
  if (flags.threads_set) cfg.run.threads = flags.threads;
  if (flags.format_set) {
    cfg.run.format = flags.format == "csv"
                         ? OutputFormat::Csv
                         : (flags.format == "json" ? OutputFormat::Json : OutputFormat::Both);
  }
  return cfg;
}

void write_report(const ExperimentConfig& cfg, const std::string& name, nlohmann::json report) {
  BenchmarkArtifacts artifacts;
  artifacts.name = name;
  artifacts.summary = std::move(report);
  auto files = emit_results(artifacts, cfg, cfg.run.out, OutputFormat::Json);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
}

int run_benchmark_command(const CommonFlags& flags, int benchmark_id) {
  ExperimentConfig cfg = load_config(flags);
  if (benchmark_id != 0) cfg.run.benchmark = benchmark_id;
  auto artifacts = run_benchmark(cfg);
  auto files = emit_results(artifacts, cfg, cfg.run.out, cfg.run.format);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  if (artifacts.replicate_failures > 0) {
    std::cerr << artifacts.replicate_failures
              << " replicate evaluations failed; see the failure manifest\n";
    return kExitPartialFailures;
  }
  return kExitOk;
}

int run_estimate_command(const CommonFlags& flags, const std::string& data_path) {
  ExperimentConfig cfg = load_config(flags);
  std::ifstream in(data_path);
  if (!in) {
    throw std::invalid_argument("cannot open data file '" + data_path + "'");
  }
  nlohmann::json data = nlohmann::json::parse(in);
  if (!data.contains("y") || !data.at("y").is_array()) {
    throw std::invalid_argument("data file must hold an object with a numeric array 'y'");
  }
  auto values = data.at("y").get<std::vector<double>>();
  VectorXd y = Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  write_report(cfg, "estimate", run_estimate(cfg, y));
  return kExitOk;
}

int run_design_command(const CommonFlags& flags) {
  ExperimentConfig cfg = load_config(flags);
  write_report(cfg, "design", run_design(cfg));
  return kExitOk;
}

int run_validate_command(const CommonFlags& flags) {
  ExperimentConfig cfg = load_config(flags);
  auto report = run_validation(cfg.run.seed);
  for (const auto& [name, ok] : report.checks) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  }
  return report.all_passed() ? kExitOk : kExitNumericalError;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_NUMERIC, "C");
  CLI::App app{"Bayesian identification of basis-expanded output maps under known linear dynamics"};
  app.require_subcommand(1);

  CommonFlags flags;
  int benchmark_id = 0;

  CLI::App* estimate = app.add_subcommand("estimate", "one-shot estimation on provided data");
  std::string data_path;
  estimate->add_option("--data", data_path, "JSON file with the measurement array 'y'")
      ->required();
  add_common(estimate, flags);

  CLI::App* design = app.add_subcommand("design", "input design without measurements");
  add_common(design, flags);

  CLI::App* benchmark = app.add_subcommand("benchmark", "run experiment benchmark 1..4");
  benchmark->add_option("id", benchmark_id, "benchmark id, overrides run.benchmark")
      ->check(CLI::Range(1, 4));
  add_common(benchmark, flags);

  CLI::App* validate = app.add_subcommand("validate", "run the invariant suite");
  add_common(validate, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed()) return run_estimate_command(flags, data_path);
    if (design->parsed()) return run_design_command(flags);
    if (benchmark->parsed()) return run_benchmark_command(flags, benchmark_id);
    if (validate->parsed()) return run_validate_command(flags);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumericalError;
  }
  return kExitOk;
}
