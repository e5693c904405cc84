#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wienerid/experiment.hpp"

namespace wienerid {

void Table::append(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " cells, table has " +
                                std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

namespace {

std::string format_cell(const Cell& cell) {
  if (std::holds_alternative<double>(cell)) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(cell));
    return buf;
  }
  if (std::holds_alternative<long long>(cell)) {
    return std::to_string(std::get<long long>(cell));
  }
  const std::string& text = std::get<std::string>(cell);
  if (text.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : text) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    quoted += '"';
    return quoted;
  }
  return text;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed for '" + path + "'");
  }
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_cell(row[c]);
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string> emit_results(const BenchmarkArtifacts& artifacts,
                                      const ExperimentConfig& cfg, const std::string& out_dir,
                                      OutputFormat format) {
  if (artifacts.table.rows.empty() && artifacts.summary.empty()) {
    throw std::invalid_argument("refusing to emit empty results");
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;

  if (format == OutputFormat::Csv || format == OutputFormat::Both) {
    std::string path = out_dir + "/" + artifacts.name + ".csv";
    // Two comment lines tie every file back to the exact run that made it.
    std::string content = "# config_hash=" + config_hash(cfg) + "\n# seed=" +
                          std::to_string(cfg.run.seed) + "\n" + to_csv(artifacts.table);
    write_file(path, content);
    written.push_back(path);
  }
  if (format == OutputFormat::Json || format == OutputFormat::Both) {
    nlohmann::json summary = artifacts.summary;
    summary["config"] = config_json(cfg);
    summary["config_hash"] = config_hash(cfg);
    summary["seed"] = cfg.run.seed;
    summary["version"] = kLibraryVersion;
    std::string path = out_dir + "/" + artifacts.name + "_summary.json";
    write_file(path, summary.dump(2) + "\n");
    written.push_back(path);
  }
  if (artifacts.replicate_failures > 0) {
    std::string path = out_dir + "/" + artifacts.name + "_failures.json";
    write_file(path, artifacts.failure_manifest.dump(2) + "\n");
    written.push_back(path);
  }
  return written;
}

}  // namespace wienerid
