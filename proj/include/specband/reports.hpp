#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace specband {

// Accuracy table with per-seed detail. mean/stddev are row x col; per_seed
// is seed x row x col.
struct ReportMatrix {
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> stddev;
  std::vector<std::vector<std::vector<double>>> per_seed;

  static ReportMatrix from_runs(const std::vector<std::vector<std::vector<double>>>& per_seed);
};

struct ExperimentReport {
  std::string kind;  // bandacc | xband | sdg | ablation | sweep
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::map<std::string, ReportMatrix> matrices;
  std::vector<std::uint64_t> seeds;
  std::string config_hash;
  nlohmann::json extra = nlohmann::json::object();

  nlohmann::json to_json() const;
  // <dir>/<kind>.json, plus <dir>/<kind>_<matrix>.csv mirrors when csv is
  // set. Validates against the shipped schema before writing.
  void write(const std::filesystem::path& dir, bool csv) const;
};

// Structural validation mirroring schemas/report.schema.json: required
// keys, types, axis-consistent matrix dimensions, entries within [0, 1].
// Returns an empty string when valid, else the first problem found.
std::string validate_report_json(const nlohmann::json& j);

// FNV-1a over the canonical (sorted-key) dump, hex-encoded.
std::string config_hash_hex(const nlohmann::json& config);

}  // namespace specband
