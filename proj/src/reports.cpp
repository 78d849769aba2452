#include "specband/reports.hpp"

#include <cmath>
#include <fstream>

#include "specband/common.hpp"
#include "specband/rng.hpp"

namespace specband {

ReportMatrix ReportMatrix::from_runs(
    const std::vector<std::vector<std::vector<double>>>& per_seed) {
  if (per_seed.empty()) throw invalid_input("report: no per-seed matrices");
  const std::size_t rows = per_seed[0].size();
  const std::size_t cols = rows ? per_seed[0][0].size() : 0;
  ReportMatrix m;
  m.per_seed = per_seed;
  m.mean.assign(rows, std::vector<double>(cols, 0.0));
  m.stddev.assign(rows, std::vector<double>(cols, 0.0));
  const double n = static_cast<double>(per_seed.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (const auto& run : per_seed) s += run[r][c];
      const double mu = s / n;
      double var = 0.0;
      for (const auto& run : per_seed) var += (run[r][c] - mu) * (run[r][c] - mu);
      m.mean[r][c] = mu;
      m.stddev[r][c] = std::sqrt(var / n);
    }
  return m;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json jm = nlohmann::json::object();
  for (const auto& [name, m] : matrices)
    jm[name] = {{"mean", m.mean}, {"stddev", m.stddev}, {"per_seed", m.per_seed}};
  return {{"kind", kind},
          {"row_labels", row_labels},
          {"col_labels", col_labels},
          {"matrices", jm},
          {"seeds", seeds},
          {"config_hash", config_hash},
          {"extra", extra}};
}

void ExperimentReport::write(const std::filesystem::path& dir, bool csv) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("report: cannot create " + dir.string());

  const nlohmann::json j = to_json();
  const std::string problem = validate_report_json(j);
  if (!problem.empty()) throw std::logic_error("report failed self-validation: " + problem);

  {
    std::ofstream f(dir / (kind + ".json"));
    if (!f) throw io_error("report: cannot write " + (dir / (kind + ".json")).string());
    f << j.dump(2) << "\n";
  }
  if (!csv) return;
  for (const auto& [name, m] : matrices) {
    std::ofstream f(dir / (kind + "_" + name + ".csv"));
    if (!f) throw io_error("report: cannot write csv");
    f << "row";
    for (const auto& c : col_labels) f << "," << c;
    f << "\n";
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
      f << row_labels[r];
      for (std::size_t c = 0; c < col_labels.size(); ++c) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", m.mean[r][c]);
        f << "," << buf;
      }
      f << "\n";
    }
  }
}

namespace {

std::string check_matrix(const nlohmann::json& m, std::size_t rows, std::size_t cols,
                         const std::string& where) {
  if (!m.is_array() || m.size() != rows) return where + ": row count does not match axes";
  for (const auto& row : m) {
    if (!row.is_array() || row.size() != cols) return where + ": column count does not match axes";
    for (const auto& v : row) {
      if (!v.is_number()) return where + ": non-numeric entry";
      const double d = v.get<double>();
      if (!(d >= 0.0 && d <= 1.0)) return where + ": entry outside [0,1]";
    }
  }
  return "";
}

}  // namespace

std::string validate_report_json(const nlohmann::json& j) {
  for (const char* key :
       {"kind", "row_labels", "col_labels", "matrices", "seeds", "config_hash", "extra"})
    if (!j.contains(key)) return std::string("missing key '") + key + "'";
  if (!j["kind"].is_string()) return "kind must be a string";
  const std::string kind = j["kind"];
  if (kind != "bandacc" && kind != "xband" && kind != "sdg" && kind != "ablation" &&
      kind != "sweep")
    return "unknown kind '" + kind + "'";
  if (!j["row_labels"].is_array() || !j["col_labels"].is_array())
    return "axis labels must be arrays";
  if (!j["seeds"].is_array() || j["seeds"].empty()) return "seeds must be a non-empty array";
  if (!j["config_hash"].is_string()) return "config_hash must be a string";
  if (!j["matrices"].is_object() || j["matrices"].empty())
    return "matrices must be a non-empty object";

  const std::size_t rows = j["row_labels"].size();
  const std::size_t cols = j["col_labels"].size();
  const std::size_t nseeds = j["seeds"].size();
  for (const auto& [name, m] : j["matrices"].items()) {
    for (const char* key : {"mean", "stddev", "per_seed"})
      if (!m.contains(key)) return "matrix '" + name + "' missing '" + key + "'";
    auto problem = check_matrix(m["mean"], rows, cols, "matrix '" + name + "' mean");
    if (!problem.empty()) return problem;
    if (!m["stddev"].is_array() || m["stddev"].size() != rows)
      return "matrix '" + name + "' stddev shape";
    if (!m["per_seed"].is_array() || m["per_seed"].size() != nseeds)
      return "matrix '" + name + "' per_seed count does not match seeds";
    for (const auto& run : m["per_seed"]) {
      problem = check_matrix(run, rows, cols, "matrix '" + name + "' per_seed");
      if (!problem.empty()) return problem;
    }
  }
  return "";
}

std::string config_hash_hex(const nlohmann::json& config) {
  const std::string dump = config.dump();
  const std::uint64_t h = hash_str(dump);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace specband
