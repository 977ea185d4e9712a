// report.hpp — experiment reports: JSON records and versioned CSV tables.
//
// Determinism contract: the "metrics" subtree of a report is a pure
// function of the experiment config (wall-clock lives outside it), and
// numbers are rendered with shortest round-trip formatting, so identical
// configs produce byte-identical metric payloads and CSV bytes. File names
// embed a content hash of the canonical config. CSV files start with a
// versioned header row; schema changes bump the version.

#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsgd/common.hpp"

namespace dsgd::harness {

using json = nlohmann::json;

inline constexpr const char* kCsvVersion = "v1";

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

struct CsvTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != columns.size())
      throw ShapeError("csv row width " + std::to_string(row.size()) +
                       " != " + std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }
};

struct Report {
  std::string kind;
  json config_echo;
  std::string config_hash;
  json metrics;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
  std::vector<CsvTable> tables;

  // The determinism payload: everything except wall-clock.
  std::string metric_payload() const {
    json p;
    p["kind"] = kind;
    p["config_hash"] = config_hash;
    p["metrics"] = metrics;
    p["warnings"] = warnings;
    return p.dump();
  }

  json to_json() const {
    json j;
    j["kind"] = kind;
    j["config"] = config_echo;
    j["config_hash"] = config_hash;
    j["metrics"] = metrics;
    j["warnings"] = warnings;
    j["wall_seconds"] = wall_seconds;
    return j;
  }
};

inline std::string config_hash_of(const json& config) {
  return hex64(fnv1a64(config.dump()));
}

// ── Emission ──────────────────────────────────────────────────────────────

inline std::vector<std::string> emit_report(const Report& report,
                                            const std::string& dir,
                                            bool write_json, bool write_csv) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestError("cannot create output directory '" + dir + "'");
  std::vector<std::string> written;
  const std::string base = report.kind + "-" + report.config_hash;
  if (write_json) {
    const std::string path = (fs::path(dir) / (base + ".json")).string();
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write '" + path + "'");
    out << report.to_json().dump(2) << '\n';
    written.push_back(path);
  }
  if (write_csv) {
    for (const auto& table : report.tables) {
      const std::string path =
          (fs::path(dir) / (base + "-" + table.name + ".csv")).string();
      std::ofstream out(path);
      if (!out) throw IngestError("cannot write '" + path + "'");
      out << "# dsgdlab-csv " << kCsvVersion << " kind=" << report.kind
          << " table=" << table.name << '\n';
      for (std::size_t c = 0; c < table.columns.size(); ++c)
        out << (c ? "," : "") << table.columns[c];
      out << '\n';
      for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
      }
      written.push_back(path);
    }
  }
  return written;
}

// Bundled CSV reader; round-trips emit_report output losslessly for
// finite values.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# dsgdlab-csv ", 0) != 0)
    throw IngestError("'" + path + "' is not a dsgdlab csv (missing version header)");
  CsvTable table;
  {
    std::istringstream hs(line.substr(2));
    std::string tag, version, field;
    hs >> tag >> version;
    if (version != kCsvVersion)
      throw IngestError("csv version '" + version + "' unsupported");
    while (hs >> field)
      if (field.rfind("table=", 0) == 0) table.name = field.substr(6);
  }
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) throw IngestError("'" + path + "': missing column row");
  table.columns = split(line);
  while (std::getline(in, line))
    if (!line.empty()) table.add_row(split(line));
  return table;
}

// Structural check mirroring docs/report.schema.json.
inline void validate_report_shape(const json& j) {
  const char* required[] = {"kind", "config", "config_hash", "metrics",
                            "warnings", "wall_seconds"};
  for (const char* key : required)
    if (!j.contains(key))
      throw ValidationError(std::string("report missing key '") + key + "'");
  if (!j["kind"].is_string() || !j["config_hash"].is_string() ||
      !j["config"].is_object() || !j["metrics"].is_object() ||
      !j["warnings"].is_array() || !j["wall_seconds"].is_number())
    throw ValidationError("report field has the wrong type");
}

}  // namespace dsgd::harness
