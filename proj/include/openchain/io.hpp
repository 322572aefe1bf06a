#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "openchain/simulate.hpp"
#include "openchain/types.hpp"

namespace openchain {

using Json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline std::string format_number(Count x) { return std::to_string(x); }

/// The first line of every output file: `# config_hash=<hex> seed=<u64|none>`.
struct Provenance {
  std::string config_hash;
  std::optional<std::uint64_t> seed;

  std::string line() const {
    return "# config_hash=" + config_hash + " seed=" + (seed ? std::to_string(*seed) : std::string("none"));
  }

  void stamp(Json& j) const {
    j["config_hash"] = config_hash;
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
  }
};

/// Header row plus string cells; rendered with the provenance comment first.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  template <class... Cells>
  void add(const Cells&... cells) {
    std::vector<std::string> row;
    (row.push_back(cell(cells)), ...);
    require(row.size() == columns_.size(), ErrorCode::kShapeMismatch, "CSV row width differs from header");
    rows_.push_back(std::move(row));
  }

  void add_row(std::vector<std::string> row) {
    require(row.size() == columns_.size(), ErrorCode::kShapeMismatch, "CSV row width differs from header");
    rows_.push_back(std::move(row));
  }

  std::size_t size() const { return rows_.size(); }

  std::string render(const Provenance& provenance) const {
    std::string out = provenance.line() + "\n";
    append_line(out, columns_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double x) { return format_number(x); }
  static std::string cell(Count x) { return std::to_string(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out.push_back(',');
      out += cells[k];
    }
    out.push_back('\n');
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(os), ErrorCode::kInvalidArgument, "cannot open " + path.string() + " for writing");
  os << content;
  require(static_cast<bool>(os), ErrorCode::kInvalidArgument, "failed writing " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(std::move(row));
  }
  return a;
}

/// Columns: t, N_1..N_S, J_1..J_S, U_1..U_S, O, burn_in_flag (1 for rows excluded
/// from statistics).
inline std::string record_csv(const SimulationRecord& record, const Provenance& provenance) {
  const Eigen::Index s = record.states();
  std::string out = provenance.line() + "\nt";
  for (const char* prefix : {"N_", "J_", "U_"}) {
    for (Eigen::Index i = 1; i <= s; ++i) out += "," + std::string(prefix) + std::to_string(i);
  }
  out += ",O,burn_in_flag\n";
  out.reserve(out.size() + record.horizon() * static_cast<std::size_t>(8 * s + 12));
  char buf[24];
  auto put = [&](Count v) {
    out.push_back(',');
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
  };
  for (Eigen::Index t = 0; t < record.counts.rows(); ++t) {
    out += std::to_string(t);
    for (Eigen::Index i = 0; i < s; ++i) put(record.counts(t, i));
    for (Eigen::Index i = 0; i < s; ++i) put(record.inflow(t, i));
    for (Eigen::Index i = 0; i < s; ++i) put(record.outflow(t, i));
    put(record.outflow_total(t));
    put(record.in_burn_in(static_cast<std::size_t>(t)) ? 1 : 0);
    out.push_back('\n');
  }
  return out;
}

}  // namespace openchain
