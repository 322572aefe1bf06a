#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "openchain/cumulants.hpp"
#include "openchain/io.hpp"
#include "openchain/model.hpp"
#include "openchain/stats.hpp"

namespace openchain {

inline constexpr const char* kConfigSchema = "openchain/v1";

/// Simulation and reporting settings of one experiment.
struct RunSettings {
  std::size_t horizon = 500'000;
  std::optional<std::size_t> burn_in;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> lags{1, 2, 5, 10};
  std::size_t batches = kDefaultBatches;
  std::optional<CountVector> initial;
  double z_threshold = 4.0;
  double abs_tol = 0.0;
};

/// One named grid axis; points are the cartesian product in axis order.
struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

/// A parsed config document. The model block is kept as JSON so that sweep
/// points can substitute their parameters before building.
struct ExperimentConfig {
  nlohmann::json document;
  std::string hash;
  std::filesystem::path base_dir;
  nlohmann::json model;
  RunSettings run;
  std::vector<SweepAxis> sweep;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> formats{"record", "summary", "report", "analytics"};

  bool wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
  }
};

/// One grid point: its parameter values and the directory suffix it writes to.
struct SweepPoint {
  std::map<std::string, double> params;
  std::string label;
};

namespace detail {

[[noreturn]] inline void invalid(const std::string& what) { throw Error(ErrorCode::kConfigInvalid, what); }

template <class T>
T get_as(const nlohmann::json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    invalid(where + ": " + e.what());
  }
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) invalid(where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) invalid(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().is_array() ? j.front().size() : 0);
  if (cols == 0) invalid(where + ": rows must be non-empty arrays");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) invalid(where + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = get_as<double>(row[static_cast<std::size_t>(c)], where);
    }
  }
  return m;
}

inline CountVector counts_from_json(const nlohmann::json& j, const std::string& where) {
  const auto v = get_as<std::vector<Count>>(j, where);
  return Eigen::Map<const CountVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline JointTable table_from_json(const nlohmann::json& j, const std::string& where) {
  const auto& support = field(j, "support", where);
  if (!support.is_array()) invalid(where + ": support must be an array");
  std::vector<CountVector> vecs;
  for (const auto& v : support) vecs.push_back(counts_from_json(v, where + ".support"));
  return JointTable(std::move(vecs), get_as<std::vector<double>>(field(j, "probs", where), where + ".probs"));
}

inline IncomingProtocol protocol_from_json(const nlohmann::json& j, const std::string& where) {
  const auto variant = get_as<std::string>(field(j, "variant", where), where + ".variant");
  if (variant == "constant") return IncomingProtocol::constant(counts_from_json(field(j, "value", where), where));
  if (variant == "bernoulli") {
    return IncomingProtocol::bernoulli(get_as<std::vector<double>>(field(j, "p", where), where + ".p"));
  }
  if (variant == "iid_product") {
    std::vector<ScalarTable> marginals;
    for (const auto& m : field(j, "marginals", where)) {
      marginals.emplace_back(get_as<std::vector<Count>>(field(m, "values", where), where + ".values"),
                             get_as<std::vector<double>>(field(m, "probs", where), where + ".probs"));
    }
    return IncomingProtocol::iid_product(std::move(marginals));
  }
  if (variant == "joint_table") return IncomingProtocol::joint_table(table_from_json(j, where));
  if (variant == "markov_modulated") {
    std::vector<JointTable> regimes;
    for (const auto& r : field(j, "regimes", where)) regimes.push_back(table_from_json(r, where + ".regimes"));
    return IncomingProtocol::markov_modulated(matrix_from_json(field(j, "transition", where), where), regimes);
  }
  if (variant == "three_state_example") {
    return three_state_example(get_as<double>(field(j, "p", where), where + ".p"));
  }
  invalid(where + ": unknown protocol variant \"" + variant + "\"");
}

inline StructureCheck structure_from_json(const nlohmann::json& model, StructureCheck fallback) {
  if (!model.contains("structure_checks")) return fallback;
  const auto s = get_as<std::string>(model.at("structure_checks"), "model.structure_checks");
  if (s == "strict") return StructureCheck::kStrict;
  if (s == "spectral_only") return StructureCheck::kSpectralOnly;
  invalid("model.structure_checks must be \"strict\" or \"spectral_only\"");
}

inline double param(const nlohmann::json& model, const std::map<std::string, double>& overrides,
                    const std::string& name) {
  if (auto it = overrides.find(name); it != overrides.end()) return it->second;
  const auto& params = field(model, "params", "model");
  return get_as<double>(field(params, name.c_str(), "model.params"), "model.params." + name);
}

}  // namespace detail

/// The raw jump matrix of a model block (inline, from a file, or a preset).
inline Matrix jump_from_json(const nlohmann::json& model, const std::filesystem::path& base_dir,
                             const std::map<std::string, double>& overrides = {}) {
  if (model.contains("preset")) {
    const auto preset = detail::get_as<std::string>(model.at("preset"), "model.preset");
    const double q = detail::param(model, overrides, "q");
    if (preset == "one_vertex") return Matrix::Constant(1, 1, q);
    if (preset == "three_state") return three_state_jump(q);
    detail::invalid("unknown preset \"" + preset + "\"");
  }
  if (model.contains("jump")) return detail::matrix_from_json(model.at("jump"), "model.jump");
  if (model.contains("jump_file")) {
    const auto path = base_dir / detail::get_as<std::string>(model.at("jump_file"), "model.jump_file");
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorCode::kConfigParse, "cannot read jump file " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kConfigParse, "jump file " + path.string() + ": " + e.what());
    }
    return detail::matrix_from_json(j, "jump_file");
  }
  detail::invalid("model needs one of \"preset\", \"jump\", \"jump_file\"");
}

/// Builds the model of one grid point. Presets: "one_vertex" (Q = [q],
/// Bernoulli(p) inflow) and "three_state" (symmetric Q with off-diagonal q,
/// the correlated three-state inflow with parameter p).
inline OpenChainModel model_from_json(const nlohmann::json& model, const std::filesystem::path& base_dir,
                                      const std::map<std::string, double>& overrides = {}) {
  const Matrix raw = jump_from_json(model, base_dir, overrides);
  const bool degenerate = (raw.array() == 0.0).all();
  const StructureCheck check =
      detail::structure_from_json(model, degenerate ? StructureCheck::kSpectralOnly : StructureCheck::kStrict);
  JumpMatrix jump = JumpMatrix::validate(raw, check);

  if (model.contains("preset")) {
    const auto preset = model.at("preset").get<std::string>();
    const double p = detail::param(model, overrides, "p");
    if (preset == "one_vertex") return OpenChainModel(std::move(jump), IncomingProtocol::bernoulli({p}));
    return OpenChainModel(std::move(jump), three_state_example(p));
  }
  if (model.contains("schedule")) {
    std::vector<ProtocolSchedule::Segment> segments;
    for (const auto& seg : model.at("schedule")) {
      segments.push_back({detail::get_as<std::size_t>(detail::field(seg, "duration", "schedule"), "schedule.duration"),
                          detail::protocol_from_json(detail::field(seg, "protocol", "schedule"), "schedule.protocol")});
    }
    return OpenChainModel(std::move(jump), ProtocolSchedule(std::move(segments)));
  }
  return OpenChainModel(std::move(jump), detail::protocol_from_json(detail::field(model, "protocol", "model"),
                                                                    "model.protocol"));
}

/// Parses a config document. Malformed JSON raises ConfigParse; a document
/// that parses but does not fit the schema raises ConfigInvalid.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  ExperimentConfig cfg;
  try {
    cfg.document = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfigParse, e.what());
  }
  const auto& doc = cfg.document;
  if (!doc.is_object()) throw Error(ErrorCode::kConfigParse, "config must be a JSON object");
  const auto schema = detail::get_as<std::string>(detail::field(doc, "schema", "config"), "schema");
  if (schema != kConfigSchema) detail::invalid("unsupported schema \"" + schema + "\"");
  cfg.hash = hex64(fnv1a64(doc.dump()));
  cfg.base_dir = base_dir;
  cfg.model = detail::field(doc, "model", "config");

  if (doc.contains("run")) {
    const auto& run = doc.at("run");
    if (run.contains("horizon")) cfg.run.horizon = detail::get_as<std::size_t>(run.at("horizon"), "run.horizon");
    if (run.contains("burn_in")) cfg.run.burn_in = detail::get_as<std::size_t>(run.at("burn_in"), "run.burn_in");
    if (run.contains("seed")) cfg.run.seed = detail::get_as<std::uint64_t>(run.at("seed"), "run.seed");
    if (run.contains("lags")) cfg.run.lags = detail::get_as<std::vector<std::size_t>>(run.at("lags"), "run.lags");
    if (run.contains("batches")) cfg.run.batches = detail::get_as<std::size_t>(run.at("batches"), "run.batches");
    if (run.contains("initial")) cfg.run.initial = detail::counts_from_json(run.at("initial"), "run.initial");
    if (run.contains("z_threshold")) cfg.run.z_threshold = detail::get_as<double>(run.at("z_threshold"), "run.z_threshold");
    if (run.contains("abs_tol")) cfg.run.abs_tol = detail::get_as<double>(run.at("abs_tol"), "run.abs_tol");
  }
  if (doc.contains("sweep")) {
    const auto& sweep = doc.at("sweep");
    if (!sweep.is_object()) detail::invalid("sweep must be an object of parameter grids");
    if (!cfg.model.contains("preset")) detail::invalid("sweep needs a preset model");
    for (const auto& [name, grid] : sweep.items()) {
      SweepAxis axis{name, {}};
      if (grid.is_array()) {
        axis.values = detail::get_as<std::vector<double>>(grid, "sweep." + name);
      } else {
        const double start = detail::get_as<double>(detail::field(grid, "start", "sweep." + name), "sweep.start");
        const double stop = detail::get_as<double>(detail::field(grid, "stop", "sweep." + name), "sweep.stop");
        const auto num = detail::get_as<std::size_t>(detail::field(grid, "num", "sweep." + name), "sweep.num");
        if (num < 1) detail::invalid("sweep." + name + ".num must be positive");
        for (std::size_t k = 0; k < num; ++k) {
          axis.values.push_back(num == 1 ? start
                                         : start + (stop - start) * static_cast<double>(k) / static_cast<double>(num - 1));
        }
      }
      if (axis.values.empty()) detail::invalid("sweep." + name + " is empty");
      cfg.sweep.push_back(std::move(axis));
    }
  }
  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    if (out.contains("directory")) {
      cfg.output_dir = detail::get_as<std::string>(out.at("directory"), "output.directory");
    }
    if (out.contains("formats")) {
      cfg.formats = detail::get_as<std::vector<std::string>>(out.at("formats"), "output.formats");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kConfigParse, "cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

/// Grid points in row-major order over the axes taken in name order (the last
/// name varies fastest); a config without a sweep has
/// one unlabeled point.
inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
  std::vector<SweepPoint> points{SweepPoint{}};
  for (const auto& axis : cfg.sweep) {
    std::vector<SweepPoint> next;
    for (const auto& base : points) {
      for (double v : axis.values) {
        SweepPoint p = base;
        p.params[axis.name] = v;
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  if (!cfg.sweep.empty()) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      std::string label = "point_" + std::string(k < 10 ? "00" : k < 100 ? "0" : "") + std::to_string(k);
      points[k].label = label;
    }
  }
  return points;
}

}  // namespace openchain
