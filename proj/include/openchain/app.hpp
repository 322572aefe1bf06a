#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "openchain/config.hpp"
#include "openchain/cumulants.hpp"
#include "openchain/io.hpp"
#include "openchain/mgf.hpp"
#include "openchain/simulate.hpp"
#include "openchain/stats.hpp"

namespace openchain {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInvalid = 2, kExitComparison = 3 };

inline constexpr std::uint64_t kDefaultFigureSeed = 1729;
inline constexpr std::size_t kFigureHorizon = 500'000;

/// Command-line overrides shared by all subcommands.
struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<std::size_t>> lags;
  std::optional<double> tol;
  std::optional<std::size_t> horizon;
};

inline int exit_code_for(const Error& e) { return e.code() == ErrorCode::kConfigParse ? kExitUsage : kExitInvalid; }

/// OPENCHAIN_THREADS if set to a positive integer, else the hardware count.
inline std::size_t thread_cap() {
  if (const char* env = std::getenv("OPENCHAIN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs f(0..n-1) on up to `threads` workers. The exception of the lowest
/// failing index is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(n, 1));
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Loads the config and applies overrides. Overrides other than seed and
/// output directory are folded into the config hash.
inline ExperimentConfig resolve_config(const CommandOptions& opts) {
  ExperimentConfig cfg = load_config(opts.config);
  nlohmann::json overrides = nlohmann::json::object();
  if (opts.seed) cfg.run.seed = opts.seed;
  if (opts.out) cfg.output_dir = *opts.out;
  if (opts.lags) {
    cfg.run.lags = *opts.lags;
    overrides["lags"] = *opts.lags;
  }
  if (opts.tol) {
    cfg.run.abs_tol = *opts.tol;
    overrides["tol"] = *opts.tol;
  }
  if (opts.horizon) {
    cfg.run.horizon = *opts.horizon;
    overrides["horizon"] = *opts.horizon;
  }
  if (!overrides.empty()) cfg.hash = hex64(fnv1a64(cfg.document.dump() + overrides.dump()));
  return cfg;
}

inline std::filesystem::path point_dir(const ExperimentConfig& cfg, const SweepPoint& pt) {
  return pt.label.empty() ? cfg.output_dir : cfg.output_dir / pt.label;
}

inline Json params_json(const SweepPoint& pt) {
  Json j = Json::object();
  for (const auto& [k, v] : pt.params) j[k] = v;
  return j;
}

inline std::string join_numbers(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_number(v(i));
  return s;
}

// ---------------------------------------------------------------- validate

inline int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = resolve_config(opts);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
  out << "config_hash=" << cfg.hash << '\n';
  int code = kExitOk;
  for (const auto& pt : sweep_points(cfg)) {
    if (!pt.label.empty()) out << "[" << pt.label << "]\n";
    try {
      const Matrix raw = jump_from_json(cfg.model, cfg.base_dir, pt.params);
      const JumpDiagnostics d = diagnose_jump_matrix(raw);
      out << "states: " << raw.rows() << '\n';
      out << "spectral_radius: " << format_number(d.spectral_radius) << '\n';
      out << "escape: " << join_numbers(d.escape_vector) << '\n';
      out << "irreducible: " << (d.irreducible ? "yes" : "no") << '\n';
      out << "aperiodic: " << (d.aperiodic ? "yes" : "no") << '\n';
      const OpenChainModel model = model_from_json(cfg.model, cfg.base_dir, pt.params);
      out << "stationary_protocol: " << (model.is_stationary() ? "yes" : "no") << '\n';
      out << "status: valid\n";
    } catch (const Error& e) {
      out << "status: invalid (" << to_string(e.code()) << ")\n";
      err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
      code = std::max(code, exit_code_for(e));
    }
  }
  return code;
}

// ----------------------------------------------------------------- analyze

/// Analytic report of one stationary model; also fills the CSV tables.
inline Json analytics_report(const OpenChainModel& model, const std::vector<std::size_t>& lag_list,
                             CsvTable* state_table = nullptr, CsvTable* covariance_table = nullptr,
                             CsvTable* lag_table = nullptr, CsvTable* mgf_table = nullptr) {
  const CumulantState stat = stationary_cumulants(model);
  const Vector& e = model.escape().escape_vector;
  const OutgoingMoments outgoing = outgoing_moments(stat, model.escape());
  std::optional<Matrix> kappa;
  try {
    kappa = spatial_correlation(stat.covariance);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::kZeroVarianceState) throw;
  }

  Json j;
  j["model_fingerprint"] = model_fingerprint(model);
  j["states"] = model.size();
  j["spectral_radius"] = model.jump().spectral_radius();
  j["escape"] = to_json(e);
  j["stationary_mean"] = to_json(stat.mean);
  j["stationary_variance"] = to_json(stat.covariance);
  j["kappa"] = kappa ? to_json(*kappa) : Json(nullptr);
  Json lags = Json::array();
  std::vector<std::size_t> sorted = lag_list;
  sorted.push_back(0);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t s : sorted) {
    const Matrix cov = lag_covariance(stat.covariance, model.jump(), s);
    std::optional<Matrix> corr;
    if (kappa) corr = time_correlation(stat.covariance, model.jump(), s);
    Json entry;
    entry["s"] = s;
    entry["lag_covariance"] = to_json(cov);
    entry["time_correlation"] = corr ? to_json(*corr) : Json(nullptr);
    lags.push_back(std::move(entry));
    if (lag_table) {
      for (Eigen::Index a = 0; a < cov.rows(); ++a) {
        for (Eigen::Index b = 0; b < cov.cols(); ++b) {
          lag_table->add(s, static_cast<std::size_t>(a + 1), static_cast<std::size_t>(b + 1), cov(a, b),
                         corr ? format_number((*corr)(a, b)) : std::string("nan"));
        }
      }
    }
  }
  j["lags"] = std::move(lags);
  Json og;
  og["mean_per_state"] = to_json(outgoing.mean_per_state);
  og["covariance"] = to_json(outgoing.covariance);
  og["mean_total"] = outgoing.mean_total;
  og["var_total"] = outgoing.var_total;
  j["outgoing"] = std::move(og);

  if (state_table) {
    for (Eigen::Index i = 0; i < stat.mean.size(); ++i) {
      state_table->add(static_cast<std::size_t>(i + 1), stat.mean(i), e(i), outgoing.mean_per_state(i),
                       outgoing.covariance(i, i));
    }
  }
  if (covariance_table) {
    for (Eigen::Index a = 0; a < stat.covariance.rows(); ++a) {
      for (Eigen::Index b = 0; b < stat.covariance.cols(); ++b) {
        covariance_table->add(static_cast<std::size_t>(a + 1), static_cast<std::size_t>(b + 1),
                              stat.covariance(a, b), kappa ? format_number((*kappa)(a, b)) : std::string("nan"));
      }
    }
  }

  if (model.protocol().is_modulated()) {
    j["mgf"] = nullptr;
  } else {
    const LogMgfEvaluator counts = stationary_log_mgf_evaluator(model);
    const LogMgfEvaluator escapes = outgoing_log_mgf_evaluator(model);
    const NumericCumulants nc = numeric_cumulants(counts);
    const NumericCumulants no = numeric_cumulants(escapes);
    Json mg;
    mg["truncation_depth"] = counts.truncation_depth;
    mg["domain_radius"] = counts.domain_radius;
    mg["numeric_mean"] = to_json(nc.mean);
    mg["numeric_covariance"] = to_json(nc.covariance);
    mg["numeric_outgoing_mean"] = to_json(no.mean);
    mg["numeric_outgoing_covariance"] = to_json(no.covariance);
    mg["max_deviation"] = std::max({(nc.mean - stat.mean).lpNorm<Eigen::Infinity>(),
                                    max_abs(nc.covariance - stat.covariance),
                                    (no.mean - outgoing.mean_per_state).lpNorm<Eigen::Infinity>(),
                                    max_abs(no.covariance - outgoing.covariance)});
    j["mgf"] = std::move(mg);
    if (mgf_table) {
      constexpr int kSamples = 21;
      for (int k = 0; k < kSamples; ++k) {
        const double a = counts.domain_radius * (2.0 * k / (kSamples - 1) - 1.0);
        const Vector alpha = Vector::Constant(model.size(), a);
        mgf_table->add(a, counts(alpha), escapes(alpha));
      }
    }
  }
  return j;
}

inline int cmd_analyze(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = resolve_config(opts);
    const Provenance prov{cfg.hash, std::nullopt};
    const auto points = sweep_points(cfg);
    std::vector<std::string> messages(points.size());
    parallel_for(points.size(), thread_cap(), [&](std::size_t k) {
      const auto& pt = points[k];
      const OpenChainModel model = model_from_json(cfg.model, cfg.base_dir, pt.params);
      CsvTable states({"state", "mean", "escape", "outflow_mean", "outflow_var"});
      CsvTable cov({"i", "j", "sigma", "kappa"});
      CsvTable lag({"s", "i", "j", "lag_covariance", "time_correlation"});
      CsvTable mgf({"a", "log_G_stat", "log_R_stat"});
      Json report = Json::object();
      prov.stamp(report);
      report["params"] = params_json(pt);
      Json body = analytics_report(model, cfg.run.lags, &states, &cov, &lag, &mgf);
      report.update(body);
      const auto dir = point_dir(cfg, pt);
      write_json(dir / "analytics.json", report);
      write_text(dir / "stationary_states.csv", states.render(prov));
      write_text(dir / "stationary_covariance.csv", cov.render(prov));
      write_text(dir / "lag_covariance.csv", lag.render(prov));
      if (mgf.size()) write_text(dir / "mgf_samples.csv", mgf.render(prov));
      messages[k] = "wrote " + (dir / "analytics.json").string() + "\n";
    });
    for (const auto& m : messages) out << m;
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
}

// ---------------------------------------------------------------- simulate

inline Json summary_json(const SeriesSummary& s) {
  Json j;
  j["samples"] = s.samples;
  j["batches"] = s.batches;
  j["sample_mean"] = to_json(s.sample_mean);
  j["mean_se"] = to_json(s.mean_se);
  j["sample_covariance"] = to_json(s.sample_covariance);
  j["covariance_se"] = to_json(s.covariance_se);
  Json lags = Json::array();
  for (const auto& [lag, cov] : s.lag_covariances) {
    Json entry;
    entry["s"] = lag;
    entry["lag_covariance"] = to_json(cov);
    entry["se"] = to_json(s.lag_covariance_se.at(lag));
    lags.push_back(std::move(entry));
  }
  j["lags"] = std::move(lags);
  return j;
}

/// Analytic-vs-empirical comparison of a stationary model: mean, covariance,
/// lag covariances, and the outgoing flux. For modulated inflow only the means
/// are compared, since the covariance recurrence assumes inflow independent
/// of the past.
inline ComparisonReport compare_stationary(const OpenChainModel& model, const SeriesSummary& counts,
                                           const SeriesSummary& flux, const std::vector<std::size_t>& lags,
                                           const TolerancePolicy& policy) {
  const CumulantState stat = stationary_cumulants(model);
  const OutgoingMoments og = outgoing_moments(stat, model.escape());
  const Eigen::Index s = model.size();
  std::vector<NamedMatrix> analytic;
  std::vector<NamedEstimate> empirical;
  analytic.push_back({"mean", stat.mean});
  empirical.push_back({"mean", counts.sample_mean, counts.mean_se});
  Vector og_mean(s + 1);
  og_mean << og.mean_per_state, og.mean_total;
  analytic.push_back({"outflow_mean", og_mean});
  empirical.push_back({"outflow_mean", flux.sample_mean, flux.mean_se});
  if (!model.protocol().is_modulated()) {
    analytic.push_back({"covariance", stat.covariance});
    empirical.push_back({"covariance", counts.sample_covariance, counts.covariance_se});
    for (std::size_t lag : lags) {
      if (lag == 0) continue;
      const std::string name = "lag_covariance(" + std::to_string(lag) + ")";
      analytic.push_back({name, lag_covariance(stat.covariance, model.jump(), lag)});
      empirical.push_back({name, counts.lag_covariances.at(lag), counts.lag_covariance_se.at(lag)});
    }
    Matrix og_var(1, 1);
    og_var(0, 0) = og.var_total;
    analytic.push_back({"outflow_var", og_var});
    Matrix emp(1, 1), se(1, 1);
    emp(0, 0) = flux.sample_covariance(s, s);
    se(0, 0) = flux.covariance_se(s, s);
    empirical.push_back({"outflow_var", emp, se});
  }
  return compare(analytic, empirical, policy);
}

inline CountVector default_initial(const OpenChainModel& model) {
  if (!model.is_stationary()) return CountVector::Zero(model.size());
  return stationary_mean(model).array().round().cast<Count>();
}

inline int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = resolve_config(opts);
    require(cfg.run.seed.has_value(), ErrorCode::kConfigInvalid, "simulate needs a seed (run.seed or --seed)");
    const std::uint64_t seed = *cfg.run.seed;
    const Provenance prov{cfg.hash, seed};
    const auto points = sweep_points(cfg);
    std::vector<std::string> messages(points.size());
    std::vector<char> passed(points.size(), 1);
    parallel_for(points.size(), thread_cap(), [&](std::size_t k) {
      const auto& pt = points[k];
      const OpenChainModel model = model_from_json(cfg.model, cfg.base_dir, pt.params);
      const CountVector initial = cfg.run.initial.value_or(default_initial(model));
      const SimulationRecord rec = run(model, cfg.run.horizon, initial, seed, cfg.run.burn_in, k);
      const SeriesSummary counts = summarize(rec, cfg.run.lags, cfg.run.batches);
      const SeriesSummary flux = summarize(outflow_series(rec), {}, cfg.run.batches);
      const auto dir = point_dir(cfg, pt);

      Json manifest;
      prov.stamp(manifest);
      manifest["params"] = params_json(pt);
      manifest["generator"] = rec.generator;
      manifest["stream"] = k;
      manifest["model_fingerprint"] = rec.model_fingerprint;
      manifest["horizon"] = rec.horizon();
      manifest["burn_in"] = rec.burn_in;
      manifest["initial"] = to_json(Vector(initial.cast<double>()));
      Json files = Json::array();

      if (cfg.wants("record")) {
        write_text(dir / "record.csv", record_csv(rec, prov));
        files.push_back("record.csv");
      }
      if (cfg.wants("summary")) {
        Json summary;
        prov.stamp(summary);
        summary["counts"] = summary_json(counts);
        summary["outflow"] = summary_json(flux);
        write_json(dir / "summary.json", summary);
        files.push_back("summary.json");
      }
      std::string verdict = "skipped (non-stationary schedule)";
      if (model.is_stationary()) {
        const ComparisonReport report =
            compare_stationary(model, counts, flux, cfg.run.lags, {cfg.run.z_threshold, cfg.run.abs_tol});
        passed[k] = report.pass ? 1 : 0;
        verdict = report.pass ? "pass" : "FAIL";
        if (cfg.wants("report")) {
          Json rj;
          prov.stamp(rj);
          rj.update(report.to_json());
          write_json(dir / "report.json", rj);
          write_text(dir / "report.txt", prov.line() + "\n" + report.to_text());
          files.push_back("report.json");
          files.push_back("report.txt");
        }
        if (cfg.wants("analytics")) {
          Json aj;
          prov.stamp(aj);
          aj["params"] = params_json(pt);
          aj.update(analytics_report(model, cfg.run.lags));
          write_json(dir / "analytics.json", aj);
          files.push_back("analytics.json");
        }
      }
      manifest["comparison"] = verdict;
      manifest["files"] = std::move(files);
      write_json(dir / "manifest.json", manifest);
      messages[k] = (pt.label.empty() ? std::string() : pt.label + ": ") + "comparison " + verdict + "\n";
    });
    for (const auto& m : messages) out << m;
    const bool all = std::all_of(passed.begin(), passed.end(), [](char c) { return c != 0; });
    return all ? kExitOk : kExitComparison;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
}

// ---------------------------------------------------------------- diagnose

/// Empirical lag covariance against Sigma-bar Q^s for any stationary protocol.
/// Under modulated inflow the two are not expected to agree; the report shows
/// by how much. Never gates.
inline int cmd_diagnose(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig cfg = resolve_config(opts);
    require(cfg.run.seed.has_value(), ErrorCode::kConfigInvalid, "diagnose needs a seed (run.seed or --seed)");
    require(cfg.sweep.empty(), ErrorCode::kConfigInvalid, "diagnose takes a single model, not a sweep");
    const std::uint64_t seed = *cfg.run.seed;
    const Provenance prov{cfg.hash, seed};
    const OpenChainModel model = model_from_json(cfg.model, cfg.base_dir);
    const CountVector initial = cfg.run.initial.value_or(default_initial(model));
    const SimulationRecord rec = run(model, cfg.run.horizon, initial, seed, cfg.run.burn_in);
    const SeriesSummary counts = summarize(rec, cfg.run.lags, cfg.run.batches);
    const Matrix sigma = stationary_variance(model);

    CsvTable table({"s", "i", "j", "empirical", "se", "analytic", "z", "protocol_lag_covariance"});
    double worst = 0.0;
    for (const auto& [s, cov] : counts.lag_covariances) {
      const Matrix analytic = lag_covariance(sigma, model.jump(), s);
      const Matrix inflow = protocol_lag_covariance(model.protocol(), s);
      const Matrix& se = counts.lag_covariance_se.at(s);
      for (Eigen::Index a = 0; a < cov.rows(); ++a) {
        for (Eigen::Index b = 0; b < cov.cols(); ++b) {
          const double z = se(a, b) > 0.0 ? (cov(a, b) - analytic(a, b)) / se(a, b) : 0.0;
          worst = std::max(worst, std::abs(z));
          table.add(s, static_cast<std::size_t>(a + 1), static_cast<std::size_t>(b + 1), cov(a, b), se(a, b),
                    analytic(a, b), z, inflow(a, b));
        }
      }
    }
    write_text(cfg.output_dir / "lag_diagnostic.csv", table.render(prov));
    Json j;
    prov.stamp(j);
    j["model_fingerprint"] = rec.model_fingerprint;
    j["modulated"] = model.protocol().is_modulated();
    j["max_abs_z"] = worst;
    j["stationary_variance_marginal"] = to_json(sigma);
    write_json(cfg.output_dir / "lag_diagnostic.json", j);
    out << "max |z| of empirical lag covariance against Sigma Q^s: " << format_number(worst) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
}

// ----------------------------------------------------------------- figures

struct Fig4Row {
  double q = 0.0;
  double p = 0.0;
  double k12 = 0.0;
  double k13 = 0.0;
  Matrix kappa;
  Matrix kappa_se;
};

inline std::vector<Fig4Row> fig4_data(std::uint64_t seed, std::size_t horizon, std::size_t threads) {
  std::vector<Fig4Row> rows;
  for (double q : {0.25, 0.45}) {
    for (int k = 0; k <= 10; ++k) rows.push_back({q, k / 10.0, 0, 0, {}, {}});
  }
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    auto& r = rows[k];
    std::tie(r.k12, r.k13) = three_state_kappa(r.p, r.q);
    const OpenChainModel model(JumpMatrix::validate(three_state_jump(r.q)), three_state_example(r.p));
    const SimulationRecord rec = run(model, horizon, default_initial(model), seed, std::nullopt, k);
    const EmpiricalCorrelations ec = empirical_correlations(summarize(rec, {}));
    r.kappa = ec.kappa;
    r.kappa_se = ec.kappa_se;
  });
  return rows;
}

struct Fig5Data {
  std::vector<Matrix> analytic;
  EmpiricalCorrelations empirical;
};

inline Fig5Data fig5_data(std::uint64_t seed, std::size_t horizon, std::size_t max_lag = 30) {
  const double p = 0.40;
  const double q = 0.45;
  const OpenChainModel model(JumpMatrix::validate(three_state_jump(q)), three_state_example(p));
  const Matrix sigma = stationary_variance(model);
  Fig5Data d;
  std::vector<std::size_t> lags;
  for (std::size_t s = 0; s <= max_lag; ++s) {
    lags.push_back(s);
    d.analytic.push_back(time_correlation(sigma, model.jump(), s));
  }
  const SimulationRecord rec = run(model, horizon, default_initial(model), seed);
  d.empirical = empirical_correlations(summarize(rec, lags));
  return d;
}

inline int cmd_figure(const std::string& name, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const std::uint64_t seed = opts.seed.value_or(kDefaultFigureSeed);
    const std::size_t horizon = opts.horizon.value_or(kFigureHorizon);
    const std::filesystem::path dir = opts.out.value_or("out");
    const std::string hash = hex64(fnv1a64("figure:" + name + ":horizon=" + std::to_string(horizon)));
    const Provenance prov{hash, seed};
    if (name == "fig4") {
      CsvTable t({"q", "p", "kappa12_analytic", "kappa13_analytic", "kappa12_empirical", "kappa12_se",
                  "kappa13_empirical", "kappa13_se", "kappa23_empirical", "kappa23_se"});
      for (const auto& r : fig4_data(seed, horizon, thread_cap())) {
        t.add(r.q, r.p, r.k12, r.k13, r.kappa(0, 1), r.kappa_se(0, 1), r.kappa(0, 2), r.kappa_se(0, 2),
              r.kappa(1, 2), r.kappa_se(1, 2));
      }
      write_text(dir / "fig4.csv", t.render(prov));
      out << "wrote " << (dir / "fig4.csv").string() << '\n';
      return kExitOk;
    }
    if (name == "fig5") {
      const Fig5Data d = fig5_data(seed, horizon);
      CsvTable t({"s", "C11_analytic", "C11_empirical", "C11_se", "C12_analytic", "C12_empirical", "C12_se"});
      for (std::size_t s = 0; s < d.analytic.size(); ++s) {
        const Matrix& e = d.empirical.time_corr.at(s);
        const Matrix& se = d.empirical.time_corr_se.at(s);
        t.add(s, d.analytic[s](0, 0), e(0, 0), se(0, 0), d.analytic[s](0, 1), e(0, 1), se(0, 1));
      }
      write_text(dir / "fig5.csv", t.render(prov));
      out << "wrote " << (dir / "fig5.csv").string() << '\n';
      return kExitOk;
    }
    err << "error: unknown figure \"" << name << "\" (expected fig4 or fig5)\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace openchain
