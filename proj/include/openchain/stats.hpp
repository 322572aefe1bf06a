#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "openchain/simulate.hpp"
#include "openchain/types.hpp"

namespace openchain {

inline constexpr std::size_t kDefaultBatches = 50;

/// Sample moments of a multivariate series with batch-means standard errors.
/// Per-batch estimates are kept so ratio statistics (correlations) can get
/// their own batch-means errors.
struct SeriesSummary {
  std::size_t samples = 0;
  std::size_t batches = kDefaultBatches;
  Vector sample_mean;
  Matrix sample_covariance;
  std::map<std::size_t, Matrix> lag_covariances;
  Vector mean_se;
  Matrix covariance_se;
  std::map<std::size_t, Matrix> lag_covariance_se;
  std::map<std::size_t, std::vector<Matrix>> batch_lag_covariances;
};

namespace detail {

inline double batch_se(const std::vector<double>& batch_values) {
  const auto b = static_cast<double>(batch_values.size());
  double mean = 0.0;
  for (double v : batch_values) mean += v;
  mean /= b;
  double ss = 0.0;
  for (double v : batch_values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (b - 1.0) / b);
}

}  // namespace detail

/// Rows of `series` are time steps. Lag s uses the n - s pairs (t, t + s)
/// with divisor n - s - 1, so lag 0 is the unbiased sample covariance. Lag 0
/// is always included.
inline SeriesSummary summarize(const Matrix& series, std::vector<std::size_t> lags,
                               std::size_t batches = kDefaultBatches) {
  require(batches >= 2, ErrorCode::kInvalidArgument, "need at least two batches");
  lags.push_back(0);
  std::sort(lags.begin(), lags.end());
  lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
  const auto n = static_cast<std::size_t>(series.rows());
  const Eigen::Index dim = series.cols();
  require(n > lags.back() + 10 * batches, ErrorCode::kSeriesTooShort,
          "series of " + std::to_string(n) + " steps is too short for lag " + std::to_string(lags.back()) +
              " and " + std::to_string(batches) + " batches");

  SeriesSummary out;
  out.samples = n;
  out.batches = batches;
  out.sample_mean = series.colwise().mean().transpose();
  const Matrix centered = series.rowwise() - out.sample_mean.transpose();

  out.mean_se.resize(dim);
  {
    const std::size_t len = n / batches;
    for (Eigen::Index i = 0; i < dim; ++i) {
      std::vector<double> values(batches);
      for (std::size_t b = 0; b < batches; ++b) {
        values[b] = series.col(i).segment(static_cast<Eigen::Index>(b * len), static_cast<Eigen::Index>(len)).mean();
      }
      out.mean_se(i) = detail::batch_se(values);
    }
  }

  for (std::size_t s : lags) {
    const std::size_t pairs = n - s;
    const std::size_t len = pairs / batches;
    const auto head = centered.topRows(static_cast<Eigen::Index>(pairs));
    const auto tail = centered.middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(pairs));
    out.lag_covariances[s] = head.transpose() * tail / static_cast<double>(pairs - 1);

    std::vector<Matrix> per_batch;
    per_batch.reserve(batches);
    for (std::size_t b = 0; b < batches; ++b) {
      const auto start = static_cast<Eigen::Index>(b * len);
      const auto rows = static_cast<Eigen::Index>(len);
      per_batch.push_back(head.middleRows(start, rows).transpose() * tail.middleRows(start, rows) /
                          static_cast<double>(len));
    }
    Matrix se(dim, dim);
    std::vector<double> values(batches);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        for (std::size_t b = 0; b < batches; ++b) values[b] = per_batch[b](i, j);
        se(i, j) = detail::batch_se(values);
      }
    }
    out.lag_covariance_se[s] = se;
    out.batch_lag_covariances[s] = std::move(per_batch);
  }
  out.sample_covariance = out.lag_covariances.at(0);
  out.covariance_se = out.lag_covariance_se.at(0);
  return out;
}

/// Statistics over the post-burn-in rows of the count series N^t.
inline SeriesSummary summarize(const SimulationRecord& record, const std::vector<std::size_t>& lags,
                               std::size_t batches = kDefaultBatches) {
  const std::size_t max_lag = lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end());
  require(record.horizon() > record.burn_in + max_lag + 10 * batches, ErrorCode::kSeriesTooShort,
          "record of " + std::to_string(record.horizon()) + " steps is too short after burn-in " +
              std::to_string(record.burn_in));
  const auto kept = static_cast<Eigen::Index>(record.horizon() - record.burn_in);
  const Matrix series = record.counts.bottomRows(kept).cast<double>();
  return summarize(series, lags, batches);
}

/// Post-burn-in outflow series: U_1..U_S followed by the total O.
inline Matrix outflow_series(const SimulationRecord& record) {
  const auto kept = static_cast<Eigen::Index>(record.horizon() - record.burn_in);
  Matrix m(kept, record.states() + 1);
  m.leftCols(record.states()) = record.outflow.bottomRows(kept).cast<double>();
  m.col(record.states()) = record.outflow_total.tail(kept).cast<double>();
  return m;
}

struct EmpiricalCorrelations {
  Matrix kappa;
  Matrix kappa_se;
  std::map<std::size_t, Matrix> time_corr;
  std::map<std::size_t, Matrix> time_corr_se;
};

/// Normalizes (lag-)covariances by sqrt(var_i var_j). Standard errors come
/// from the spread of the same ratio computed inside each batch.
inline EmpiricalCorrelations empirical_correlations(const SeriesSummary& summary) {
  const Vector var = summary.sample_covariance.diagonal();
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    require(var(i) > 0.0, ErrorCode::kZeroVarianceState, "state " + std::to_string(i + 1) + " has zero variance");
  }
  const Vector inv_sd = var.cwiseSqrt().cwiseInverse();
  const auto& batch0 = summary.batch_lag_covariances.at(0);
  EmpiricalCorrelations out;
  for (const auto& [s, cov] : summary.lag_covariances) {
    Matrix corr = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
    if (s == 0) corr.diagonal().setOnes();
    const auto& batch = summary.batch_lag_covariances.at(s);
    Matrix se = Matrix::Zero(cov.rows(), cov.cols());
    std::vector<double> values(batch.size());
    for (Eigen::Index i = 0; i < cov.rows(); ++i) {
      for (Eigen::Index j = 0; j < cov.cols(); ++j) {
        if (s == 0 && i == j) continue;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          values[b] = batch[b](i, j) / std::sqrt(batch0[b](i, i) * batch0[b](j, j));
        }
        se(i, j) = detail::batch_se(values);
      }
    }
    out.time_corr[s] = corr;
    out.time_corr_se[s] = se;
  }
  out.kappa = out.time_corr.at(0);
  out.kappa_se = out.time_corr_se.at(0);
  return out;
}

/// A named block of values; vectors are n x 1.
struct NamedMatrix {
  std::string name;
  Matrix values;
};

/// A named block of estimates with matching standard errors.
struct NamedEstimate {
  std::string name;
  Matrix values;
  Matrix se;
};

struct TolerancePolicy {
  double z_threshold = 4.0;
  double abs_tol = 0.0;  // 0 disables the absolute escape hatch
};

struct ComparisonRow {
  std::string quantity;
  double analytic = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
  bool pass = true;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool pass = true;
  TolerancePolicy policy;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["pass"] = pass;
    j["z_threshold"] = policy.z_threshold;
    j["abs_tol"] = policy.abs_tol;
    auto& arr = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json row;
      row["quantity"] = r.quantity;
      row["analytic"] = r.analytic;
      row["empirical"] = r.empirical;
      row["se"] = r.standard_error;
      row["z"] = std::isfinite(r.z) ? nlohmann::ordered_json(r.z) : nlohmann::ordered_json(nullptr);
      row["verdict"] = r.pass ? "pass" : "FAIL";
      arr.push_back(std::move(row));
    }
    return j;
  }

  std::string to_text() const {
    std::size_t width = 8;
    for (const auto& r : rows) width = std::max(width, r.quantity.size());
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(width)) << "quantity" << std::right << std::setw(15) << "analytic"
       << std::setw(15) << "empirical" << std::setw(13) << "se" << std::setw(10) << "z"
       << "  verdict\n";
    for (const auto& r : rows) {
      os << std::left << std::setw(static_cast<int>(width)) << r.quantity << std::right << std::scientific
         << std::setprecision(6) << std::setw(15) << r.analytic << std::setw(15) << r.empirical
         << std::setprecision(4) << std::setw(13) << r.standard_error << std::fixed << std::setprecision(2)
         << std::setw(10) << r.z << "  " << (r.pass ? "pass" : "FAIL") << '\n';
    }
    os << (pass ? "overall: pass" : "overall: FAIL") << '\n';
    return os.str();
  }
};

inline std::string entry_name(const std::string& block, const Matrix& m, Eigen::Index i, Eigen::Index j) {
  if (m.cols() == 1) return block + "[" + std::to_string(i + 1) + "]";
  return block + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

/// Entry-wise z = (empirical - analytic) / se; a row passes when |z| is within
/// the threshold or the absolute difference is within abs_tol.
inline ComparisonReport compare(const std::vector<NamedMatrix>& analytic, const std::vector<NamedEstimate>& empirical,
                                const TolerancePolicy& policy = {}) {
  require(analytic.size() == empirical.size(), ErrorCode::kShapeMismatch, "comparison blocks differ in number");
  ComparisonReport report;
  report.policy = policy;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const auto& a = analytic[k];
    const auto& e = empirical[k];
    require(a.name == e.name, ErrorCode::kShapeMismatch, "comparison block names differ: " + a.name + " vs " + e.name);
    require(a.values.rows() == e.values.rows() && a.values.cols() == e.values.cols() &&
                e.se.rows() == e.values.rows() && e.se.cols() == e.values.cols(),
            ErrorCode::kShapeMismatch, "comparison block " + a.name + " has mismatched shapes");
    for (Eigen::Index i = 0; i < a.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.values.cols(); ++j) {
        ComparisonRow row;
        row.quantity = entry_name(a.name, a.values, i, j);
        row.analytic = a.values(i, j);
        row.empirical = e.values(i, j);
        row.standard_error = e.se(i, j);
        const double diff = row.empirical - row.analytic;
        if (row.standard_error > 0.0) {
          row.z = diff / row.standard_error;
        } else {
          row.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
        }
        row.pass = std::abs(row.z) <= policy.z_threshold || std::abs(diff) <= policy.abs_tol;
        report.pass = report.pass && row.pass;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace openchain
