#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "openchain/chain.hpp"
#include "openchain/random.hpp"
#include "openchain/types.hpp"

namespace openchain {

inline constexpr double kProbabilityTolerance = 1e-12;

/// First and second moments (epsilon, Delta) of one inflow vector J^t.
struct ProtocolMoments {
  Vector mean;
  Matrix covariance;
};

namespace detail {

inline Vector checked_probabilities(const std::vector<double>& probs, const std::string& what) {
  require(!probs.empty(), ErrorCode::kInvalidProbabilities, what + ": empty distribution");
  double total = 0.0;
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0, ErrorCode::kInvalidProbabilities,
            what + ": probabilities must be finite and nonnegative");
    total += p;
  }
  require(std::abs(total - 1.0) <= kProbabilityTolerance, ErrorCode::kInvalidProbabilities,
          what + ": probabilities sum to " + std::to_string(total));
  return Eigen::Map<const Vector>(probs.data(), static_cast<Eigen::Index>(probs.size()));
}

inline std::vector<double> cumulative(const Vector& probs) {
  std::vector<double> cdf(static_cast<std::size_t>(probs.size()));
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs(k);
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  return cdf;
}

// Inverse-CDF lookup; the last index absorbs rounding in the total mass.
template <class URBG>
std::size_t draw_index(const std::vector<double>& cdf, URBG& rng) {
  const double u = uniform01(rng) * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

}  // namespace detail

/// Deterministic inflow: the same vector every step.
struct ConstantInflow {
  CountVector value;
};

/// Finite-support scalar distribution (values with probabilities).
class ScalarTable {
 public:
  ScalarTable(std::vector<Count> values, const std::vector<double>& probs) {
    require(values.size() == probs.size(), ErrorCode::kShapeMismatch,
            "scalar table: values and probabilities differ in length");
    for (Count v : values) require(v >= 0, ErrorCode::kInvalidArgument, "inflow values must be >= 0");
    const Vector p = detail::checked_probabilities(probs, "scalar table");
    std::vector<std::size_t> order(values.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    values_.resize(values.size());
    probs_.resize(p.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      values_[k] = values[order[k]];
      probs_(static_cast<Eigen::Index>(k)) = p(static_cast<Eigen::Index>(order[k]));
    }
    cdf_ = detail::cumulative(probs_);
  }

  static ScalarTable bernoulli(double p) {
    require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument, "Bernoulli parameter outside [0,1]");
    return ScalarTable({0, 1}, {1.0 - p, p});
  }

  const std::vector<Count>& values() const { return values_; }
  const Vector& probabilities() const { return probs_; }

  double mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) m += probs_(static_cast<Eigen::Index>(k)) * static_cast<double>(values_[k]);
    return m;
  }

  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double d = static_cast<double>(values_[k]) - m;
      v += probs_(static_cast<Eigen::Index>(k)) * d * d;
    }
    return v;
  }

  template <class URBG>
  Count sample(URBG& rng) const {
    return values_[detail::draw_index(cdf_, rng)];
  }

 private:
  std::vector<Count> values_;
  Vector probs_;
  std::vector<double> cdf_;
};

/// Independent per-state scalar laws, i.i.d. over time.
struct IidProductInflow {
  std::vector<ScalarTable> marginals;
};

/// One joint law over a finite set of inflow vectors, i.i.d. over time. The
/// support is kept in lexicographic order with precomputed cumulative weights.
class JointTable {
 public:
  JointTable(std::vector<CountVector> support, const std::vector<double>& probs) {
    require(!support.empty() && support.size() == probs.size(), ErrorCode::kShapeMismatch,
            "joint table: support and probabilities differ in length");
    const Eigen::Index dim = support.front().size();
    require(dim >= 1, ErrorCode::kInvalidArgument, "joint table: empty support vectors");
    for (const auto& v : support) {
      require(v.size() == dim, ErrorCode::kShapeMismatch, "joint table: ragged support vectors");
      require((v.array() >= 0).all(), ErrorCode::kInvalidArgument, "inflow values must be >= 0");
    }
    const Vector p = detail::checked_probabilities(probs, "joint table");
    std::vector<std::size_t> order(support.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(support[a].begin(), support[a].end(), support[b].begin(),
                                          support[b].end());
    });
    support_.reserve(support.size());
    probs_.resize(p.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      support_.push_back(support[order[k]]);
      probs_(static_cast<Eigen::Index>(k)) = p(static_cast<Eigen::Index>(order[k]));
    }
    cdf_ = detail::cumulative(probs_);
  }

  Eigen::Index dimension() const { return support_.front().size(); }
  const std::vector<CountVector>& support() const { return support_; }
  const Vector& probabilities() const { return probs_; }

  Vector mean() const {
    Vector m = Vector::Zero(dimension());
    for (std::size_t k = 0; k < support_.size(); ++k) {
      m += probs_(static_cast<Eigen::Index>(k)) * support_[k].cast<double>();
    }
    return m;
  }

  /// E[J J^T] over the table.
  Matrix second_moment() const {
    Matrix m = Matrix::Zero(dimension(), dimension());
    for (std::size_t k = 0; k < support_.size(); ++k) {
      const Vector v = support_[k].cast<double>();
      m += probs_(static_cast<Eigen::Index>(k)) * v * v.transpose();
    }
    return m;
  }

  template <class URBG>
  const CountVector& sample(URBG& rng) const {
    return support_[detail::draw_index(cdf_, rng)];
  }

 private:
  std::vector<CountVector> support_;
  Vector probs_;
  std::vector<double> cdf_;
};

/// Hidden M-regime Markov chain; regime h emits J from its own table, then the
/// regime moves one step. The hidden chain must be irreducible so the inflow
/// has a stationary marginal.
class MarkovModulatedInflow {
 public:
  MarkovModulatedInflow(Matrix transition, std::vector<JointTable> regimes)
      : transition_(std::move(transition)), regimes_(std::move(regimes)) {
    const Eigen::Index m = transition_.rows();
    require(m >= 1 && m == transition_.cols() && static_cast<std::size_t>(m) == regimes_.size(),
            ErrorCode::kShapeMismatch, "hidden chain size must match the regime count");
    for (Eigen::Index h = 0; h < m; ++h) {
      std::vector<double> row(static_cast<std::size_t>(m));
      for (Eigen::Index j = 0; j < m; ++j) row[static_cast<std::size_t>(j)] = transition_(h, j);
      detail::checked_probabilities(row, "hidden transition row " + std::to_string(h + 1));
      row_cdf_.push_back(detail::cumulative(transition_.row(h).transpose()));
    }
    for (const auto& r : regimes_) {
      require(r.dimension() == regimes_.front().dimension(), ErrorCode::kShapeMismatch,
              "regime tables differ in dimension");
    }
    require(is_irreducible(transition_), ErrorCode::kHiddenChainNotIrreducible,
            "hidden regime chain is not irreducible");
    // pi (P - I) = 0 with sum(pi) = 1, solved as a least-squares system.
    Matrix system(m + 1, m);
    system.topRows(m) = (transition_ - Matrix::Identity(m, m)).transpose();
    system.row(m).setOnes();
    Vector rhs = Vector::Zero(m + 1);
    rhs(m) = 1.0;
    stationary_ = system.colPivHouseholderQr().solve(rhs);
    stationary_cdf_ = detail::cumulative(stationary_);
  }

  const Matrix& transition() const { return transition_; }
  const std::vector<JointTable>& regimes() const { return regimes_; }
  const Vector& stationary() const { return stationary_; }
  Eigen::Index dimension() const { return regimes_.front().dimension(); }

  template <class URBG>
  std::size_t draw_stationary(URBG& rng) const {
    return detail::draw_index(stationary_cdf_, rng);
  }

  template <class URBG>
  std::size_t advance(std::size_t h, URBG& rng) const {
    return detail::draw_index(row_cdf_[h], rng);
  }

 private:
  Matrix transition_;
  std::vector<JointTable> regimes_;
  std::vector<std::vector<double>> row_cdf_;
  Vector stationary_;
  std::vector<double> stationary_cdf_;
};

/// The inflow process {J^t}: one of four finite-support variants, each both
/// sampleable and summarizable by exact moments.
class IncomingProtocol {
 public:
  using Variant = std::variant<ConstantInflow, IidProductInflow, JointTable, MarkovModulatedInflow>;

  explicit IncomingProtocol(Variant v) : variant_(std::move(v)) {
    std::visit(
        [](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ConstantInflow>) {
            require(x.value.size() >= 1, ErrorCode::kInvalidArgument, "constant inflow is empty");
            require((x.value.array() >= 0).all(), ErrorCode::kInvalidArgument,
                    "inflow values must be >= 0");
          } else if constexpr (std::is_same_v<T, IidProductInflow>) {
            require(!x.marginals.empty(), ErrorCode::kInvalidArgument, "iid product has no states");
          }
        },
        variant_);
  }

  static IncomingProtocol constant(CountVector value) { return IncomingProtocol(ConstantInflow{std::move(value)}); }

  static IncomingProtocol iid_product(std::vector<ScalarTable> marginals) {
    return IncomingProtocol(IidProductInflow{std::move(marginals)});
  }

  static IncomingProtocol bernoulli(const std::vector<double>& p) {
    std::vector<ScalarTable> m;
    for (double pi : p) m.push_back(ScalarTable::bernoulli(pi));
    return iid_product(std::move(m));
  }

  static IncomingProtocol joint_table(JointTable table) { return IncomingProtocol(std::move(table)); }

  static IncomingProtocol markov_modulated(Matrix transition, std::vector<JointTable> regimes) {
    return IncomingProtocol(MarkovModulatedInflow(std::move(transition), std::move(regimes)));
  }

  Eigen::Index dimension() const {
    return std::visit(
        [](const auto& x) -> Eigen::Index {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ConstantInflow>) return x.value.size();
          else if constexpr (std::is_same_v<T, IidProductInflow>) return static_cast<Eigen::Index>(x.marginals.size());
          else return x.dimension();
        },
        variant_);
  }

  bool is_modulated() const { return std::holds_alternative<MarkovModulatedInflow>(variant_); }
  const Variant& variant() const { return variant_; }

  template <class URBG>
  std::optional<std::size_t> initial_hidden_state(URBG& rng) const {
    if (const auto* mm = std::get_if<MarkovModulatedInflow>(&variant_)) return mm->draw_stationary(rng);
    return std::nullopt;
  }

  /// One draw of J^t into `out`; the hidden regime (if any) advances one step.
  template <class URBG>
  void sample_into(Eigen::Ref<CountVector> out, std::optional<std::size_t>& hidden, URBG& rng) const {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, ConstantInflow>) {
            out = x.value;
          } else if constexpr (std::is_same_v<T, IidProductInflow>) {
            for (std::size_t i = 0; i < x.marginals.size(); ++i) {
              out(static_cast<Eigen::Index>(i)) = x.marginals[i].sample(rng);
            }
          } else if constexpr (std::is_same_v<T, JointTable>) {
            out = x.sample(rng);
          } else {
            if (!hidden) hidden = x.draw_stationary(rng);
            require(*hidden < x.regimes().size(), ErrorCode::kInvalidArgument, "hidden regime out of range");
            out = x.regimes()[*hidden].sample(rng);
            hidden = x.advance(*hidden, rng);
          }
        },
        variant_);
  }

 private:
  Variant variant_;
};

inline ProtocolMoments moments(const IncomingProtocol& protocol) {
  return std::visit(
      [](const auto& x) -> ProtocolMoments {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConstantInflow>) {
          const auto n = x.value.size();
          return {x.value.template cast<double>(), Matrix::Zero(n, n)};
        } else if constexpr (std::is_same_v<T, IidProductInflow>) {
          const auto n = static_cast<Eigen::Index>(x.marginals.size());
          ProtocolMoments m{Vector(n), Matrix::Zero(n, n)};
          for (Eigen::Index i = 0; i < n; ++i) {
            m.mean(i) = x.marginals[static_cast<std::size_t>(i)].mean();
            m.covariance(i, i) = x.marginals[static_cast<std::size_t>(i)].variance();
          }
          return m;
        } else if constexpr (std::is_same_v<T, JointTable>) {
          const Vector mean = x.mean();
          return {mean, x.second_moment() - mean * mean.transpose()};
        } else {
          // Law of total covariance over the stationary regime mixture.
          const Eigen::Index n = x.dimension();
          Vector mean = Vector::Zero(n);
          Matrix second = Matrix::Zero(n, n);
          for (std::size_t h = 0; h < x.regimes().size(); ++h) {
            const double w = x.stationary()(static_cast<Eigen::Index>(h));
            mean += w * x.regimes()[h].mean();
            second += w * x.regimes()[h].second_moment();
          }
          return {mean, second - mean * mean.transpose()};
        }
      },
      protocol.variant());
}

template <class URBG>
std::pair<CountVector, std::optional<std::size_t>> sample(const IncomingProtocol& protocol,
                                                          std::optional<std::size_t> hidden, URBG& rng) {
  CountVector out(protocol.dimension());
  protocol.sample_into(out, hidden, rng);
  return {std::move(out), hidden};
}

/// The correlated three-state inflow: (J1, J2) equal with probability p and
/// different otherwise, J3 an independent fair coin.
inline IncomingProtocol three_state_example(double p) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument, "p must lie in [0,1]");
  std::vector<CountVector> support;
  std::vector<double> probs;
  for (Count j1 = 0; j1 <= 1; ++j1) {
    for (Count j2 = 0; j2 <= 1; ++j2) {
      const double f12 = (j1 == j2) ? p / 2.0 : (1.0 - p) / 2.0;
      for (Count j3 = 0; j3 <= 1; ++j3) {
        CountVector v(3);
        v << j1, j2, j3;
        support.push_back(v);
        probs.push_back(f12 * 0.5);
      }
    }
  }
  return IncomingProtocol::joint_table(JointTable(std::move(support), probs));
}

/// Cov(J^t, J^{t+s}) at stationarity; zero for the time-independent variants.
inline Matrix protocol_lag_covariance(const IncomingProtocol& protocol, std::size_t s) {
  if (s == 0) return moments(protocol).covariance;
  const Eigen::Index n = protocol.dimension();
  const auto* mm = std::get_if<MarkovModulatedInflow>(&protocol.variant());
  if (mm == nullptr) return Matrix::Zero(n, n);
  const Matrix ps = matrix_power(mm->transition(), s);
  const auto m = static_cast<Eigen::Index>(mm->regimes().size());
  Matrix regime_means(m, n);
  for (Eigen::Index h = 0; h < m; ++h) regime_means.row(h) = mm->regimes()[static_cast<std::size_t>(h)].mean().transpose();
  const Vector eps = moments(protocol).mean;
  const Matrix joint = regime_means.transpose() * mm->stationary().asDiagonal() * ps * regime_means;
  return joint - eps * eps.transpose();
}

/// Piecewise-constant inflow law over time: each segment holds for `duration`
/// steps; the last segment persists forever.
class ProtocolSchedule {
 public:
  struct Segment {
    std::size_t duration;
    IncomingProtocol protocol;
  };

  explicit ProtocolSchedule(IncomingProtocol stationary) { segments_.push_back({0, std::move(stationary)}); }

  explicit ProtocolSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
    require(!segments_.empty(), ErrorCode::kInvalidArgument, "schedule has no segments");
    for (std::size_t k = 0; k + 1 < segments_.size(); ++k) {
      require(segments_[k].duration >= 1, ErrorCode::kInvalidArgument,
              "schedule segments other than the last need a positive duration");
    }
    for (const auto& s : segments_) {
      require(s.protocol.dimension() == segments_.front().protocol.dimension(), ErrorCode::kShapeMismatch,
              "schedule segments differ in dimension");
    }
  }

  bool is_stationary() const { return segments_.size() == 1; }
  Eigen::Index dimension() const { return segments_.front().protocol.dimension(); }
  const std::vector<Segment>& segments() const { return segments_; }

  const IncomingProtocol& at(std::size_t t) const {
    std::size_t start = 0;
    for (std::size_t k = 0; k + 1 < segments_.size(); ++k) {
      if (t < start + segments_[k].duration) return segments_[k].protocol;
      start += segments_[k].duration;
    }
    return segments_.back().protocol;
  }

  /// The single protocol of a stationary schedule.
  const IncomingProtocol& stationary() const {
    require(is_stationary(), ErrorCode::kNonStationarySchedule,
            "stationary analytics need a single-segment protocol");
    return segments_.front().protocol;
  }

  ProtocolMoments moments_at(std::size_t t) const { return moments(at(t)); }

 private:
  std::vector<Segment> segments_;
};

}  // namespace openchain
