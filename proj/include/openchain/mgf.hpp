#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include "openchain/chain.hpp"
#include "openchain/model.hpp"
#include "openchain/protocols.hpp"

namespace openchain {

// Everything here works with log-m.g.f.s. Near alpha = 0 the sums are
// evaluated as log1p(sum w expm1(x)) so values keep relative precision, which
// the finite-difference cumulant extraction depends on.

namespace detail {

// log sum_k w_k exp(x_k) for probability weights w.
inline double log_mean_exp(const Vector& weights, const Vector& exponents) {
  const double biggest = exponents.cwiseAbs().maxCoeff();
  if (biggest < 0.5) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) acc += weights(k) * std::expm1(exponents(k));
    return std::log1p(acc);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (weights(k) > 0.0) top = std::max(top, exponents(k));
  }
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    if (weights(k) > 0.0) acc += weights(k) * std::exp(exponents(k) - top);
  }
  return top + std::log(acc);
}

inline double table_log_mgf(const JointTable& table, const Vector& alpha) {
  Vector exponents(static_cast<Eigen::Index>(table.support().size()));
  for (std::size_t k = 0; k < table.support().size(); ++k) {
    exponents(static_cast<Eigen::Index>(k)) = table.support()[k].cast<double>().dot(alpha);
  }
  return log_mean_exp(table.probabilities(), exponents);
}

}  // namespace detail

/// H_i(alpha) = log(e_i + sum_j q_ij exp(alpha_j)).
inline Vector h_map(const Vector& alpha, const JumpMatrix& jump, const EscapeProfile& escape) {
  const Matrix& q = jump.matrix();
  require(alpha.size() == q.rows(), ErrorCode::kShapeMismatch, "alpha has the wrong length");
  (void)escape;  // e_i = 1 - sum_j q_ij is implied by the log1p form
  const Vector shifted = alpha.unaryExpr([](double a) { return std::expm1(a); });
  const Vector inner = q * shifted;
  return inner.unaryExpr([](double x) { return std::log1p(x); });
}

/// H^(r)(alpha); r = 0 is the identity.
inline Vector iterate_h(Vector alpha, std::size_t r, const JumpMatrix& jump, const EscapeProfile& escape) {
  for (std::size_t k = 0; k < r; ++k) alpha = h_map(alpha, jump, escape);
  return alpha;
}

/// C_i(alpha) = log(1 - e_i + e_i exp(alpha_i)).
inline Vector c_map(const Vector& alpha, const EscapeProfile& escape) {
  const Vector& e = escape.escape_vector;
  require(alpha.size() == e.size(), ErrorCode::kShapeMismatch, "alpha has the wrong length");
  Vector out(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) out(i) = std::log1p(e(i) * std::expm1(alpha(i)));
  return out;
}

/// log F(alpha) = log E[exp(J . alpha)], exact over the finite support.
/// The modulated variant is only available as its single-time marginal, and
/// only when asked for explicitly.
inline double protocol_log_mgf(const IncomingProtocol& protocol, const Vector& alpha, bool allow_marginal = false) {
  require(alpha.size() == protocol.dimension(), ErrorCode::kShapeMismatch, "alpha has the wrong length");
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConstantInflow>) {
          return x.value.template cast<double>().dot(alpha);
        } else if constexpr (std::is_same_v<T, IidProductInflow>) {
          double total = 0.0;
          for (std::size_t i = 0; i < x.marginals.size(); ++i) {
            const auto& m = x.marginals[i];
            Vector exponents(static_cast<Eigen::Index>(m.values().size()));
            for (std::size_t k = 0; k < m.values().size(); ++k) {
              exponents(static_cast<Eigen::Index>(k)) =
                  static_cast<double>(m.values()[k]) * alpha(static_cast<Eigen::Index>(i));
            }
            total += detail::log_mean_exp(m.probabilities(), exponents);
          }
          return total;
        } else if constexpr (std::is_same_v<T, JointTable>) {
          return detail::table_log_mgf(x, alpha);
        } else {
          require(allow_marginal, ErrorCode::kUnsupportedVariant,
                  "modulated inflow has no single-step m.g.f. independent of the chain state");
          Vector per_regime(static_cast<Eigen::Index>(x.regimes().size()));
          for (std::size_t h = 0; h < x.regimes().size(); ++h) {
            per_regime(static_cast<Eigen::Index>(h)) = detail::table_log_mgf(x.regimes()[h], alpha);
          }
          return detail::log_mean_exp(x.stationary(), per_regime);
        }
      },
      protocol.variant());
}

/// Largest |J|_1 over the support: a Lipschitz bound of log F in the max-norm.
inline double protocol_lipschitz(const IncomingProtocol& protocol) {
  return std::visit(
      [](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        auto table_bound = [](const JointTable& t) {
          double b = 0.0;
          for (const auto& v : t.support()) b = std::max(b, static_cast<double>(v.sum()));
          return b;
        };
        if constexpr (std::is_same_v<T, ConstantInflow>) {
          return static_cast<double>(x.value.sum());
        } else if constexpr (std::is_same_v<T, IidProductInflow>) {
          double b = 0.0;
          for (const auto& m : x.marginals) b += static_cast<double>(*std::max_element(m.values().begin(), m.values().end()));
          return b;
        } else if constexpr (std::is_same_v<T, JointTable>) {
          return table_bound(x);
        } else {
          double b = 0.0;
          for (const auto& r : x.regimes()) b = std::max(b, table_bound(r));
          return b;
        }
      },
      protocol.variant());
}

/// A log-m.g.f. value together with the truncation depth used to compute it.
struct MgfValue {
  double value = 0.0;
  std::size_t depth = 0;
};

struct MgfOptions {
  double tol = 1e-14;
  std::size_t max_depth = 1'000'000;
  bool allow_marginal = false;
};

/// log G_stat(alpha) = sum_{r >= 0} log F(H^(r)(alpha)), truncated once the
/// geometric tail bound L |H^(R)(alpha)| / (1 - rho) drops below tol.
inline MgfValue log_stationary_mgf(const OpenChainModel& model, const Vector& alpha, const MgfOptions& options = {}) {
  const IncomingProtocol& protocol = model.protocol();
  const double rho = model.jump().spectral_radius();
  const double lipschitz = protocol_lipschitz(protocol);
  const double start_norm = alpha.lpNorm<Eigen::Infinity>();
  {
    const Vector probe = iterate_h(alpha, 8, model.jump(), model.escape());
    require(probe.allFinite() && (start_norm == 0.0 || probe.lpNorm<Eigen::Infinity>() < start_norm),
            ErrorCode::kNotContracting, "H iterates do not shrink within 8 steps");
  }
  MgfValue out;
  Vector current = alpha;
  for (std::size_t r = 0; r < options.max_depth; ++r) {
    const double norm = current.lpNorm<Eigen::Infinity>();
    if (lipschitz * norm <= options.tol * (1.0 - rho)) {
      out.depth = r;
      return out;
    }
    out.value += protocol_log_mgf(protocol, current, options.allow_marginal);
    current = h_map(current, model.jump(), model.escape());
    require(current.allFinite(), ErrorCode::kNotContracting, "H iterates left the finite range");
  }
  throw Error(ErrorCode::kNotContracting, "H iterates did not decay within the depth cap");
}

/// Fixed-depth version of the stationary sum (no stopping rule).
inline double log_stationary_mgf_fixed(const OpenChainModel& model, const Vector& alpha, std::size_t depth,
                                       bool allow_marginal = false) {
  double value = 0.0;
  Vector current = alpha;
  for (std::size_t r = 0; r < depth; ++r) {
    value += protocol_log_mgf(model.protocol(), current, allow_marginal);
    current = h_map(current, model.jump(), model.escape());
  }
  return value;
}

using LogMgfFunction = std::function<double(const Vector&)>;

/// A log-m.g.f. as a callable plus provenance: model fingerprint, truncation
/// depth (0 when exact), and the radius of the box it is trusted on.
struct LogMgfEvaluator {
  LogMgfFunction fn;
  Eigen::Index dimension = 0;
  std::string model_fingerprint;
  std::size_t truncation_depth = 0;
  double domain_radius = 0.0;

  double operator()(const Vector& alpha) const { return fn(alpha); }
};

/// Depth that satisfies the stopping rule over the whole box of `radius`,
/// taken at its two diagonal corners (the extreme points for a nonnegative
/// Q), plus a small margin.
inline std::size_t stationary_depth(const OpenChainModel& model, double radius, const MgfOptions& options = {}) {
  const Eigen::Index n = model.size();
  std::size_t depth = 0;
  for (double sign : {1.0, -1.0}) {
    const Vector corner = Vector::Constant(n, sign * radius);
    depth = std::max(depth, log_stationary_mgf(model, corner, options).depth);
  }
  return depth + 8;
}

inline LogMgfEvaluator stationary_log_mgf_evaluator(const OpenChainModel& model, double radius = 1e-2,
                                                    const MgfOptions& options = {}) {
  const std::size_t depth = stationary_depth(model, radius, options);
  LogMgfEvaluator ev;
  ev.dimension = model.size();
  ev.model_fingerprint = model_fingerprint(model);
  ev.truncation_depth = depth;
  ev.domain_radius = radius;
  ev.fn = [model, depth, allow = options.allow_marginal](const Vector& alpha) {
    return log_stationary_mgf_fixed(model, alpha, depth, allow);
  };
  return ev;
}

/// log G_t(alpha) by unrolling log G_{t+1}(a) = log F_t(a) + log G_t(H(a)):
/// log G_0(H^(t)(alpha)) + sum_{r<t} log F_{t-1-r}(H^(r)(alpha)).
inline double log_mgf_at_time(const OpenChainModel& model, const Vector& alpha, std::size_t t,
                              const LogMgfFunction& initial_log_mgf, bool allow_marginal = false) {
  double value = 0.0;
  Vector current = alpha;
  for (std::size_t r = 0; r < t; ++r) {
    value += protocol_log_mgf(model.schedule().at(t - 1 - r), current, allow_marginal);
    current = h_map(current, model.jump(), model.escape());
  }
  return value + initial_log_mgf(current);
}

/// log-m.g.f. of a deterministic initial state N^0 = n0: alpha -> n0 . alpha.
inline LogMgfFunction deterministic_log_mgf(const CountVector& n0) {
  const Vector n = n0.cast<double>();
  return [n](const Vector& alpha) { return n.dot(alpha); };
}

/// log R_stat(alpha) = log G_stat(C(alpha)).
inline MgfValue outgoing_log_mgf(const OpenChainModel& model, const Vector& alpha, const MgfOptions& options = {}) {
  return log_stationary_mgf(model, c_map(alpha, model.escape()), options);
}

/// log R_t(alpha) = log G_t(C(alpha)).
inline double outgoing_log_mgf_at_time(const OpenChainModel& model, const Vector& alpha, std::size_t t,
                                       const LogMgfFunction& initial_log_mgf) {
  return log_mgf_at_time(model, c_map(alpha, model.escape()), t, initial_log_mgf);
}

inline LogMgfEvaluator outgoing_log_mgf_evaluator(const OpenChainModel& model, double radius = 1e-2,
                                                  const MgfOptions& options = {}) {
  LogMgfEvaluator ev = stationary_log_mgf_evaluator(model, radius, options);
  ev.fn = [model, depth = ev.truncation_depth, allow = options.allow_marginal](const Vector& alpha) {
    return log_stationary_mgf_fixed(model, c_map(alpha, model.escape()), depth, allow);
  };
  return ev;
}

struct NumericCumulants {
  Vector mean;
  Matrix covariance;
};

/// Gradient and Hessian of a log-m.g.f. at 0 by central differences with one
/// level of Richardson extrapolation (steps h and h/2).
inline NumericCumulants numeric_cumulants(const LogMgfEvaluator& evaluator, double h = 1e-4) {
  const Eigen::Index n = evaluator.dimension;
  require(n >= 1, ErrorCode::kInvalidArgument, "evaluator has no dimension");
  require(evaluator.domain_radius <= 0.0 || evaluator.domain_radius >= 2.0 * h, ErrorCode::kStepTooLarge,
          "finite-difference stencil leaves the evaluator's domain");
  const Vector origin = Vector::Zero(n);
  const double f0 = evaluator(origin);

  auto stencil = [&](double step) {
    NumericCumulants d{Vector(n), Matrix(n, n)};
    auto at = [&](Eigen::Index i, double si, Eigen::Index j, double sj) {
      Vector a = origin;
      a(i) += si;
      a(j) += sj;
      return evaluator(a);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
      const double plus = at(i, step, i, 0.0);
      const double minus = at(i, -step, i, 0.0);
      d.mean(i) = (plus - minus) / (2.0 * step);
      d.covariance(i, i) = (plus - 2.0 * f0 + minus) / (step * step);
      for (Eigen::Index j = 0; j < i; ++j) {
        const double v = (at(i, step, j, step) - at(i, step, j, -step) - at(i, -step, j, step) +
                          at(i, -step, j, -step)) /
                         (4.0 * step * step);
        d.covariance(i, j) = v;
        d.covariance(j, i) = v;
      }
    }
    return d;
  };

  const NumericCumulants coarse = stencil(h);
  const NumericCumulants fine = stencil(0.5 * h);
  NumericCumulants out{fine.mean + (fine.mean - coarse.mean) / 3.0,
                       fine.covariance + (fine.covariance - coarse.covariance) / 3.0};
  const double scale = std::max({1.0, out.mean.lpNorm<Eigen::Infinity>(), max_abs(out.covariance)});
  const double disagreement =
      std::max((fine.mean - coarse.mean).lpNorm<Eigen::Infinity>(), max_abs(fine.covariance - coarse.covariance));
  require(disagreement <= 1e-5 * scale, ErrorCode::kStepTooLarge,
          "Richardson levels disagree by " + std::to_string(disagreement));
  return out;
}

}  // namespace openchain
