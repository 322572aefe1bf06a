#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "openchain/chain.hpp"
#include "openchain/model.hpp"
#include "openchain/protocols.hpp"

namespace openchain {

/// Mean vector and covariance matrix of the counts at one time.
struct CumulantState {
  Vector mean;
  Matrix covariance;
};

/// Moments of the escaping particles U^t and their total O_t.
struct OutgoingMoments {
  Vector mean_per_state;
  Matrix covariance;
  double mean_total = 0.0;
  double var_total = 0.0;
};

// The multinomial form follows from the redistribution law; the independent
// binomial form (diagonal only) is kept for diagnostics.
enum class LambdaForm { kMultinomial, kIndependentBinomial };

/// Redistribution noise: Lambda_ij = sum_k mu_k (q_ki delta_ij - q_ki q_kj).
inline Matrix lambda_matrix(const Vector& mean, const Matrix& q, LambdaForm form = LambdaForm::kMultinomial) {
  require(mean.size() == q.rows(), ErrorCode::kShapeMismatch, "mean and jump matrix differ in size");
  const Vector inflow_weight = q.transpose() * mean;  // sum_k mu_k q_ki
  if (form == LambdaForm::kIndependentBinomial) {
    const Vector second = q.cwiseProduct(q).transpose() * mean;
    return (inflow_weight - second).asDiagonal();
  }
  Matrix lambda = -q.transpose() * mean.asDiagonal() * q;
  lambda.diagonal() += inflow_weight;
  return lambda;
}

inline Matrix lambda_matrix(const Vector& mean, const JumpMatrix& jump,
                            LambdaForm form = LambdaForm::kMultinomial) {
  return lambda_matrix(mean, jump.matrix(), form);
}

/// One step of the cumulant recurrences (row-vector convention):
/// mu' = eps + mu Q,  Sigma' = Delta + Lambda(mu) + Q^T Sigma Q.
inline CumulantState cumulant_step(const CumulantState& state, const ProtocolMoments& inflow, const JumpMatrix& jump,
                                   LambdaForm form = LambdaForm::kMultinomial) {
  const Matrix& q = jump.matrix();
  require(state.mean.size() == q.rows() && inflow.mean.size() == q.rows(), ErrorCode::kShapeMismatch,
          "cumulant state and inflow moments must match the jump matrix");
  CumulantState next;
  next.mean = inflow.mean + q.transpose() * state.mean;
  next.covariance = inflow.covariance + lambda_matrix(state.mean, q, form) + q.transpose() * state.covariance * q;
  return next;
}

/// Transient cumulants after `steps` steps from `initial`, consuming the
/// schedule's per-step (eps_t, Delta_t).
inline CumulantState evolve_cumulants(const OpenChainModel& model, CumulantState initial, std::size_t steps) {
  for (std::size_t t = 0; t < steps; ++t) {
    initial = cumulant_step(initial, model.schedule().moments_at(t), model.jump());
  }
  return initial;
}

/// mu-bar solving mu (I - Q) = eps by a direct LU solve.
inline Vector stationary_mean(const ProtocolMoments& inflow, const JumpMatrix& jump) {
  const Matrix& q = jump.matrix();
  const Eigen::Index n = q.rows();
  require(inflow.mean.size() == n, ErrorCode::kShapeMismatch, "inflow mean has the wrong length");
  const Matrix system = (Matrix::Identity(n, n) - q).transpose();
  const Eigen::FullPivLU<Matrix> lu(system);
  require(lu.isInvertible(), ErrorCode::kSingularSystem, "I - Q is singular");
  Vector mu = lu.solve(inflow.mean);
  const double residual = (mu - inflow.mean - q.transpose() * mu).lpNorm<Eigen::Infinity>();
  require(residual < 1e-10 * std::max(1.0, mu.lpNorm<Eigen::Infinity>()), ErrorCode::kSingularSystem,
          "stationary mean residual too large");
  return mu;
}

struct StationaryVarianceOptions {
  double tol = 1e-12;
  std::size_t max_terms = 10'000'000;
  LambdaForm form = LambdaForm::kMultinomial;
};

/// Sigma-bar = sum_k (Q^T)^k (Delta + Lambda-bar) Q^k, summed until the term's
/// max-norm drops below tol (1 - rho^2), then one fixed-point polish.
inline Matrix stationary_variance(const ProtocolMoments& inflow, const JumpMatrix& jump,
                                  const StationaryVarianceOptions& options = {}) {
  const Matrix& q = jump.matrix();
  const Vector mu = stationary_mean(inflow, jump);
  const Matrix source = inflow.covariance + lambda_matrix(mu, q, options.form);
  const double rho = jump.spectral_radius();
  const double stop = options.tol * (1.0 - rho * rho);
  Matrix sigma = source;
  Matrix term = source;
  std::size_t k = 1;
  for (; k < options.max_terms; ++k) {
    term = q.transpose() * term * q;
    sigma += term;
    if (max_abs(term) < stop) break;
  }
  require(k < options.max_terms, ErrorCode::kToleranceNotReached,
          "variance series did not reach tolerance in " + std::to_string(options.max_terms) + " terms");
  sigma = source + q.transpose() * sigma * q;
  return 0.5 * (sigma + sigma.transpose());
}

inline Vector stationary_mean(const OpenChainModel& model) {
  return stationary_mean(moments(model.protocol()), model.jump());
}

inline Matrix stationary_variance(const OpenChainModel& model, const StationaryVarianceOptions& options = {}) {
  return stationary_variance(moments(model.protocol()), model.jump(), options);
}

inline CumulantState stationary_cumulants(const OpenChainModel& model, const StationaryVarianceOptions& options = {}) {
  const ProtocolMoments m = moments(model.protocol());
  return {stationary_mean(m, model.jump()), stationary_variance(m, model.jump(), options)};
}

/// Cov(N^t, N^{t+s}) = Sigma_t Q^s.
inline Matrix lag_covariance(const Matrix& sigma, const JumpMatrix& jump, std::size_t s) {
  return sigma * matrix_power(jump, s);
}

/// kappa_ij = Sigma_ij / sqrt(Sigma_ii Sigma_jj), with an exact unit diagonal.
inline Matrix spatial_correlation(const Matrix& sigma) {
  const Vector d = sigma.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    require(d(i) > 0.0, ErrorCode::kZeroVarianceState, "state " + std::to_string(i + 1) + " has zero variance");
  }
  const Vector inv_sd = d.cwiseSqrt().cwiseInverse();
  Matrix kappa = inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
  kappa.diagonal().setOnes();
  return kappa;
}

/// C~_ij(s) = (Sigma-bar Q^s)_ij / sqrt(Sigma-bar_ii Sigma-bar_jj).
inline Matrix time_correlation(const Matrix& sigma_stat, const JumpMatrix& jump, std::size_t s) {
  if (s == 0) return spatial_correlation(sigma_stat);
  const Vector d = sigma_stat.diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    require(d(i) > 0.0, ErrorCode::kZeroVarianceState, "state " + std::to_string(i + 1) + " has zero variance");
  }
  const Vector inv_sd = d.cwiseSqrt().cwiseInverse();
  return inv_sd.asDiagonal() * lag_covariance(sigma_stat, jump, s) * inv_sd.asDiagonal();
}

/// E[U] = mu E, Var(U) = E Sigma E + D with D_ii = mu_i e_i (1 - e_i);
/// E[O] = mu . e, Var(O) = e Sigma e^T + mu (I - E) e^T.
inline OutgoingMoments outgoing_moments(const CumulantState& state, const EscapeProfile& escape) {
  const Vector& e = escape.escape_vector;
  require(state.mean.size() == e.size(), ErrorCode::kShapeMismatch, "state and escape profile differ in size");
  OutgoingMoments out;
  out.mean_per_state = state.mean.cwiseProduct(e);
  const Vector noise = out.mean_per_state.cwiseProduct((Vector::Ones(e.size()) - e));
  out.covariance = e.asDiagonal() * state.covariance * e.asDiagonal();
  out.covariance.diagonal() += noise;
  out.mean_total = out.mean_per_state.sum();
  out.var_total = e.dot(state.covariance * e) + noise.sum();
  return out;
}

/// Closed forms of kappa_12 and kappa_13 (= kappa_23) for the symmetric
/// three-state chain with the correlated inflow of `three_state_example(p)`.
inline std::pair<double, double> three_state_kappa(double p, double q) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument, "p must lie in [0,1]");
  require(q > 0.0 && q < 0.5, ErrorCode::kInvalidArgument, "q must lie in (0,1/2)");
  const double q2 = q * q;
  const double q3 = q2 * q;
  const double q4 = q2 * q2;
  const double q5 = q4 * q;
  const double a = (8 * p - 2) * q4 - 8 * q5 + 4 * q3 + 3 * q2 + 4 * q + 1;
  const double b = (6 - 8 * p) * q4 + (4 * p + 1) * q2 - 8 * q5 + 4 * q3 + 4 * q + 1;
  const double k12 = (p * (-8 * q4 - 4 * q2 + 2) + 2 * q4 + q2 - 1) / std::sqrt(a * a);
  const double k13 = -2 * q2 * (-p + q2 + 1) / std::sqrt(b) / std::sqrt(a);
  return {k12, k13};
}

/// Symmetric three-state jump matrix with off-diagonal q.
inline Matrix three_state_jump(double q) {
  Matrix m = Matrix::Constant(3, 3, q);
  m.diagonal().setZero();
  return m;
}

}  // namespace openchain
