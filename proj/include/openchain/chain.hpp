#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "openchain/types.hpp"

namespace openchain {

// Which structural properties validation insists on. Spectral-only exists for
// degenerate chains (Q = 0, a lone state with no self-loop) that the cumulant
// engine handles fine but that have no cycles to speak of.
enum class StructureCheck { kStrict, kSpectralOnly };

inline constexpr double kRowSumSlack = 1e-12;
inline constexpr double kSpectralMargin = 1e-9;

namespace detail {

using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline Adjacency adjacency(const Matrix& q) {
  return (q.array() > 0.0).matrix();
}

inline Adjacency boolean_product(const Adjacency& a, const Adjacency& b) {
  const Eigen::Index n = a.rows();
  Adjacency out = Adjacency::Constant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!a(i, k)) continue;
      for (Eigen::Index j = 0; j < n; ++j) out(i, j) = out(i, j) || b(k, j);
    }
  }
  return out;
}

}  // namespace detail

/// Irreducible iff every entry of (I + A)^(S-1) is positive, A being the 0/1
/// pattern of strictly positive entries.
inline bool is_irreducible(const Matrix& q) {
  const Eigen::Index n = q.rows();
  detail::Adjacency base = detail::adjacency(q);
  for (Eigen::Index i = 0; i < n; ++i) base(i, i) = true;
  detail::Adjacency result = detail::Adjacency::Identity(n, n);
  auto exponent = static_cast<std::size_t>(n > 0 ? n - 1 : 0);
  while (exponent > 0) {
    if (exponent & 1U) result = detail::boolean_product(result, base);
    base = detail::boolean_product(base, base);
    exponent >>= 1U;
  }
  return result.all();
}

/// Period of the graph of positive entries, measured through state 0: gcd of
/// level(u) + 1 - level(v) over edges reachable from 0. Zero means no cycle.
inline std::size_t period(const Matrix& q) {
  const Eigen::Index n = q.rows();
  std::vector<long> level(static_cast<std::size_t>(n), -1);
  std::queue<Eigen::Index> frontier;
  level[0] = 0;
  frontier.push(0);
  long g = 0;
  while (!frontier.empty()) {
    const Eigen::Index u = frontier.front();
    frontier.pop();
    for (Eigen::Index v = 0; v < n; ++v) {
      if (!(q(u, v) > 0.0)) continue;
      auto& lv = level[static_cast<std::size_t>(v)];
      if (lv < 0) {
        lv = level[static_cast<std::size_t>(u)] + 1;
        frontier.push(v);
      } else {
        g = std::gcd(g, std::labs(level[static_cast<std::size_t>(u)] + 1 - lv));
      }
    }
  }
  return static_cast<std::size_t>(g);
}

inline bool is_aperiodic(const Matrix& q) { return period(q) == 1; }

/// Perron root of a nonnegative square matrix. Iterates the shifted matrix
/// I + Q, whose dominant eigenvalue 1 + rho is unique in modulus, and stops on
/// the Collatz-Wielandt bracket (irreducible input) or on a stalled ratio
/// estimate (reducible input).
inline double spectral_radius(const Matrix& q, double rel_tol = 1e-10,
                              std::size_t max_iter = 100000) {
  require(q.rows() == q.cols() && q.rows() >= 1, ErrorCode::kInvalidArgument,
          "spectral_radius needs a non-empty square matrix");
  const Eigen::Index n = q.rows();
  const Matrix shifted = Matrix::Identity(n, n) + q;
  Vector x = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double previous = -1.0;
  int stalled = 0;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    Vector y = shifted * x;
    const double norm = y.norm();
    if (x.minCoeff() > 1e-280) {
      const Vector ratio = y.cwiseQuotient(x);
      const double lo = ratio.minCoeff();
      const double hi = ratio.maxCoeff();
      const double mid = 0.5 * (lo + hi) - 1.0;
      if (hi - lo <= rel_tol * std::max(mid, 1e-300)) return std::max(0.0, mid);
    }
    const double estimate = norm - 1.0;
    if (std::abs(estimate - previous) <= 1e-3 * rel_tol * norm) {
      if (++stalled >= 50) return std::max(0.0, estimate);
    } else {
      stalled = 0;
    }
    previous = estimate;
    x = y / norm;
  }
  throw Error(ErrorCode::kNoConvergence, "power iteration hit the iteration cap");
}

/// Validated sub-stochastic jump matrix: nonnegative entries, row sums at most
/// one, spectral radius below 1 - 1e-9 and (under strict checks) irreducible
/// and aperiodic. Immutable once built.
class JumpMatrix {
 public:
  static JumpMatrix validate(Matrix raw, StructureCheck checks = StructureCheck::kStrict) {
    require(raw.rows() >= 1 && raw.rows() == raw.cols(), ErrorCode::kInvalidArgument,
            "jump matrix must be square with at least one state");
    require(raw.allFinite(), ErrorCode::kInvalidArgument, "jump matrix has non-finite entries");
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        require(raw(i, j) >= 0.0, ErrorCode::kNegativeEntry,
                "q(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") < 0");
      }
      const double sum = raw.row(i).sum();
      if (sum > 1.0) {
        require(sum <= 1.0 + kRowSumSlack, ErrorCode::kRowSumExceedsOne,
                "row " + std::to_string(i + 1) + " sums to " + std::to_string(sum));
        raw.row(i) /= sum;
      }
    }
    const double rho = openchain::spectral_radius(raw);
    require(rho < 1.0 - kSpectralMargin, ErrorCode::kSpectralRadiusNotSubunit,
            "spectral radius " + std::to_string(rho) + " is not below one");
    if (checks == StructureCheck::kStrict) {
      require(is_irreducible(raw), ErrorCode::kNotIrreducible,
              "graph of positive entries is not strongly connected");
      require(is_aperiodic(raw), ErrorCode::kNotAperiodic, "graph of positive entries is periodic");
    }
    return JumpMatrix(std::move(raw), rho);
  }

  Eigen::Index size() const { return q_.rows(); }
  const Matrix& matrix() const { return q_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return q_(i, j); }
  double spectral_radius() const { return rho_; }

 private:
  JumpMatrix(Matrix q, double rho) : q_(std::move(q)), rho_(rho) {}

  Matrix q_;
  double rho_;
};

inline JumpMatrix validate_jump_matrix(Matrix raw, StructureCheck checks = StructureCheck::kStrict) {
  return JumpMatrix::validate(std::move(raw), checks);
}

inline double spectral_radius(const JumpMatrix& jump) { return jump.spectral_radius(); }

/// Per-state escape probabilities e_i = 1 - sum_j q_ij and their diagonal embedding.
struct EscapeProfile {
  Vector escape_vector;

  Matrix escape_matrix() const { return escape_vector.asDiagonal(); }
  double operator[](Eigen::Index i) const { return escape_vector(i); }
};

inline EscapeProfile escape_profile(const JumpMatrix& jump) {
  Vector e = Vector::Ones(jump.size()) - jump.matrix().rowwise().sum();
  return EscapeProfile{e.cwiseMax(0.0)};
}

/// Q^k by repeated squaring; Q^0 is the identity.
inline Matrix matrix_power(const Matrix& q, std::size_t k) {
  Matrix result = Matrix::Identity(q.rows(), q.cols());
  Matrix base = q;
  while (k > 0) {
    if (k & 1U) result = result * base;
    k >>= 1U;
    if (k > 0) base = base * base;
  }
  return result;
}

inline Matrix matrix_power(const JumpMatrix& jump, std::size_t k) {
  return matrix_power(jump.matrix(), k);
}

/// Structural report used by `openchain validate`; never throws on a bad matrix.
struct JumpDiagnostics {
  bool square = false;
  bool nonnegative = false;
  double max_row_sum = 0.0;
  double spectral_radius = 0.0;
  bool irreducible = false;
  bool aperiodic = false;
  Vector escape_vector;
};

inline JumpDiagnostics diagnose_jump_matrix(const Matrix& raw) {
  JumpDiagnostics d;
  d.square = raw.rows() >= 1 && raw.rows() == raw.cols() && raw.allFinite();
  if (!d.square) return d;
  d.nonnegative = (raw.array() >= 0.0).all();
  d.max_row_sum = raw.rowwise().sum().maxCoeff();
  d.escape_vector = Vector::Ones(raw.rows()) - raw.rowwise().sum();
  if (d.nonnegative) {
    try {
      d.spectral_radius = openchain::spectral_radius(raw);
    } catch (const Error&) {
      d.spectral_radius = std::nan("");
    }
  }
  d.irreducible = is_irreducible(raw);
  d.aperiodic = d.irreducible && is_aperiodic(raw);
  return d;
}

}  // namespace openchain
