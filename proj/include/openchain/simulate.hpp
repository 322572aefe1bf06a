#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "openchain/model.hpp"
#include "openchain/random.hpp"

namespace openchain {

inline constexpr Count kCountLimit = Count{1} << 62;

/// Particle counts N^t per state.
using StateVector = CountVector;

/// Everything one step of the dynamics produces. `retained(i, j)` is the
/// number of particles moving i -> j; `outflow_per_state(i)` the number
/// escaping from i (the outside category of the same multinomial draw).
struct StepOutcome {
  StateVector next;
  CountVector inflow;
  CountVector outflow_per_state;
  Count outflow_total = 0;
  CountMatrix retained;
};

namespace detail {

// Redistribution of `current` into `retained` and `outflow`; returns nothing,
// throws on a conservation breach (would indicate a sampler bug).
template <class URBG>
void redistribute(const OpenChainModel& model, const Eigen::Ref<const CountVector>& current,
                  CountMatrix& retained, Eigen::Ref<CountVector> outflow, std::vector<double>& probs,
                  std::vector<Count>& draw, URBG& rng) {
  const Eigen::Index s = model.size();
  const Matrix& q = model.jump().matrix();
  for (Eigen::Index i = 0; i < s; ++i) {
    const Count n = current(i);
    require(n >= 0, ErrorCode::kInvalidArgument, "negative particle count");
    for (Eigen::Index j = 0; j < s; ++j) probs[static_cast<std::size_t>(j)] = q(i, j);
    probs[static_cast<std::size_t>(s)] = model.escape()[i];
    multinomial_split(n, std::span<const double>(probs), std::span<Count>(draw), rng);
    Count total = 0;
    for (Eigen::Index j = 0; j < s; ++j) {
      retained(i, j) = draw[static_cast<std::size_t>(j)];
      total += retained(i, j);
    }
    outflow(i) = draw[static_cast<std::size_t>(s)];
    require(total + outflow(i) == n, ErrorCode::kInvalidArgument, "particle conservation violated");
  }
}

inline void guard_overflow(const CountVector& v) {
  for (Count c : v) require(c <= kCountLimit, ErrorCode::kCountOverflow, "particle count exceeds 2^62");
}

}  // namespace detail

/// One step N^t -> N^{t+1}: each state splits its particles multinomially over
/// (q_i1, ..., q_iS, e_i), then the protocol's inflow is added.
template <class URBG>
StepOutcome step(const OpenChainModel& model, const StateVector& current,
                 std::optional<std::size_t>& hidden, URBG& rng, std::size_t t = 0) {
  const Eigen::Index s = model.size();
  require(current.size() == s, ErrorCode::kShapeMismatch, "state vector has the wrong length");
  StepOutcome out;
  out.retained.resize(s, s);
  out.outflow_per_state.resize(s);
  out.inflow.resize(s);
  std::vector<double> probs(static_cast<std::size_t>(s + 1));
  std::vector<Count> draw(static_cast<std::size_t>(s + 1));
  detail::redistribute(model, current, out.retained, out.outflow_per_state, probs, draw, rng);
  model.schedule().at(t).sample_into(out.inflow, hidden, rng);
  out.next = out.inflow + out.retained.colwise().sum().transpose();
  out.outflow_total = out.outflow_per_state.sum();
  detail::guard_overflow(out.next);
  return out;
}

/// Seeded time series of one run. Row t holds N^t, the inflow J^t and escapes
/// U^t of the step taken from N^t, and O_t. Rows t < burn_in are kept but
/// excluded from statistics.
struct SimulationRecord {
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::string generator{kGeneratorName};
  std::string model_fingerprint;
  CountMatrix counts;
  CountMatrix inflow;
  CountMatrix outflow;
  CountVector outflow_total;

  std::size_t horizon() const { return static_cast<std::size_t>(counts.rows()); }
  Eigen::Index states() const { return counts.cols(); }
  bool in_burn_in(std::size_t t) const { return t < burn_in; }
};

inline std::size_t default_burn_in(std::size_t horizon) { return horizon / 10; }

template <class URBG>
SimulationRecord run_with(const OpenChainModel& model, std::size_t horizon, const StateVector& initial,
                          std::size_t burn_in, URBG& rng) {
  require(horizon >= 1, ErrorCode::kInvalidArgument, "horizon must be at least one step");
  require(burn_in < horizon, ErrorCode::kSeriesTooShort, "burn-in must be shorter than the horizon");
  const Eigen::Index s = model.size();
  require(initial.size() == s, ErrorCode::kShapeMismatch, "initial state has the wrong length");
  require((initial.array() >= 0).all(), ErrorCode::kInvalidArgument, "initial counts must be >= 0");

  SimulationRecord rec;
  rec.burn_in = burn_in;
  rec.model_fingerprint = model_fingerprint(model);
  const auto rows = static_cast<Eigen::Index>(horizon);
  rec.counts.resize(rows, s);
  rec.inflow.resize(rows, s);
  rec.outflow.resize(rows, s);
  rec.outflow_total.resize(rows);

  CountMatrix retained(s, s);
  CountVector current = initial;
  CountVector inflow(s);
  CountVector escaped(s);
  std::vector<double> probs(static_cast<std::size_t>(s + 1));
  std::vector<Count> draw(static_cast<std::size_t>(s + 1));
  std::optional<std::size_t> hidden;
  hidden = model.schedule().at(0).initial_hidden_state(rng);

  for (Eigen::Index t = 0; t < rows; ++t) {
    rec.counts.row(t) = current.transpose();
    detail::redistribute(model, current, retained, escaped, probs, draw, rng);
    model.schedule().at(static_cast<std::size_t>(t)).sample_into(inflow, hidden, rng);
    rec.inflow.row(t) = inflow.transpose();
    rec.outflow.row(t) = escaped.transpose();
    rec.outflow_total(t) = escaped.sum();
    current = inflow + retained.colwise().sum().transpose();
    detail::guard_overflow(current);
  }
  return rec;
}

/// `horizon` steps from `initial` with a generator seeded from `seed`.
inline SimulationRecord run(const OpenChainModel& model, std::size_t horizon, const StateVector& initial,
                            std::uint64_t seed, std::optional<std::size_t> burn_in = std::nullopt,
                            std::uint64_t stream = 0) {
  Generator rng = make_generator(seed, stream);
  SimulationRecord rec = run_with(model, horizon, initial, burn_in.value_or(default_burn_in(horizon)), rng);
  rec.seed = seed;
  return rec;
}

/// Exact stationary law of the one-state chain with Bernoulli(p) inflow and
/// retention q, on counts {0..M}: builds the one-step kernel and power-iterates.
/// Mass that would step past M is folded into M and must stay below 1e-12.
inline Vector enumerate_one_vertex_stationary(double p, double q, std::size_t truncation) {
  require(q > 0.0 && q < 1.0, ErrorCode::kInvalidArgument, "q must lie in (0,1)");
  require(p >= 0.0 && p <= 1.0, ErrorCode::kInvalidArgument, "p must lie in [0,1]");
  require(truncation >= 1, ErrorCode::kInvalidArgument, "truncation must be positive");
  const auto m = static_cast<Eigen::Index>(truncation);
  // kernel(k, n) = sum_{j + r = n} Bernoulli(p)(j) Binomial(k, q)(r)
  Matrix kernel = Matrix::Zero(m + 1, m + 1);
  Vector spill = Vector::Zero(m + 1);
  for (Eigen::Index k = 0; k <= m; ++k) {
    Vector binom = Vector::Zero(k + 1);
    for (Eigen::Index r = 0; r <= k; ++r) {
      const double log_pmf = std::lgamma(static_cast<double>(k) + 1) - std::lgamma(static_cast<double>(r) + 1) -
                             std::lgamma(static_cast<double>(k - r) + 1) + static_cast<double>(r) * std::log(q) +
                             static_cast<double>(k - r) * std::log1p(-q);
      binom(r) = std::exp(log_pmf);
    }
    for (Eigen::Index r = 0; r <= k; ++r) {
      kernel(k, r) += (1.0 - p) * binom(r);
      if (r + 1 <= m) {
        kernel(k, r + 1) += p * binom(r);
      } else {
        kernel(k, m) += p * binom(r);
        spill(k) += p * binom(r);
      }
    }
  }
  Vector dist = Vector::Zero(m + 1);
  dist(0) = 1.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Vector next = (dist.transpose() * kernel).transpose();
    next /= next.sum();
    const double change = (next - dist).lpNorm<1>();
    dist = std::move(next);
    if (change < 1e-15) break;
  }
  const double tail = dist(m) + dist.dot(spill);
  require(tail <= 1e-12, ErrorCode::kTruncationTooSmall,
          "stationary mass at the truncation boundary is " + std::to_string(tail));
  return dist;
}

}  // namespace openchain
