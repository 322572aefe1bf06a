#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <type_traits>

#include "openchain/types.hpp"

namespace openchain {

using Generator = std::mt19937_64;
inline constexpr std::string_view kGeneratorName = "mt19937_64";

/// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw.
template <class URBG>
double uniform01(URBG& rng) {
  static_assert(std::is_same_v<typename URBG::result_type, std::uint64_t>,
                "sampling expects a 64-bit generator");
  static_assert(URBG::min() == 0 && URBG::max() == std::numeric_limits<std::uint64_t>::max());
  return static_cast<double>(rng() >> 11U) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe to take the log of.
template <class URBG>
double uniform01_open(URBG& rng) {
  return (static_cast<double>(rng() >> 11U) + 1.0) * 0x1.0p-53;
}

/// Generator seeded from (seed, stream) through std::seed_seq, so sweep points
/// and repeated runs get independent, reproducible streams.
inline Generator make_generator(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32U)};
  return Generator(seq);
}

namespace detail {

// log(k!) - [(k + 1/2) log(k + 1) - (k + 1) + log(sqrt(2 pi))]
inline double stirling_tail(double k) {
  static constexpr std::array<double, 10> kTable = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834, 0.02079067210376509,
      0.01664469118982119, 0.01387612882307075, 0.01189670994589177, 0.01041126526197209,
      0.009255462182712733, 0.008330563433362871};
  if (k <= 9.0) return kTable[static_cast<std::size_t>(k)];
  const double kp1 = k + 1.0;
  const double kp1sq = kp1 * kp1;
  return (1.0 / 12 - (1.0 / 360 - 1.0 / 1260 / kp1sq) / kp1sq) / kp1;
}

// Sequential-search inversion; expects n * p small so q^n does not underflow.
template <class URBG>
Count binomial_inversion(Count n, double p, URBG& rng) {
  const double q = 1.0 - p;
  const double ratio = p / q;
  double f = std::exp(static_cast<double>(n) * std::log1p(-p));
  double u = uniform01(rng);
  Count k = 0;
  while (u >= f && k < n) {
    u -= f;
    f *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
    ++k;
  }
  return k;
}

// Hoermann's BTRS transformed rejection with squeeze; exact, needs n * p >= 10
// and p <= 1/2.
template <class URBG>
Count binomial_btrs(Count n, double p, URBG& rng) {
  const double dn = static_cast<double>(n);
  const double spq = std::sqrt(dn * p * (1.0 - p));
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = dn * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r = p / (1.0 - p);
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double m = std::floor((dn + 1.0) * p);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    double v = uniform01_open(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > dn) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<Count>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound = (m + 0.5) * std::log((m + 1.0) / (r * (dn - m + 1.0))) +
                         (dn + 1.0) * std::log((dn - m + 1.0) / (dn - k + 1.0)) +
                         (k + 0.5) * std::log(r * (dn - k + 1.0) / (k + 1.0)) + stirling_tail(m) +
                         stirling_tail(dn - m) - stirling_tail(k) - stirling_tail(dn - k);
    if (v <= bound) return static_cast<Count>(k);
  }
}

}  // namespace detail

/// Exact Binomial(n, p) draw.
template <class URBG>
Count sample_binomial(Count n, double p, URBG& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const bool flip = p > 0.5;
  const double pp = flip ? 1.0 - p : p;
  const Count k = static_cast<double>(n) * pp < 10.0 ? detail::binomial_inversion(n, pp, rng)
                                                     : detail::binomial_btrs(n, pp, rng);
  return flip ? n - k : k;
}

/// Exact multinomial draw of n items over the categories in `probabilities`
/// (renormalized), written into `out`. Category k is drawn as
/// Binomial(remaining, p_k / p_remaining).
template <class URBG>
void multinomial_split(Count n, std::span<const double> probabilities, std::span<Count> out,
                       URBG& rng) {
  require(out.size() == probabilities.size(), ErrorCode::kShapeMismatch,
          "multinomial output size differs from probability count");
  double total = 0.0;
  for (double p : probabilities) {
    require(p >= 0.0, ErrorCode::kInvalidProbabilities, "negative multinomial probability");
    total += p;
  }
  require(total > 0.0, ErrorCode::kInvalidProbabilities, "multinomial probabilities sum to zero");
  Count remaining = n;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    if (remaining == 0) {
      out[k] = 0;
      continue;
    }
    // Summed back-to-front so a zero tail gives a share of exactly one.
    double mass_left = 0.0;
    for (std::size_t j = probabilities.size(); j-- > k;) mass_left += probabilities[j];
    const double share = mass_left > 0.0 ? std::min(1.0, probabilities[k] / mass_left) : 0.0;
    out[k] = sample_binomial(remaining, share, rng);
    remaining -= out[k];
  }
}

template <class URBG>
CountVector multinomial_split(Count n, const Vector& probabilities, URBG& rng) {
  CountVector out(probabilities.size());
  multinomial_split(n, std::span<const double>(probabilities.data(), probabilities.size()),
                    std::span<Count>(out.data(), out.size()), rng);
  return out;
}

}  // namespace openchain
