#include <gtest/gtest.h>

#include <random>

#include "openchain/cumulants.hpp"
#include "openchain/simulate.hpp"
#include "openchain/stats.hpp"

using namespace openchain;

namespace {

OpenChainModel one_vertex(double p, double q) {
  return OpenChainModel(JumpMatrix::validate(Matrix::Constant(1, 1, q)), IncomingProtocol::bernoulli({p}));
}

OpenChainModel three_state(double p, double q) {
  return OpenChainModel(JumpMatrix::validate(three_state_jump(q)), three_state_example(p));
}

Matrix example2_jump() {
  Matrix q(3, 3);
  q << 0, 0.5, 0.25, 0.25, 0.25, 0, 0.25, 0.5, 0.25;
  return q;
}

OpenChainModel example2() {
  return OpenChainModel(JumpMatrix::validate(example2_jump()), IncomingProtocol::bernoulli({0.1, 0.0, 0.6}));
}

// Printed closed form of the stationary covariance of the three-state chain.
Matrix three_state_sigma_closed_form(double p, double q) {
  const double q2 = q * q;
  const double q3 = q2 * q;
  const double q4 = q2 * q2;
  const double q5 = q4 * q;
  const double q6 = q3 * q3;
  const double den = 8 * q6 - 6 * q4 - 3 * q2 + 1;
  const double s11 = (-8 * q5 + (8 * p - 2) * q4 + 4 * q3 + 3 * q2 + 4 * q + 1) / (4 * den);
  const double s12 = (2 * q4 + q2 + p * (-8 * q4 - 4 * q2 + 2) - 1) / (4 * den);
  const double s13 = -q2 * (q2 - p + 1) / (2 * den);
  const double s33 = (-8 * q5 + (6 - 8 * p) * q4 + 4 * q3 + (4 * p + 1) * q2 + 4 * q + 1) / (4 * den);
  Matrix s(3, 3);
  s << s11, s12, s13, s12, s11, s13, s13, s13, s33;
  return s;
}

// Lyapunov fixed point solved as a dense linear system in vec form:
// (I - Q^T (x) Q^T) vec(Sigma) = vec(M).
Matrix kronecker_lyapunov(const Matrix& q, const Matrix& source) {
  const Eigen::Index n = q.rows();
  Matrix k(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) k.block(a * n, b * n, n, n) = q(b, a) * q.transpose();
  }
  const Matrix system = Matrix::Identity(n * n, n * n) - k;
  const Vector rhs = Eigen::Map<const Vector>(source.data(), n * n);
  const Vector x = system.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(x.data(), n, n);
}

// Truncated Neumann series eps sum_k Q^k.
Vector neumann_mean(const Vector& eps, const Matrix& q, int terms) {
  Vector total = Vector::Zero(eps.size());
  Vector term = eps;
  for (int k = 0; k < terms; ++k) {
    total += term;
    term = q.transpose() * term;
  }
  return total;
}

Matrix random_jump(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::uniform_real_distribution<double> mass(0.2, 0.9);
  Matrix q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) q(i, j) = u(rng);
    q.row(i) *= mass(rng) / q.row(i).sum();
  }
  return q;
}

IncomingProtocol random_bernoulli(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(n));
  for (double& x : p) x = u(rng);
  return IncomingProtocol::bernoulli(p);
}

}  // namespace

TEST(Lambda, VanishesWithoutRetention) {
  const Vector mu = Vector::Constant(3, 2.5);
  EXPECT_EQ(lambda_matrix(mu, Matrix::Zero(3, 3)), Matrix::Zero(3, 3));
}

TEST(Lambda, OneVertexIsBinomialVariance) {
  for (double m : {0.0, 0.6, 3.0}) {
    EXPECT_NEAR(lambda_matrix(Vector::Constant(1, m), Matrix::Constant(1, 1, 0.5))(0, 0), m * 0.25, 1e-15);
  }
}

TEST(Lambda, ThreeStateStationaryMatchesPrintedMatrix) {
  for (double q : {0.1, 0.25, 0.45}) {
    const Vector mu = stationary_mean(three_state(0.4, q));
    const double scale = 1.0 / (2 - 4 * q);
    Matrix expected = Matrix::Constant(3, 3, -q * q * scale);
    expected.diagonal().setConstant(2 * q * (1 - q) * scale);
    EXPECT_LT(max_abs(lambda_matrix(mu, three_state_jump(q)) - expected), 1e-12) << "q=" << q;
  }
}

TEST(Lambda, BinomialFormKeepsOnlyTheDiagonal) {
  const Vector mu = Vector::Constant(3, 2.0);
  const Matrix multi = lambda_matrix(mu, example2_jump());
  const Matrix binom = lambda_matrix(mu, example2_jump(), LambdaForm::kIndependentBinomial);
  EXPECT_EQ(binom - Matrix(binom.diagonal().asDiagonal()), Matrix::Zero(3, 3));
  EXPECT_LT(max_abs(binom.diagonal() - multi.diagonal()), 1e-15);
  EXPECT_GT(max_abs(multi - Matrix(multi.diagonal().asDiagonal())), 0.1);
}

TEST(Lambda, IsSymmetricPsd) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    Vector mu(n);
    for (int i = 0; i < n; ++i) mu(i) = u(rng);
    const Matrix l = lambda_matrix(mu, random_jump(rng, n));
    EXPECT_LT(max_abs(l - l.transpose()), 1e-14);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(l).eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(CumulantStep, EmptiesWhenQIsZero) {
  const JumpMatrix j = JumpMatrix::validate(Matrix::Zero(2, 2), StructureCheck::kSpectralOnly);
  const ProtocolMoments m = moments(IncomingProtocol::bernoulli({0.3, 0.7}));
  const CumulantState next = cumulant_step({Vector::Constant(2, 4.0), Matrix::Identity(2, 2)}, m, j);
  EXPECT_EQ(next.mean, m.mean);
  EXPECT_EQ(next.covariance, m.covariance);
}

TEST(CumulantStep, StationaryPairIsAFixedPoint) {
  for (const OpenChainModel& model : {one_vertex(0.3, 0.5), example2(), three_state(0.4, 0.45)}) {
    const CumulantState stat = stationary_cumulants(model);
    const CumulantState next = cumulant_step(stat, moments(model.protocol()), model.jump());
    EXPECT_LT((next.mean - stat.mean).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_LT(max_abs(next.covariance - stat.covariance), 1e-10);
  }
}

TEST(CumulantStep, OneVertexTransientMean) {
  const OpenChainModel m = one_vertex(0.3, 0.5);
  CumulantState s{Vector::Zero(1), Matrix::Zero(1, 1)};
  for (int t = 1; t <= 40; ++t) {
    s = cumulant_step(s, moments(m.protocol()), m.jump());
    EXPECT_NEAR(s.mean(0), 0.6 * (1 - std::pow(0.5, t)), 1e-14) << "t=" << t;
  }
  EXPECT_NEAR(s.mean(0), 0.6, 1e-11);
}

TEST(Evolve, FollowsTheSchedule) {
  const JumpMatrix j = JumpMatrix::validate(Matrix::Constant(1, 1, 0.5));
  std::vector<ProtocolSchedule::Segment> segs;
  segs.push_back({3, IncomingProtocol::bernoulli({1.0})});
  segs.push_back({0, IncomingProtocol::bernoulli({0.0})});
  const OpenChainModel model(j, ProtocolSchedule(std::move(segs)));
  const CumulantState s3 = evolve_cumulants(model, {Vector::Zero(1), Matrix::Zero(1, 1)}, 3);
  EXPECT_NEAR(s3.mean(0), 1 + 0.5 + 0.25, 1e-15);
  // Deterministic arrivals: variance comes only from retention, q(1-q) mu + q^2 Sigma.
  EXPECT_NEAR(s3.covariance(0, 0), 0.25 * 1.5 + 0.25 * (0.25 * 1.0), 1e-15);
  const CumulantState s5 = evolve_cumulants(model, {Vector::Zero(1), Matrix::Zero(1, 1)}, 5);
  EXPECT_NEAR(s5.mean(0), 1.75 * 0.25, 1e-15);
  EXPECT_THROW(stationary_mean(model), Error);
}

TEST(StationaryMean, ThreeStateAtQuarter) {
  const Vector mu = stationary_mean(three_state(0.4, 0.25));
  EXPECT_LT((mu - Vector::Ones(3)).lpNorm<Eigen::Infinity>(), 1e-12);
  for (double q : {0.1, 0.3, 0.45}) {
    EXPECT_LT((stationary_mean(three_state(0.7, q)) - Vector::Constant(3, 1 / (2 - 4 * q))).lpNorm<Eigen::Infinity>(),
              1e-12);
  }
}

TEST(StationaryMean, OneVertexIsPOverOneMinusQ) {
  for (double p : {0.1, 0.3, 0.9}) {
    for (double q : {0.05, 0.5, 0.95}) {
      EXPECT_NEAR(stationary_mean(one_vertex(p, q))(0), p / (1 - q), 1e-12);
    }
  }
}

TEST(StationaryMean, ZeroJumpReturnsInflowMean) {
  const JumpMatrix j = JumpMatrix::validate(Matrix::Zero(2, 2), StructureCheck::kSpectralOnly);
  const ProtocolMoments m = moments(IncomingProtocol::bernoulli({0.3, 0.7}));
  EXPECT_EQ(stationary_mean(m, j), m.mean);
}

TEST(StationaryMean, MatchesNeumannSeriesOnRandomModels) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 7;
    const Matrix q = random_jump(rng, n);
    const OpenChainModel model(JumpMatrix::validate(q), random_bernoulli(rng, n));
    const Vector mu = stationary_mean(model);
    EXPECT_LT((mu - neumann_mean(moments(model.protocol()).mean, q, 2000)).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_LT((mu - moments(model.protocol()).mean - q.transpose() * mu).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(StationaryVariance, ZeroJumpReturnsInflowCovariance) {
  const JumpMatrix j = JumpMatrix::validate(Matrix::Zero(3, 3), StructureCheck::kSpectralOnly);
  const ProtocolMoments m = moments(three_state_example(0.4));
  EXPECT_LT(max_abs(stationary_variance(m, j) - m.covariance), 1e-15);
}

TEST(StationaryVariance, OneVertexUsesTheMinusSign) {
  const double v = stationary_variance(one_vertex(0.3, 0.5))(0, 0);
  EXPECT_NEAR(v, 0.48, 1e-12);
  EXPECT_NEAR(v, 0.3 / 0.5 - 0.09 / 0.75, 1e-12);
  EXPECT_GT(std::abs(v - 0.72), 0.2);
}

TEST(StationaryVariance, OneVertexMatchesEnumerationOracle) {
  for (auto [p, q] : {std::pair{0.3, 0.5}, std::pair{0.8, 0.7}, std::pair{0.1, 0.2}}) {
    const Vector pi = enumerate_one_vertex_stationary(p, q, 120);
    double mean = 0.0;
    double second = 0.0;
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
      mean += static_cast<double>(k) * pi(k);
      second += static_cast<double>(k * k) * pi(k);
    }
    const OpenChainModel m = one_vertex(p, q);
    EXPECT_NEAR(stationary_mean(m)(0), mean, 1e-9);
    EXPECT_NEAR(stationary_variance(m)(0, 0), second - mean * mean, 1e-9);
  }
}

TEST(StationaryVariance, ThreeStateMatchesPrintedClosedForm) {
  for (auto [p, q] : {std::pair{0.4, 0.45}, std::pair{0.4, 0.25}, std::pair{0.0, 0.3}, std::pair{1.0, 0.49}}) {
    const Matrix sigma = stationary_variance(three_state(p, q));
    EXPECT_LT(max_abs(sigma - three_state_sigma_closed_form(p, q)), 1e-9) << "p=" << p << " q=" << q;
  }
  const Matrix s = three_state_sigma_closed_form(0.4, 0.45);
  EXPECT_NEAR(s(0, 0), 4.31389415203963, 1e-12);
  EXPECT_NEAR(s(0, 1), -0.435322148900818, 1e-12);
}

TEST(StationaryVariance, MatchesKroneckerSolveOnRandomModels) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix q = random_jump(rng, n);
    const OpenChainModel model(JumpMatrix::validate(q), random_bernoulli(rng, n));
    const ProtocolMoments m = moments(model.protocol());
    const Matrix source = m.covariance + lambda_matrix(stationary_mean(model), q);
    const Matrix sigma = stationary_variance(model);
    EXPECT_LT(max_abs(sigma - kronecker_lyapunov(q, source)), 1e-9);
    EXPECT_LT(max_abs(sigma - sigma.transpose()), 1e-12);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(sigma).eigenvalues().minCoeff(), -1e-9);
    EXPECT_LT(max_abs(source + q.transpose() * sigma * q - sigma), 1e-10);
  }
}

TEST(StationaryVariance, IterationCapIsReported) {
  StationaryVarianceOptions opts;
  opts.max_terms = 3;
  try {
    stationary_variance(three_state(0.4, 0.45), opts);
    FAIL() << "expected ToleranceNotReached";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kToleranceNotReached);
  }
}

TEST(Convergence, IteratedStepsApproachStationarity) {
  const OpenChainModel model = three_state(0.4, 0.45);
  const CumulantState stat = stationary_cumulants(model);
  CumulantState s{Vector::Constant(3, 20.0), Matrix::Identity(3, 3) * 7.0};
  const ProtocolMoments m = moments(model.protocol());
  double prev_mean_err = (s.mean - stat.mean).lpNorm<Eigen::Infinity>();
  for (int t = 1; t <= 400; ++t) {
    s = cumulant_step(s, m, model.jump());
    const double err = (s.mean - stat.mean).lpNorm<Eigen::Infinity>();
    EXPECT_LE(err, 0.9 * prev_mean_err + 1e-13) << "t=" << t;
    prev_mean_err = err;
  }
  EXPECT_LT((s.mean - stat.mean).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LT(max_abs(s.covariance - stat.covariance), 1e-10);
}

TEST(LagCovariance, ZeroLagIsIdentityMap) {
  const OpenChainModel model = example2();
  const Matrix sigma = stationary_variance(model);
  EXPECT_EQ(lag_covariance(sigma, model.jump(), 0), sigma);
}

TEST(LagCovariance, OneVertexDecaysGeometrically) {
  const OpenChainModel model = one_vertex(0.3, 0.5);
  for (std::size_t s = 0; s <= 10; ++s) {
    EXPECT_NEAR(lag_covariance(stationary_variance(model), model.jump(), s)(0, 0),
                0.48 * std::pow(0.5, static_cast<double>(s)), 1e-12);
  }
}

// Spectral projectors of the symmetric three-state Q: eigenvalue 2q on the
// all-ones direction, -q on its complement.
Matrix three_state_power(double q, std::size_t s) {
  const Matrix ones = Matrix::Constant(3, 3, 1.0 / 3.0);
  const double k = static_cast<double>(s);
  return std::pow(2 * q, k) * ones + std::pow(-q, k) * (Matrix::Identity(3, 3) - ones);
}

TEST(LagCovariance, ThreeStateMatchesSpectralOracleAndDecays) {
  const OpenChainModel model = three_state(0.4, 0.45);
  const Matrix sigma = stationary_variance(model);
  const double norm0 = sigma.cwiseAbs().rowwise().sum().maxCoeff();
  for (std::size_t s = 0; s <= 20; ++s) {
    const Matrix c = lag_covariance(sigma, model.jump(), s);
    EXPECT_LT(max_abs(c - sigma * three_state_power(0.45, s)), 1e-12) << "s=" << s;
    // |Sigma Q^s|_inf <= |Sigma|_inf |Q^s|_inf with |Q^s|_inf <= rho^s for this symmetric Q.
    EXPECT_LE(c.cwiseAbs().rowwise().sum().maxCoeff(), norm0 * std::pow(0.9, static_cast<double>(s)) + 1e-12);
  }
}

TEST(SpatialCorrelation, UnitDiagonal) {
  for (const OpenChainModel& model : {example2(), three_state(0.1, 0.3)}) {
    const Matrix k = spatial_correlation(stationary_variance(model));
    for (Eigen::Index i = 0; i < k.rows(); ++i) EXPECT_EQ(k(i, i), 1.0);
    EXPECT_LE(k.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(SpatialCorrelation, ZeroVarianceStateIsReported) {
  Matrix s = Matrix::Identity(2, 2);
  s(1, 1) = 0.0;
  try {
    spatial_correlation(s);
    FAIL() << "expected ZeroVarianceState";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVarianceState);
  }
}

TEST(SpatialCorrelation, NoRetentionLimit) {
  const JumpMatrix zero = JumpMatrix::validate(Matrix::Zero(3, 3), StructureCheck::kSpectralOnly);
  for (double p : {0.0, 0.4, 1.0}) {
    const ProtocolMoments m = moments(three_state_example(p));
    const Matrix k = spatial_correlation(stationary_variance(m, zero));
    EXPECT_NEAR(k(0, 1), 2 * p - 1, 1e-14);
    EXPECT_NEAR(k(0, 2), 0.0, 1e-14);
    const auto [k12, k13] = three_state_kappa(p, 1e-9);
    EXPECT_NEAR(k12, 2 * p - 1, 1e-8);
    EXPECT_NEAR(k13, 0.0, 1e-8);
  }
}

TEST(SpatialCorrelation, MatchesClosedFormKappa) {
  for (auto [p, q] : {std::pair{0.4, 0.25}, std::pair{0.4, 0.45}}) {
    const Matrix k = spatial_correlation(stationary_variance(three_state(p, q)));
    const auto [k12, k13] = three_state_kappa(p, q);
    EXPECT_NEAR(k(0, 1), k12, 1e-9);
    EXPECT_NEAR(k(0, 2), k13, 1e-9);
    EXPECT_NEAR(k(1, 2), k13, 1e-9);
  }
}

TEST(SpatialCorrelation, ClosedFormAgreesAcrossTheFamily) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  std::uniform_real_distribution<double> uq(0.01, 0.49);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = up(rng);
    const double q = uq(rng);
    const Matrix k = spatial_correlation(stationary_variance(three_state(p, q)));
    const auto [k12, k13] = three_state_kappa(p, q);
    EXPECT_NEAR(k(0, 1), k12, 1e-9);
    EXPECT_NEAR(k(0, 2), k13, 1e-9);
    EXPECT_NEAR(k(1, 2), k(0, 2), 1e-12);
  }
}

TEST(ThreeStateKappa, RejectsOutOfRange) {
  EXPECT_THROW(three_state_kappa(1.2, 0.3), Error);
  EXPECT_THROW(three_state_kappa(0.5, 0.5), Error);
  EXPECT_THROW(three_state_kappa(0.5, 0.0), Error);
}

TEST(TimeCorrelation, ZeroLagIsSpatial) {
  const OpenChainModel model = three_state(0.4, 0.45);
  const Matrix sigma = stationary_variance(model);
  EXPECT_EQ(time_correlation(sigma, model.jump(), 0), spatial_correlation(sigma));
}

TEST(TimeCorrelation, OneVertexIsQToTheS) {
  const OpenChainModel model = one_vertex(0.3, 0.5);
  const Matrix sigma = stationary_variance(model);
  for (std::size_t s = 0; s <= 12; ++s) {
    EXPECT_NEAR(time_correlation(sigma, model.jump(), s)(0, 0), std::pow(0.5, static_cast<double>(s)), 1e-14);
  }
}

// The -q eigenmode makes the autocorrelation alternate at small s:
// C11(1) = q (Sigma12 + Sigma13) / Sigma11 < 0, since Q has no self-loops.
TEST(TimeCorrelation, ThreeStateCurves) {
  const double q = 0.45;
  const OpenChainModel model = three_state(0.4, q);
  const Matrix sigma = stationary_variance(model);
  EXPECT_EQ(time_correlation(sigma, model.jump(), 0)(0, 0), 1.0);
  EXPECT_NEAR(time_correlation(sigma, model.jump(), 1)(0, 0), q * (sigma(0, 1) + sigma(0, 2)) / sigma(0, 0), 1e-14);
  EXPECT_LT(time_correlation(sigma, model.jump(), 1)(0, 0), 0.0);
  for (std::size_t s = 0; s <= 30; ++s) {
    const Matrix c = time_correlation(sigma, model.jump(), s);
    const Matrix oracle = sigma * three_state_power(q, s);
    EXPECT_NEAR(c(0, 0), oracle(0, 0) / sigma(0, 0), 1e-12);
    EXPECT_NEAR(c(0, 1), oracle(0, 1) / sigma(0, 0), 1e-12);
    EXPECT_LE(std::abs(c(0, 0)), 2.0 * std::pow(0.9, static_cast<double>(s)));
  }
  EXPECT_LT(std::abs(time_correlation(sigma, model.jump(), 200)(0, 0)), 1e-8);
}

TEST(Outgoing, NoEscapeMeansNoOutflow) {
  const OpenChainModel model = example2();
  const OutgoingMoments out = outgoing_moments(stationary_cumulants(model), model.escape());
  EXPECT_EQ(out.mean_per_state(2), 0.0);
  EXPECT_EQ(out.covariance.row(2).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(out.covariance.col(2).cwiseAbs().sum(), 0.0);
}

TEST(Outgoing, OneVertexStationary) {
  const OpenChainModel model = one_vertex(0.3, 0.5);
  const OutgoingMoments out = outgoing_moments(stationary_cumulants(model), model.escape());
  EXPECT_NEAR(out.mean_per_state(0), 0.3, 1e-12);
  EXPECT_NEAR(out.covariance(0, 0), 0.27, 1e-12);
  EXPECT_NEAR(out.covariance(0, 0), 0.3 - 0.09 * 0.25 / 0.75, 1e-12);
  EXPECT_NEAR(out.mean_total, 0.3, 1e-12);
  EXPECT_NEAR(out.var_total, 0.27, 1e-12);
}

TEST(Outgoing, ConservationAndTotals) {
  std::mt19937_64 rng(31);
  std::vector<OpenChainModel> models{example2(), three_state(0.4, 0.45)};
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 5;
    models.emplace_back(JumpMatrix::validate(random_jump(rng, n)), random_bernoulli(rng, n));
  }
  for (const OpenChainModel& model : models) {
    const OutgoingMoments out = outgoing_moments(stationary_cumulants(model), model.escape());
    EXPECT_NEAR(out.mean_total, moments(model.protocol()).mean.sum(), 1e-10);
    EXPECT_NEAR(out.mean_total, out.mean_per_state.sum(), 1e-12);
    EXPECT_NEAR(out.var_total, out.covariance.sum(), 1e-10);
  }
}

// Monte Carlo over 5e5 steps of the three-state chain at (0.4, 0.45).
class ThreeStateMonteCarlo : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const OpenChainModel model = three_state(0.4, 0.45);
    const SimulationRecord rec = run(model, 500000, StateVector::Constant(3, 5), 20260101);
    summary_ = new SeriesSummary(summarize(rec, {1, 2, 5}));
  }
  static void TearDownTestSuite() {
    delete summary_;
    summary_ = nullptr;
  }
  static SeriesSummary* summary_;
};

SeriesSummary* ThreeStateMonteCarlo::summary_ = nullptr;

TEST_F(ThreeStateMonteCarlo, MeanCovarianceAndLagsWithinThreeSe) {
  const OpenChainModel model = three_state(0.4, 0.45);
  const CumulantState stat = stationary_cumulants(model);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_LE(std::abs(summary_->sample_mean(i) - stat.mean(i)), 3 * summary_->mean_se(i)) << "mean " << i;
  }
  for (std::size_t s : {0, 1, 2, 5}) {
    const Matrix analytic = lag_covariance(stat.covariance, model.jump(), s);
    const Matrix& emp = summary_->lag_covariances.at(s);
    const Matrix& se = summary_->lag_covariance_se.at(s);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_LE(std::abs(emp(i, j) - analytic(i, j)), 3 * se(i, j)) << "lag " << s << " (" << i << "," << j << ")";
      }
    }
  }
}

TEST_F(ThreeStateMonteCarlo, RejectsIndependentBinomialRedistribution) {
  StationaryVarianceOptions opts;
  opts.form = LambdaForm::kIndependentBinomial;
  const Matrix wrong = stationary_variance(three_state(0.4, 0.45), opts);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      worst = std::max(worst, std::abs(summary_->sample_covariance(i, j) - wrong(i, j)) / summary_->covariance_se(i, j));
    }
  }
  EXPECT_GT(worst, 6.0);
}
