#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rkhs_logit/firthglm.hpp"

using namespace rkhs_logit;

namespace {

DesignMatrix design_1d(const std::vector<double>& x, const std::vector<double>& y) {
  MatrixXd cov(static_cast<Index>(x.size()), 1);
  VectorXd lab(static_cast<Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    cov(static_cast<Index>(i), 0) = x[i];
    lab[static_cast<Index>(i)] = y[i];
  }
  return DesignMatrix::from_covariates(cov, lab);
}

// Random design with n rows and p covariates whose labels are a strict
// halfspace of the covariates, with both classes present.
DesignMatrix separated_design(std::mt19937_64& rng, int n, int p) {
  std::normal_distribution<double> z;
  for (;;) {
    MatrixXd cov(n, p);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) cov(i, j) = z(rng);
    }
    VectorXd alpha(p);
    for (Index j = 0; j < p; ++j) alpha[j] = z(rng);
    const double c = 0.3 * z(rng);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) y[i] = cov.row(i).dot(alpha) + c > 0.0 ? 1.0 : 0.0;
    if (y.sum() >= 1 && y.sum() <= n - 1) return DesignMatrix::from_covariates(cov, y);
  }
}

DesignMatrix random_design(std::mt19937_64& rng, int n, int p, const VectorXd& truth) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd cov(n, p);
  VectorXd y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) cov(i, j) = z(rng);
    double eta = truth[0];
    for (Index j = 0; j < p; ++j) eta += truth[j + 1] * cov(i, j);
    y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  return DesignMatrix::from_covariates(cov, y);
}

}  // namespace

TEST(DesignMatrixTest, Validation) {
  MatrixXd x(2, 2);
  x << 1, 0.5, 2, 0.1;
  EXPECT_THROW(DesignMatrix(x, VectorXd::Zero(2)), ValidationError);
  x(1, 0) = 1.0;
  EXPECT_NO_THROW(DesignMatrix(x, VectorXd::Zero(2)));
  EXPECT_THROW(DesignMatrix(x, VectorXd::Constant(2, 2.0)), ValidationError);
  EXPECT_THROW(DesignMatrix(x, VectorXd::Zero(3)), ValidationError);
  x(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(DesignMatrix(x, VectorXd::Zero(2)), ValidationError);
}

TEST(LogLikelihood, ZeroCoefficients) {
  const DesignMatrix d = design_1d({-1, 0.5, 2, 3, 4}, {0, 1, 1, 0, 1});
  EXPECT_NEAR(log_likelihood(d, VectorXd::Zero(2)), 5.0 * std::log(0.5), 1e-14);
}

TEST(LogLikelihood, SaturatesNearZero) {
  const DesignMatrix d = design_1d({-2, -1, 1, 2}, {0, 0, 1, 1});
  VectorXd b(2);
  b << 0.0, 40.0;
  const double ll = log_likelihood(d, b);
  EXPECT_LE(ll, 0.0);
  EXPECT_GT(ll, -1e-10);
}

TEST(LogLikelihood, ScalarOracleAndWeighting) {
  const DesignMatrix d = design_1d({-1, 0, 1}, {0, 0, 1});
  VectorXd b(2);
  b << 0.0, 1.0;
  const double sig = [](double e) { return 1.0 / (1.0 + std::exp(-e)); }(1.0);
  const double expected = std::log(1.0 - 1.0 / (1.0 + std::exp(1.0))) + std::log(0.5) + std::log(sig);
  EXPECT_NEAR(log_likelihood(d, b), expected, 1e-14);
  EXPECT_NEAR(log_likelihood(d, b), oracle::naive_loglik(d.x, d.y, b), 1e-14);
  const double class0 = std::log(1.0 - 1.0 / (1.0 + std::exp(1.0))) + std::log(0.5);
  EXPECT_NEAR(log_likelihood(d, b, LikelihoodWeighting::ClassAveraged), class0 / 2.0 + std::log(sig), 1e-14);
}

TEST(HatDiagonals, SquareDesignIsIdentityProjection) {
  MatrixXd cov(3, 2);
  cov << 0.1, 2.0, -1.0, 0.5, 0.7, -0.3;
  VectorXd y(3);
  y << 1, 0, 1;
  const DesignMatrix d = DesignMatrix::from_covariates(cov, y);
  VectorXd b(3);
  b << 0.2, -0.4, 0.1;
  const VectorXd h = hat_diagonals(d, b);
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(h[i], 1.0, 1e-10);
}

TEST(HatDiagonals, InterceptOnlyBalanced) {
  MatrixXd x = MatrixXd::Ones(6, 1);
  VectorXd y(6);
  y << 0, 1, 0, 1, 0, 1;
  const VectorXd h = hat_diagonals(DesignMatrix(x, y), VectorXd::Zero(1));
  for (Index i = 0; i < 6; ++i) EXPECT_NEAR(h[i], 1.0 / 6.0, 1e-14);
}

TEST(HatDiagonals, TraceEqualsRankAndMatchesFullHat) {
  std::mt19937_64 rng(3);
  for (int r = 0; r < 20; ++r) {
    VectorXd truth(4);
    truth << 0.3, 1.0, -0.5, 0.2;
    const DesignMatrix d = random_design(rng, 30, 3, truth);
    const VectorXd h = hat_diagonals(d, truth * 0.5);
    EXPECT_NEAR(h.sum(), 4.0, 1e-8);
    EXPECT_GE(h.minCoeff(), 0.0);
    EXPECT_LE(h.maxCoeff(), 1.0 + 1e-12);
    EXPECT_TRUE(h.isApprox(oracle::naive_hat(d.x, truth * 0.5), 1e-9));
  }
}

TEST(FitFirth, SymmetricDataGivesZeroIntercept) {
  const DesignMatrix d = design_1d({-2, -1, -0.5, 0.5, 1, 2, -1.5, 1.5}, {0, 1, 0, 1, 0, 1, 1, 0});
  const GlmFit f = fit_firth(d);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.coefficients[0], 0.0, 1e-8);
}

TEST(FitFirth, CompletelySeparatedIsFiniteInteriorMaximum) {
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    const double v = -1.9 + 0.2 * i;
    x.push_back(v);
    y.push_back(v > 0 ? 1.0 : 0.0);
  }
  const DesignMatrix d = design_1d(x, y);
  const GlmFit f = fit_firth(d);
  ASSERT_TRUE(f.converged);
  ASSERT_TRUE(f.coefficients.allFinite());
  // Grid scan of the penalized likelihood around the estimate.
  const double best = oracle::naive_penalized(d.x, d.y, f.coefficients);
  EXPECT_NEAR(best, f.penalized_loglik, 1e-8);
  for (double db0 = -1.0; db0 <= 1.0; db0 += 0.05) {
    for (double db1 = -3.0; db1 <= 3.0; db1 += 0.1) {
      VectorXd b = f.coefficients;
      b[0] += db0;
      b[1] += db1;
      EXPECT_LE(oracle::naive_penalized(d.x, d.y, b), best + 1e-10);
    }
  }
  EXPECT_EQ(fit_mle(d).separation, Separation::Complete);
}

TEST(FitFirth, ConsistentOnLargeSample) {
  std::mt19937_64 rng(2024);
  VectorXd truth(2);
  truth << 0.5, -1.0;
  const DesignMatrix d = random_design(rng, 5000, 1, truth);
  const GlmFit f = fit_firth(d);
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.coefficients[0], 0.5, 0.1);
  EXPECT_NEAR(f.coefficients[1], -1.0, 0.1);
}

TEST(FitFirth, ModifiedScoreFixedPoint) {
  std::mt19937_64 rng(5);
  VectorXd truth(3);
  truth << -0.2, 1.5, 0.7;
  for (int r = 0; r < 25; ++r) {
    const DesignMatrix d = random_design(rng, 40, 2, truth);
    const GlmFit f = fit_firth(d);
    ASSERT_TRUE(f.converged);
    EXPECT_LE(oracle::modified_score(d.x, d.y, f.coefficients).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(FitFirth, FiniteOnRandomSeparatedDatasets) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> pdist(1, 5);
  for (int r = 0; r < 200; ++r) {
    const int p = pdist(rng);
    std::uniform_int_distribution<int> ndist(p + 2, 50);
    const DesignMatrix d = separated_design(rng, ndist(rng), p);
    const GlmFit f = fit_firth(d);
    EXPECT_TRUE(f.converged) << "instance " << r << " n=" << d.n() << " p=" << p << " score=" << f.score_norm << " it=" << f.iterations << " beta=" << f.coefficients.transpose();
    EXPECT_LT(f.coefficients.norm(), 1e3) << "instance " << r;
  }
}

TEST(FitFirth, AgreesWithDataSplittingOracle) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> pdist(1, 4);
  for (int r = 0; r < 50; ++r) {
    const int p = pdist(rng);
    VectorXd truth = VectorXd::Zero(p + 1);
    std::normal_distribution<double> z;
    for (Index j = 0; j <= p; ++j) truth[j] = z(rng);
    const DesignMatrix d = r % 5 == 0 ? separated_design(rng, 25, p) : random_design(rng, 40, p, truth);
    const GlmFit f = fit_firth(d);
    const VectorXd ref = oracle::firth_by_splitting(d.x, d.y);
    EXPECT_LE((f.coefficients - ref).lpNorm<Eigen::Infinity>(), 1e-6) << "instance " << r;
  }
}

TEST(FitFirth, WarmStartAndBadStart) {
  const DesignMatrix d = design_1d({-1, 0.5, 2, 3, -4}, {0, 1, 1, 0, 0});
  GlmOptions opt;
  opt.start = VectorXd::Zero(3);
  EXPECT_THROW(fit_firth(d, opt), ValidationError);
  const GlmFit cold = fit_firth(d);
  opt.start = cold.coefficients;
  const GlmFit warm = fit_firth(d, opt);
  EXPECT_EQ(warm.iterations, 0);
  EXPECT_TRUE(warm.coefficients.isApprox(cold.coefficients));
}

TEST(FitMle, AgreesWithFirthOnOverlappingData) {
  std::mt19937_64 rng(31);
  VectorXd truth(2);
  truth << 0.5, -1.0;
  const DesignMatrix d = random_design(rng, 5000, 1, truth);
  const GlmFit mle = fit_mle(d);
  const GlmFit firth = fit_firth(d);
  ASSERT_TRUE(mle.converged);
  EXPECT_EQ(mle.separation, Separation::None);
  EXPECT_LE((mle.coefficients - firth.coefficients).lpNorm<Eigen::Infinity>(), 0.01);
  EXPECT_GE(mle.loglik, log_likelihood(d, VectorXd::Zero(2)));
}

TEST(FitMle, SeparatedDataFlagged) {
  const DesignMatrix d = design_1d({-2, -1, 1, 2}, {0, 0, 1, 1});
  const GlmFit f = fit_mle(d);
  EXPECT_FALSE(f.converged);
  EXPECT_EQ(f.separation, Separation::Complete);
  EXPECT_GE(f.loglik, log_likelihood(d, VectorXd::Zero(2)));
}

TEST(FitMle, UniqueMaximizerOnNonSeparatedData) {
  std::mt19937_64 rng(41);
  VectorXd truth(3);
  truth << 0.1, 0.8, -0.6;
  const DesignMatrix d = random_design(rng, 200, 2, truth);
  const GlmFit f = fit_mle(d);
  ASSERT_TRUE(f.converged);
  std::normal_distribution<double> z;
  for (int r = 0; r < 100; ++r) {
    VectorXd dir(3);
    for (Index j = 0; j < 3; ++j) dir[j] = z(rng);
    dir.normalize();
    EXPECT_GE(f.loglik, log_likelihood(d, f.coefficients + 1e-3 * dir));
  }
}

TEST(DetectSeparation, Examples) {
  EXPECT_EQ(detect_separation(design_1d({-2, -1, 1, 2}, {0, 0, 1, 1})), Separation::Complete);
  EXPECT_EQ(detect_separation(design_1d({-1, 0, 0, 1}, {0, 0, 1, 1})), Separation::Quasi);
  EXPECT_EQ(detect_separation(design_1d({-1, 1, -1, 1}, {0, 0, 1, 1})), Separation::None);
  EXPECT_EQ(oracle::brute_force_separation(design_1d({-1, 0, 0, 1}, {0, 0, 1, 1}).x,
                                           design_1d({-1, 0, 0, 1}, {0, 0, 1, 1}).y),
            oracle::Sep::Quasi);
}

TEST(DetectSeparation, MatchesBruteForceOnSmallInstances) {
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<int> ndist(2, 10), pdist(1, 2), val(-2, 2), coin(0, 1);
  int counts[3] = {0, 0, 0};
  for (int r = 0; r < 300; ++r) {
    const int n = ndist(rng), p = pdist(rng);
    MatrixXd cov(n, p);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) cov(i, j) = val(rng);
      y[i] = coin(rng);
    }
    const DesignMatrix d = DesignMatrix::from_covariates(cov, y);
    const auto expected = oracle::brute_force_separation(d.x, d.y);
    const Separation got = detect_separation(d);
    EXPECT_EQ(static_cast<int>(got), static_cast<int>(expected)) << "instance " << r;
    ++counts[static_cast<int>(expected)];
  }
  // The sampler must exercise all three outcomes.
  EXPECT_GT(counts[0], 0);
  EXPECT_GT(counts[1], 0);
  EXPECT_GT(counts[2], 0);
}

TEST(DetectSeparation, LargeInstancesMatchConstruction) {
  std::mt19937_64 rng(31);
  // Halfspace labels on 300 rows in 120 dimensions are completely separated.
  EXPECT_EQ(detect_separation(separated_design(rng, 300, 120)), Separation::Complete);
  // n <= p + 1 with generic rows is always separable.
  MatrixXd cov(40, 45);
  std::normal_distribution<double> z;
  for (Index i = 0; i < cov.rows(); ++i) {
    for (Index j = 0; j < cov.cols(); ++j) cov(i, j) = z(rng);
  }
  VectorXd y(40);
  for (Index i = 0; i < 40; ++i) y[i] = i % 2;
  EXPECT_EQ(detect_separation(DesignMatrix::from_covariates(cov, y)), Separation::Complete);
  // Overlapping logistic labels in few dimensions are not.
  VectorXd truth(4);
  truth << 0.2, 1.0, -0.5, 0.3;
  EXPECT_EQ(detect_separation(random_design(rng, 300, 3, truth)), Separation::None);
}

TEST(Simplex, ReoptimizeAtOriginalRhs) {
  // max x + y  s.t.  x + 2y <= 4,  3x + y <= 6.  Optimum (1.6, 1.2), value 2.8.
  MatrixXd a(2, 2);
  a << 1, 2, 3, 1;
  VectorXd b(2), c(2);
  b << 4, 6;
  c << 1, 1;
  const LpResult r = maximize_slack_feasible(a, b, c);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.objective, 2.8, 1e-12);
  VectorXd b2(2);
  b2 << 4.1, 6.1;  // same basis stays optimal
  EXPECT_NEAR(*reoptimize_rhs(r, b2, c), 1.62 + 1.24, 1e-12);
  VectorXd b3(2);
  b3 << 20, 6;  // basis turns infeasible
  EXPECT_FALSE(reoptimize_rhs(r, b3, c).has_value());
}
