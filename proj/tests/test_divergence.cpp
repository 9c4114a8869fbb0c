#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mmb/divergence.hpp"
#include "mmb/rng.hpp"

using namespace mmb;

namespace {

// Direct evaluation of the textbook formula, used as an independent oracle.
double chi2_gauss_direct(double mp, double vp, double mq, double vq) {
  return vq / (std::sqrt(vp) * std::sqrt(2 * vq - vp)) * std::exp((mp - mq) * (mp - mq) / (2 * vq - vp)) - 1.0;
}

}  // namespace

TEST(Chi2ScalarGaussian, IdenticalIsZero) {
  EXPECT_EQ(chi2_scalar_gaussian(ScalarGaussian(0.3, 2.0), ScalarGaussian(0.3, 2.0)).value, 0.0);
}

TEST(Chi2ScalarGaussian, ZeroMeanGammaForm) {
  for (double gamma : {0.8, 1.0, 1.3, 2.0}) {
    const double vq = 1.0, vp = vq / (gamma * gamma);
    const double expect = gamma * gamma / std::sqrt(2 * gamma * gamma - 1) - 1;
    EXPECT_NEAR(chi2_scalar_gaussian(ScalarGaussian(0, vp), ScalarGaussian(0, vq)).value, expect, 1e-14);
  }
}

TEST(Chi2ScalarGaussian, MeanShift) {
  const auto e = chi2_scalar_gaussian(ScalarGaussian(0, 1), ScalarGaussian(0.5, 1));
  EXPECT_NEAR(e.value, std::expm1(0.25), 1e-15);
  EXPECT_NEAR(e.value, 0.2840, 1e-4);
  EXPECT_EQ(e.method, DivergenceMethod::closed_form);
}

TEST(Chi2ScalarGaussian, MatchesDirectFormula) {
  EXPECT_NEAR(chi2_scalar_gaussian(ScalarGaussian(0.4, 1.5), ScalarGaussian(-0.2, 0.9)).value,
              chi2_gauss_direct(0.4, 1.5, -0.2, 0.9), 1e-13);
}

TEST(Chi2ScalarGaussian, InfiniteWhenPVarianceTooLarge) {
  EXPECT_TRUE(std::isinf(chi2_scalar_gaussian(ScalarGaussian(0, 2.0), ScalarGaussian(0, 1.0)).value));
  EXPECT_TRUE(std::isinf(chi2_scalar_gaussian(ScalarGaussian(0, 3.0), ScalarGaussian(0, 1.0)).value));
}

TEST(Chi2ScalarGaussian, SmallMismatchKeepsRelativePrecision) {
  // chi2 ~ (1 - r)^2 / 2 for tiny variance mismatch
  const double eps = 1e-6;
  const double v = chi2_scalar_gaussian(ScalarGaussian(0, 1 + eps), ScalarGaussian(0, 1)).value;
  EXPECT_NEAR(v / (0.5 * eps * eps), 1.0, 1e-5);
}

TEST(Chi2IsoGaussian, Examples) {
  std::vector<double> a = {1, 2, 3}, b = {1, 2, 3};
  EXPECT_EQ(chi2_iso_gaussian_equal_cov(a, b, 0.5).value, 0.0);
  std::vector<double> c = {1, 2, 3 + std::sqrt(0.5)};
  EXPECT_NEAR(chi2_iso_gaussian_equal_cov(c, a, 0.5).value, std::exp(1.0) - 1.0, 1e-13);
  EXPECT_NEAR(chi2_iso_gaussian_equal_cov(c, a, 0.5).value, 1.71828, 1e-5);
  EXPECT_THROW(chi2_iso_gaussian_equal_cov(std::vector<double>{1}, a, 1.0), std::invalid_argument);
}

TEST(Chi2IsoGaussian, PerCoordinateDecomposition) {
  auto eng = make_engine(5, "test/iso");
  std::normal_distribution<double> nd(0, 0.4);
  std::vector<double> p(5), q(5);
  for (int i = 0; i < 5; ++i) {
    p[i] = nd(eng);
    q[i] = nd(eng);
  }
  const double var = 0.7;
  double prod = 1.0;
  for (int i = 0; i < 5; ++i)
    prod *= 1.0 + chi2_scalar_gaussian(ScalarGaussian(p[i], var), ScalarGaussian(q[i], var)).value;
  EXPECT_NEAR(chi2_iso_gaussian_equal_cov(p, q, var).value, prod - 1.0, 1e-12 * prod);
}

TEST(Partition, TwoCellHandComputation) {
  // Q samples split 2/2 at 0.5; P has 3 samples below and 1 above.
  std::vector<double> q = {0.0, 0.2, 0.8, 1.0};
  std::vector<double> p = {-1.0, 0.1, 0.3, 2.0};
  const auto e = chi2_partition_estimate(p, q, 2);
  EXPECT_NEAR(e.value, (0.75 * 0.75) / 0.5 + (0.25 * 0.25) / 0.5 - 1.0, 1e-15);
  EXPECT_EQ(*e.diagnostics.cell_count, 2u);
  EXPECT_EQ(e.diagnostics.sample_sizes->first, 4u);
  EXPECT_FALSE(e.diagnostics.quad_abs_err.has_value());
}

TEST(Partition, BoundariesAtGapMidpoints) {
  std::vector<double> q = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto b = equal_mass_boundaries(q, 5);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_DOUBLE_EQ(b[0], 1.5);
  EXPECT_DOUBLE_EQ(b[3], 7.5);
}

TEST(Partition, TiesNeverSplitAcrossCells) {
  std::vector<double> q = {0, 0, 0, 0, 1, 1, 2, 3};
  auto b = equal_mass_boundaries(q, 3);
  for (double x : b) EXPECT_TRUE(x != 0.0 && x != 1.0);
}

TEST(Partition, DegeneratePartitionThrows) {
  std::vector<double> q(100, 1.0);
  q[0] = 0.0;
  EXPECT_THROW(chi2_partition_estimate(q, q, 10), std::invalid_argument);
  try {
    chi2_partition_estimate(q, q, 10);
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "degenerate partition");
  }
}

TEST(Partition, InvalidInputs) {
  std::vector<double> empty, one = {1.0, 2.0};
  EXPECT_THROW(chi2_partition_estimate(empty, one), std::invalid_argument);
  EXPECT_THROW(chi2_partition_estimate(one, one, 1), std::invalid_argument);
}

TEST(Partition, DefaultCellCount) {
  EXPECT_EQ(default_cell_count(100), 10u);
  EXPECT_EQ(default_cell_count(8000), 20u);
  EXPECT_EQ(default_cell_count(100000), 46u);
}

TEST(Partition, SameDistributionNearZero) {
  const auto p = sample(ScalarGaussian(0, 1), 100000, 21);
  const auto q = sample(ScalarGaussian(0, 1), 100000, 22);
  const double v = chi2_partition_estimate(p, q).value;
  EXPECT_GE(v, 0.0);
  EXPECT_LE(v, 0.05);
}

TEST(Partition, VarianceMismatchWithinTenPercent) {
  const ScalarGaussian P(0, 1), Q(0, 1.25 * 1.25);
  const double truth = chi2_scalar_gaussian(P, Q).value;
  const double v = chi2_partition_estimate(sample(P, 100000, 31), sample(Q, 100000, 32)).value;
  EXPECT_NEAR(v, truth, 0.1 * truth);
}

TEST(Partition, ErrorShrinksWithSampleSize) {
  const ScalarGaussian P(0.5, 1), Q(0, 1);
  const double truth = chi2_scalar_gaussian(P, Q).value;
  double prev = 1e300;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    double sq = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const double e = chi2_partition_estimate(sample(P, n, 100 + s), sample(Q, n, 200 + s)).value - truth;
      sq += e * e;
    }
    const double rmse = std::sqrt(sq / 10);
    EXPECT_LT(rmse, prev);
    prev = rmse;
  }
}

TEST(Quadrature, IdenticalDensitiesGiveZero) {
  const ScalarGaussian g(0, 1);
  EXPECT_NEAR(chi2_quadrature(g, g).value, 0.0, 1e-9);
}

TEST(Quadrature, MatchesClosedFormForMeanShift) {
  const ScalarGaussian P(0, 1), Q(0.5, 1);
  const auto qv = chi2_quadrature(P, Q);
  EXPECT_NEAR(qv.value, std::expm1(0.25), 1e-6 * std::expm1(0.25));
  EXPECT_EQ(qv.method, DivergenceMethod::quadrature);
  ASSERT_TRUE(qv.diagnostics.quad_abs_err.has_value());
  EXPECT_LE(*qv.diagnostics.quad_abs_err, 1e-6);
}

TEST(Quadrature, FiniteDomainMatchesClosedForm) {
  const ScalarGaussian P(0.2, 0.8), Q(0, 1);
  const auto v = chi2_quadrature(P, Q, Interval::finite(-20, 20)).value;
  EXPECT_NEAR(v, chi2_scalar_gaussian(P, Q).value, 1e-9);
}

TEST(Quadrature, HeavierTailedPFails) {
  EXPECT_THROW(chi2_quadrature(ScalarGaussian(0, 2.5), ScalarGaussian(0, 1)), QuadratureFailed);
  try {
    chi2_quadrature(ScalarGaussian(0, 3.0), ScalarGaussian(0, 1));
  } catch (const QuadratureFailed& e) {
    EXPECT_EQ(std::string(e.what()).rfind("quadrature failed", 0), 0u);
  }
}

TEST(Quadrature, EdgeNotDecayedFails) {
  EXPECT_THROW(chi2_quadrature(ScalarGaussian(0, 1), ScalarGaussian(3, 1), Interval::finite(-1, 1)),
               QuadratureFailed);
}

TEST(Quadrature, FiftyRandomPairsMatchClosedForm) {
  auto eng = make_engine(77, "test/oracle");
  std::uniform_real_distribution<double> mu(-2, 2), lv(std::log(0.2), std::log(5));
  int done = 0;
  while (done < 50) {
    const ScalarGaussian P(mu(eng), std::exp(lv(eng))), Q(mu(eng), std::exp(lv(eng)));
    if (!(2 * Q.var() > 1.05 * P.var())) continue;
    const double cf = chi2_scalar_gaussian(P, Q).value;
    if (cf > 1e6) continue;
    EXPECT_NEAR(chi2_quadrature(P, Q).value, cf, 1e-6 * (1 + cf));
    ++done;
  }
}

TEST(Quadrature, DensityFunctionAdapter) {
  DensityFunction p{[](double x) { return ScalarGaussian(0.1, 1).density(x); }};
  const double v = chi2_quadrature(p, ScalarGaussian(0, 1), Interval::finite(-30, 30)).value;
  EXPECT_NEAR(v, std::expm1(0.01), 1e-9);
}

TEST(VariationalRatio, Examples) {
  EXPECT_EQ(variational_ratio(1.0, 1.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(variational_ratio(0.5, 0.0, 1.0), 0.25);
  EXPECT_LE(0.25, std::expm1(0.25));
  EXPECT_THROW(variational_ratio(0, 0, 0), std::invalid_argument);
}

TEST(VariationalRatio, SquareStatistic) {
  const double vp = 0.7, vq = 1.0;
  const double ratio = variational_ratio(vp, vq, 2 * vq * vq);
  EXPECT_NEAR(ratio, (vp - vq) * (vp - vq) / (2 * vq * vq), 1e-15);
  const double gamma2 = vq / vp;
  EXPECT_LE(ratio, gamma2 / std::sqrt(2 * gamma2 - 1) - 1);
}

TEST(VariationalRatio, PolynomialsNeverExceedChi2) {
  auto eng = make_engine(3, "test/variational");
  std::uniform_real_distribution<double> mu(-1, 1), lv(std::log(0.3), std::log(3)), coef(-1, 1);
  // raw Gaussian moments E[x^k], k = 0..8
  auto moments = [](double m, double v) {
    std::array<double, 9> r{};
    r[0] = 1;
    r[1] = m;
    for (int k = 2; k <= 8; ++k) r[k] = m * r[k - 1] + (k - 1) * v * r[k - 2];
    return r;
  };
  int tested = 0;
  while (tested < 200) {
    const double mp = mu(eng), vp = std::exp(lv(eng)), mq = mu(eng), vq = std::exp(lv(eng));
    if (!(2 * vq > vp)) continue;
    const double chi2 = chi2_scalar_gaussian(ScalarGaussian(mp, vp), ScalarGaussian(mq, vq)).value;
    std::array<double, 5> c{};
    for (auto& x : c) x = coef(eng);
    const auto Mp = moments(mp, vp), Mq = moments(mq, vq);
    double eg_p = 0, eg_q = 0, eg2_q = 0;
    for (int i = 0; i <= 4; ++i) {
      eg_p += c[i] * Mp[i];
      eg_q += c[i] * Mq[i];
      for (int j = 0; j <= 4; ++j) eg2_q += c[i] * c[j] * Mq[i + j];
    }
    const double var_q = eg2_q - eg_q * eg_q;
    if (!(var_q > 1e-8)) continue;
    EXPECT_LE(variational_ratio(eg_p, eg_q, var_q), chi2 + 1e-12 + 1e-9 * chi2);
    ++tested;
  }
}

TEST(DataProcessing, MappedSamplesStayBelowDataLevel) {
  // data x ~ N(mu, I_3); map to |x|^2. Partition estimate on mapped samples
  // must not exceed the data-level closed form beyond replication noise.
  const std::vector<double> mp = {0.3, 0.0, -0.2}, mq = {0.0, 0.0, 0.0};
  const double data_level = chi2_iso_gaussian_equal_cov(mp, mq, 1.0).value;
  std::vector<double> est;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto xp = sample(IsoGaussianVec(mp, 1.0), 20000, 500 + s);
    auto xq = sample(IsoGaussianVec(mq, 1.0), 20000, 900 + s);
    std::vector<double> gp, gq;
    for (const auto& x : xp) gp.push_back(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    for (const auto& x : xq) gq.push_back(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    est.push_back(chi2_partition_estimate(gp, gq).value);
  }
  double mean = 0, var = 0;
  for (double v : est) mean += v / 20;
  for (double v : est) var += (v - mean) * (v - mean) / 19;
  EXPECT_LE(mean, data_level + 3 * std::sqrt(var));
}

TEST(Integrand, CancellationFreeNearEquality) {
  EXPECT_EQ(chi2_integrand(-1.0, -1.0), 0.0);
  const double d = 1e-9;
  EXPECT_NEAR(chi2_integrand(-1.0 + d, -1.0) / (std::exp(-1.0) * d * d), 1.0, 1e-6);
  EXPECT_EQ(chi2_integrand(-kInf, -kInf), 0.0);
  EXPECT_TRUE(std::isinf(chi2_integrand(0.0, -kInf)));
  EXPECT_NEAR(chi2_integrand(-kInf, -2.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(chi2_integrand(40.0, 0.0), std::pow(std::exp(40.0) - 1.0, 2), 1e-12 * std::exp(80.0));
}
