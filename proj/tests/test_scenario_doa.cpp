#include <gtest/gtest.h>

#include <cmath>

#include "mmb/scenario_doa.hpp"

using namespace mmb;
using namespace mmb::doa;

TEST(Steering, SingleSensor) {
  for (double phi : {0.0, 33.0, 90.0, 179.0}) EXPECT_EQ(steering(phi, 1), std::vector<double>{1.0});
}

TEST(Steering, UnitNorm) {
  for (int m : {2, 8, 31})
    for (double phi = 0; phi < 180; phi += 7.3) EXPECT_NEAR(correlation(steering(phi, m), steering(phi, m)), 1.0, 1e-12);
}

TEST(Steering, CorrelationInUnitInterval) {
  const auto ref = steering(55, 8);
  for (int i = 0; i < 100; ++i) {
    const double rho = correlation(ref, steering(i * 1.79, 8));
    EXPECT_LE(std::abs(rho), 1.0 + 1e-12);
  }
}

TEST(DoaClosedForms, MatchedAngles) {
  DoaConfig c;
  const auto cf = doa_closed_forms(c);
  EXPECT_EQ(cf.rho, 1.0);
  EXPECT_EQ(cf.inflation, 1.0);
  EXPECT_DOUBLE_EQ(cf.mse_q, 1.0 / 11);
  EXPECT_DOUBLE_EQ(cf.mse_p, 1.0 / 11);
  EXPECT_EQ(cf.chi2, 0.0);
  EXPECT_DOUBLE_EQ(cf.upper, 1.0 / 11);
}

TEST(DoaClosedForms, PublishedFormAtRhoPointNine) {
  const auto cf = closed_forms_from_rho(0.9, 10.0, InflationForm::conservative);
  EXPECT_NEAR(cf.inflation, 1.2 + 1.0 / 11, 1e-14);
  EXPECT_NEAR(cf.inflation, 1.29091, 1e-5);
  EXPECT_NEAR(cf.mse_p, 0.11735, 1e-5);
  EXPECT_NEAR(cf.chi2, 0.0452, 1e-4);
  EXPECT_NEAR(cf.upper, 0.1182, 1e-4);
  const double gamma2 = 1.0 / cf.inflation;
  EXPECT_NEAR(cf.chi2, gamma2 / std::sqrt(2 * gamma2 - 1) - 1, 1e-14);
}

TEST(DoaClosedForms, ExactFormAtRhoPointNine) {
  const auto cf = closed_forms_from_rho(0.9, 10.0, InflationForm::exact);
  EXPECT_NEAR(cf.inflation, 1.0 + 2 * 0.1 * 10 / 11 + 1.0 / 11, 1e-14);
  EXPECT_NEAR(cf.mse_p, 0.115702, 1e-6);
  EXPECT_NEAR(cf.chi2, 0.039402, 1e-6);
  EXPECT_NEAR(cf.upper, 0.116429, 1e-6);
}

TEST(DoaClosedForms, ConservativeExceedsExactByKnownGap) {
  for (double rho : {0.99, 0.9, 0.5, 0.0, -0.7}) {
    const double gap = inflation_factor(rho, 10, InflationForm::conservative) - inflation_factor(rho, 10, InflationForm::exact);
    EXPECT_NEAR(gap, 2 * (1 - rho) / 11, 1e-13);
  }
}

TEST(DoaClosedForms, InfiniteWhenGammaTooSmall) {
  const auto cf = closed_forms_from_rho(0.3, 10.0, InflationForm::exact);
  EXPECT_LE(cf.gamma2, 0.5);
  EXPECT_TRUE(std::isinf(cf.chi2));
  EXPECT_TRUE(std::isinf(cf.upper));
}

TEST(DoaClosedForms, OrderingAndInflationAtLeastOne) {
  for (double phi = 30; phi <= 80; phi += 0.5) {
    DoaConfig c;
    c.phi_assumed_deg = phi;
    for (auto form : {InflationForm::exact, InflationForm::conservative}) {
      c.inflation = form;
      const auto cf = doa_closed_forms(c);
      EXPECT_GE(cf.inflation, 1.0);
      EXPECT_LE(cf.mse_q, cf.mse_p);
      if (std::isfinite(cf.chi2)) {
        EXPECT_LE(cf.mse_p, cf.upper);
      }
    }
  }
}

TEST(DoaClosedForms, UpperTightensTowardsMatch) {
  double prev = 1e300;
  for (double d : {2.0, 1.0, 0.5, 0.25, 0.1, 0.01}) {
    DoaConfig c;
    c.phi_assumed_deg = 55 + d;
    const auto cf = doa_closed_forms(c);
    const double gap = cf.upper - cf.mse_p;
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(DoaConfig, Validation) {
  DoaConfig c;
  c.m_sensors = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = DoaConfig{};
  c.phi_assumed_deg = 180;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = DoaConfig{};
  c.snr = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SimulateDoa, MatchedCiContainsMmse) {
  DoaConfig c;
  const auto sim = simulate_doa(c, 100000, 1, 4);
  EXPECT_NEAR(sim.summary.mean, 1.0 / 11, sim.summary.ci99_half_width);
}

TEST(SimulateDoa, MismatchedCiContainsExactClosedForm) {
  DoaConfig c;
  c.phi_assumed_deg = 58.3;
  const auto cf = doa_closed_forms(c);
  const auto sim = simulate_doa(c, 100000, 2, 4);
  EXPECT_NEAR(sim.summary.mean, cf.mse_p, sim.summary.ci99_half_width);
  EXPECT_GE(sim.summary.mean, cf.mse_q);
}

TEST(SimulateDoa, HighSnrLimit) {
  DoaConfig c;
  c.snr = 1e4;
  const auto sim = simulate_doa(c, 100000, 3, 4);
  EXPECT_NEAR(sim.summary.mean, 1.0 / (1 + 1e4), sim.summary.ci99_half_width);
}

TEST(SimulateDoa, InsufficientTrials) {
  EXPECT_THROW(simulate_doa(DoaConfig{}, 50, 1), std::invalid_argument);
}
