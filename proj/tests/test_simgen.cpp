#include "densreg/numeric.hpp"
#include "densreg/simgen.hpp"

#include <gtest/gtest.h>

using namespace densreg;

TEST(Simgen, RegressionFunctionValues) {
  EXPECT_NEAR(sim_mu1(20.0, 2, 1), 50.0 / 3.0, 1e-12);
  EXPECT_NEAR(sim_mu1(20.0, 3, 1), 50.0 / 3.0, 1e-12);
  EXPECT_NEAR(sim_mu1(15.0, 1, 1), 15.0, 1e-12);
  EXPECT_NEAR(sim_mu2(20.0, 1), 18.0, 1e-12);
  EXPECT_NEAR(sim_true_mean(18.0, 1, 1, 2), 0.5, 1e-15);
}

// The first error term has mean zero, so the true mean equals the regression function.
TEST(Simgen, FirstErrorHasZeroMean) {
  for (double x : {15.5, 20.0, 28.5}) {
    for (int x2 = 1; x2 <= 3; ++x2) {
      for (int x3 = 1; x3 <= 2; ++x3) EXPECT_NEAR(sim_true_mean(x, x2, x3, 0), sim_mu1(x, x2, x3), 1e-12);
    }
  }
}

TEST(Simgen, TrueDensitiesIntegrateToOne) {
  for (int dim : {0, 1}) {
    for (int x3 = 1; x3 <= 2; ++x3) {
      const double m = sim_true_mean(22.5, 2, x3, dim);
      const int n = 20001;
      const double lo = m - 15.0, hi = m + 15.0, h = (hi - lo) / (n - 1);
      double s = 0.0;
      for (int k = 0; k < n; ++k) {
        const double w = k == 0 || k == n - 1 ? 0.5 : 1.0;
        s += w * h * sim_true_density(lo + k * h, 22.5, 2, x3, dim);
      }
      EXPECT_NEAR(s, 1.0, 1e-8);
    }
  }
  EXPECT_NEAR(sim_true_density(1.0, 24.0, 1, 1, 2) + sim_true_density(0.0, 24.0, 1, 1, 2), 1.0, 1e-15);
}

TEST(Simgen, CensoringFollowsTheHiddenValues) {
  const SimData sim = simulate({2000, 3, true});
  ASSERT_EQ(sim.data.n(), 2000);
  int censored = 0;
  for (int i = 0; i < sim.data.n(); ++i) {
    const double xt = sim.x_tilde[i];
    EXPECT_EQ(sim.data.X(i, 1), std::floor(xt));
    for (int l = 0; l < 2; ++l) {
      const double zt = sim.z_tilde[i][l];
      const double z = sim.data.Z[i].z[l];
      if (zt > xt) {
        EXPECT_EQ(z, 0.0);
        ++censored;
      } else {
        EXPECT_EQ(z, std::floor(zt));
      }
    }
    const double b = sim.data.Z[i].z[2];
    EXPECT_TRUE(b == 0.0 || b == 1.0);
  }
  EXPECT_GT(censored, 0);
}

TEST(Simgen, NoCensoringFlagKeepsEveryValue) {
  const SimData sim = simulate({500, 4, false});
  for (int i = 0; i < sim.data.n(); ++i) {
    for (int l = 0; l < 2; ++l) EXPECT_EQ(sim.data.Z[i].z[l], std::floor(sim.z_tilde[i][l]));
  }
}

TEST(Simgen, ResidualsAndBinaryRateMatchTheTruth) {
  const int n = 20000;
  const SimData sim = simulate({n, 5, true});
  double resid = 0.0, resid2 = 0.0, binary = 0.0, p = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& cats = sim.data.raw[i].categories;
    const double r = sim.z_tilde[i][0] - sim_mu1(sim.x_tilde[i], cats[0], cats[1]);
    resid += r;
    resid2 += r * r;
    binary += sim.data.Z[i].z[2];
    p += sim_true_mean(sim.x_tilde[i], cats[0], cats[1], 2);
  }
  const double sd = std::sqrt(resid2 / n);
  EXPECT_NEAR(resid / n, 0.0, 3.0 * sd / std::sqrt(n));
  EXPECT_NEAR(binary / n, p / n, 3.0 * 0.5 / std::sqrt(n));
}

TEST(Simgen, SameSeedSameData) {
  const SimData a = simulate({50, 8, true});
  const SimData b = simulate({50, 8, true});
  const SimData c = simulate({50, 9, true});
  EXPECT_EQ(a.z_tilde, b.z_tilde);
  EXPECT_EQ(a.data.X, b.data.X);
  EXPECT_NE(a.z_tilde, c.z_tilde);
}
