#include "densreg/mcmc.hpp"
#include "densreg/prior.hpp"
#include "densreg/simgen.hpp"
#include "densreg/smc.hpp"

#include <gtest/gtest.h>

using namespace densreg;

TEST(Ess, BoundsAndExtremes) {
  EXPECT_NEAR(ess(Vector::Zero(50)), 50.0, 1e-12);
  Vector one = Vector::Constant(50, -kInf);
  one(7) = 0.0;
  EXPECT_NEAR(ess(one), 1.0, 1e-12);
  Rng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    Vector lw(30);
    for (int m = 0; m < 30; ++m) lw(m) = 3.0 * rng.normal();
    const double e = ess(lw);
    EXPECT_GE(e, 1.0 - 1e-12);
    EXPECT_LE(e, 30.0 + 1e-12);
  }
}

// Dyadic inputs make every shifted log weight exact, so equality must be exact.
TEST(Ess, ShiftInvariantExactly) {
  Vector lw(6);
  lw << -0.5, 0.25, 1.0, -2.0, 0.125, 0.0;
  EXPECT_EQ(ess(lw), ess((lw.array() + 64.0).matrix()));
  Vector r(6);
  r << 0.5, -0.25, 0.0, 1.5, -1.0, 0.75;
  EXPECT_EQ(cess(lw, r), cess((lw.array() + 64.0).matrix(), r));
  EXPECT_NEAR(cess(lw, r), cess(lw, (r.array() + 8.0).matrix()), 1e-12 * 6);
}

TEST(Cess, UniformPreviousWeightsGiveEss) {
  Rng rng(2);
  Vector r(40);
  for (int m = 0; m < 40; ++m) r(m) = rng.normal();
  EXPECT_NEAR(cess(Vector::Zero(40), r), ess(r), 1e-9);
  EXPECT_NEAR(cess(Vector::Zero(40), Vector::Zero(40)), 40.0, 1e-12);
  Vector lw(40);
  for (int m = 0; m < 40; ++m) lw(m) = rng.normal();
  const double c = cess(lw, r);
  EXPECT_GT(c, 0.0);
  EXPECT_LE(c, 40.0 + 1e-9);
}

TEST(Resample, SystematicOffspringCounts) {
  Vector w(4);
  w << 0.1, 0.4, 0.2, 0.3;
  const int M = 4;
  Rng rng(3);
  std::vector<double> mean(M, 0.0);
  const int R = 10000;
  for (int rep = 0; rep < R; ++rep) {
    std::vector<int> count(M, 0);
    for (int a : systematic_resample_indices(w, rng.uniform())) ++count[a];
    for (int m = 0; m < M; ++m) {
      EXPECT_GE(count[m], static_cast<int>(std::floor(M * w(m))));
      EXPECT_LE(count[m], static_cast<int>(std::ceil(M * w(m))));
      mean[m] += count[m] / static_cast<double>(R);
    }
  }
  for (int m = 0; m < M; ++m) EXPECT_NEAR(mean[m], M * w(m), 0.02 * M * w(m));
}

TEST(Resample, DegenerateAndUniformWeights) {
  Vector w = Vector::Zero(5);
  w(2) = 1.0;
  for (int a : systematic_resample_indices(w, 0.37)) EXPECT_EQ(a, 2);
  const std::vector<int> idx = systematic_resample_indices(Vector::Ones(5), 0.5);
  EXPECT_EQ(idx, (std::vector<int>{0, 1, 2, 3, 4}));
}

namespace {

struct SmcFixture {
  SimData sim;
  Hyperparams h;
  McmcResult mc;
};

SmcFixture smc_fixture() {
  SmcFixture f{simulate({120, 4, true}), {}, {}};
  Rng rng(4);
  f.h = build_empirical_prior(f.sim.data, PriorRecipe::Simulation, 10.0, rng);
  f.mc = run_mcmc(f.sim.data, f.h, McmcSettings{3, 300, 400, 20, 4, {}});
  return f;
}

}  // namespace

TEST(Smc, LatentLoglikMatchesSampler) {
  const SmcFixture f = smc_fixture();
  const MixtureState& s = f.mc.particles.particles.back();
  double direct = 0.0;
  for (int i = 0; i < f.sim.data.n(); ++i) {
    direct += latent_mixture_logdensity(s, f.sim.data.x(i), s.y.row(i).transpose());
  }
  EXPECT_NEAR(latent_loglik(s, f.sim.data), direct, 1e-8);
}

// Without resampling, log weight differences telescope to the full-data likelihood ratio.
TEST(Smc, WeightsTelescopeWithoutResampling) {
  const SmcFixture f = smc_fixture();
  StopRule rule;
  rule.ess_resample_threshold = 0.0;
  rule.max_extra_components = 5;
  rule.delta = 1e-12;
  const SmcResult r = adaptive_truncation_run(f.mc.particles, f.sim.data, f.h, f.mc.adapt, rule, 11);
  EXPECT_TRUE(r.capped);
  EXPECT_EQ(r.J_star, 8);
  const int M = r.particles.M();
  std::vector<double> ratio(M);
  for (int m = 0; m < M; ++m) {
    ratio[m] = latent_loglik(r.particles.particles[m], f.sim.data) -
               latent_loglik(f.mc.particles.particles[m], f.sim.data);
  }
  for (int m = 1; m < M; ++m) {
    EXPECT_NEAR(r.particles.log_weights(m) - r.particles.log_weights(0), ratio[m] - ratio[0], 1e-8);
  }
}

TEST(Smc, StopsNoEarlierThanJ0PlusI) {
  const SmcFixture f = smc_fixture();
  StopRule rule;
  rule.delta = 1e9;
  const SmcResult r = adaptive_truncation_run(f.mc.particles, f.sim.data, f.h, f.mc.adapt, rule, 12);
  EXPECT_EQ(r.J_star, 3 + rule.I);
  EXPECT_FALSE(r.capped);
  ASSERT_EQ(r.log.size(), 4u);
  for (const auto& row : r.log) {
    EXPECT_LE(row.ess_after, r.particles.M() + 1e-9);
    EXPECT_GE(row.ess_after, 1.0 - 1e-9);
  }
}

TEST(Smc, ResamplingKeepsParticleCountAndResetsWeights) {
  const SmcFixture f = smc_fixture();
  StopRule rule;
  rule.ess_resample_threshold = 1.01;  // force resampling and rejuvenation every step
  rule.max_extra_components = 2;
  rule.delta = 1e-12;
  const SmcResult r = adaptive_truncation_run(f.mc.particles, f.sim.data, f.h, f.mc.adapt, rule, 13, 2);
  EXPECT_EQ(r.particles.M(), f.mc.particles.M());
  EXPECT_TRUE(r.log.front().resampled);
  EXPECT_EQ(r.particles.log_weights, Vector::Zero(r.particles.M()));
  for (const auto& s : r.particles.particles) EXPECT_EQ(s.J(), 5);
}

TEST(Smc, ThreadCountDoesNotChangeResults) {
  const SmcFixture f = smc_fixture();
  StopRule rule;
  rule.ess_resample_threshold = 0.9;
  rule.max_extra_components = 3;
  rule.delta = 1e-12;
  const SmcResult a = adaptive_truncation_run(f.mc.particles, f.sim.data, f.h, f.mc.adapt, rule, 14, 1);
  const SmcResult b = adaptive_truncation_run(f.mc.particles, f.sim.data, f.h, f.mc.adapt, rule, 14, 3);
  EXPECT_EQ(particles_to_json(a.particles, true).dump(), particles_to_json(b.particles, true).dump());
}
