#include "densreg/mcmc.hpp"
#include "densreg/prior.hpp"
#include "densreg/simgen.hpp"

#include <gtest/gtest.h>

using namespace densreg;

namespace {

struct Fixture {
  SimData sim;
  Hyperparams h;
};

Fixture make_fixture(int n, std::uint64_t seed) {
  Fixture f{simulate({n, seed, true}), {}};
  Rng rng(seed);
  f.h = build_empirical_prior(f.sim.data, PriorRecipe::Simulation, 10.0, rng);
  return f;
}

double direct_loglik(const MixtureState& s, const Dataset& ds) {
  double total = 0.0;
  for (int i = 0; i < ds.n(); ++i) total += latent_mixture_logdensity(s, ds.x(i), s.y.row(i).transpose());
  return total;
}

}  // namespace

TEST(Gibbs, CachedLikelihoodMatchesDirectEvaluation) {
  const Fixture f = make_fixture(120, 1);
  Rng init(1), rng(2);
  GibbsSampler g(f.sim.data, f.h, initial_state(f.sim.data, f.h, 4, init), make_adapt_table(f.sim.data, f.h, 4));
  for (int k = 0; k < 60; ++k) {
    g.sweep(rng);
    if (k % 20 == 19) {
      EXPECT_NEAR(g.loglik(), direct_loglik(g.state(), f.sim.data), 1e-6 * (1.0 + std::abs(g.loglik())));
    }
  }
}

TEST(Gibbs, LatentRowsStayInsideTheirBounds) {
  const Fixture f = make_fixture(100, 3);
  Rng init(3), rng(4);
  GibbsSampler g(f.sim.data, f.h, initial_state(f.sim.data, f.h, 3, init), make_adapt_table(f.sim.data, f.h, 3));
  for (int k = 0; k < 50; ++k) g.sweep(rng);
  const MixtureState& s = g.state();
  for (int i = 0; i < f.sim.data.n(); ++i) {
    const Vector y = s.y.row(i).transpose();
    EXPECT_TRUE(log_in_bounds(f.sim.data.links, std::span<const double>(y.data(), y.size()), f.sim.data.z(i),
                              f.sim.data.x(i)));
  }
  for (int j = 0; j < s.J(); ++j) {
    EXPECT_TRUE(PreparedCovariance(s.theta[j].sigma).ok);
    EXPECT_GT(s.v(j), 0.0);
    EXPECT_LT(s.v(j), 1.0);
  }
}

TEST(Gibbs, SameSeedSameChain) {
  const Fixture f = make_fixture(80, 5);
  McmcSettings cfg{3, 20, 40, 10, 9, {}};
  const McmcResult a = run_mcmc(f.sim.data, f.h, cfg);
  const McmcResult b = run_mcmc(f.sim.data, f.h, cfg);
  ASSERT_EQ(a.particles.M(), 4);
  EXPECT_EQ(particles_to_json(a.particles, true).dump(), particles_to_json(b.particles, true).dump());
  EXPECT_EQ(a.particles.log_weights, Vector::Zero(4));
}

TEST(Gibbs, IdentityResponsesArePinned) {
  const CovariateSchema schema{1, {}};
  std::vector<RawCovariates> raw;
  std::vector<std::vector<double>> z;
  Rng rng(6);
  for (int i = 0; i < 60; ++i) {
    const double x = rng.uniform(0.0, 2.0);
    raw.push_back({{x}, {}});
    z.push_back({1.0 + 0.5 * x + 0.3 * rng.normal()});
  }
  const Dataset ds = make_dataset(schema, {LinkSpec::identity()}, raw, z);
  Rng prng(7);
  const Hyperparams h = build_empirical_prior(ds, PriorRecipe::Simulation, 10.0, prng);
  Rng init(8), chain(9);
  GibbsSampler g(ds, h, initial_state(ds, h, 1, init), make_adapt_table(ds, h, 1));
  for (int k = 0; k < 30; ++k) g.sweep(chain);
  for (int i = 0; i < ds.n(); ++i) EXPECT_EQ(g.state().y(i, 0), z[i][0]);
}

TEST(Gibbs, AdaptTableExtendsByAveraging) {
  const Fixture f = make_fixture(60, 10);
  AdaptTable t = make_adapt_table(f.sim.data, f.h, 2);
  t.components[0].v.log_scale = -1.0;
  t.components[1].v.log_scale = 1.0;
  t.extend_to(4);
  ASSERT_EQ(t.components.size(), 4u);
  EXPECT_DOUBLE_EQ(t.components[3].v.log_scale, 0.0);
}
