#include "densreg/model.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace densreg;

namespace {

Hyperparams small_prior(int w = 3, int d = 2) {
  Hyperparams h;
  h.beta0 = Matrix::Zero(w, d);
  h.beta0(0, 0) = 1.0;
  h.U = Matrix::Identity(w, w) * 2.0;
  h.U(0, 1) = h.U(1, 0) = 0.3;
  h.nu = d + 3.0;
  h.sigma0 = Matrix::Identity(d, d);
  if (d > 1) h.sigma0(0, 1) = h.sigma0(1, 0) = 0.4;
  h.mu0 = Vector::Constant(1, 20.0);
  h.u = Vector::Constant(1, 0.5);
  h.alpha = Vector::Constant(1, 2.0);
  h.gamma = Vector::Constant(1, 3.0);
  h.varrho = Matrix::Ones(w - 2, 2);
  h.prepare();
  return h;
}

}  // namespace

TEST(Sticks, WeightsFromSticks) {
  Vector v(3);
  v << 0.5, 0.5, 0.2;
  const Vector w = stick_to_weights(v);
  EXPECT_DOUBLE_EQ(w(0), 0.5);
  EXPECT_DOUBLE_EQ(w(1), 0.25);
  EXPECT_DOUBLE_EQ(w(2), 0.05);
  const Vector lw = log_stick_weights(v);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(std::exp(lw(j)), w(j), 1e-15);
}

TEST(Sticks, NextWeightRecursionMatchesDirect) {
  Vector v(4);
  v << 0.3, 0.7, 0.15, 0.6;
  const Vector lw = log_stick_weights(v);
  EXPECT_NEAR(next_log_stick_weight(v(2), lw(2), v(3)), lw(3), 1e-13);
}

TEST(Kernel, SymmetricBernoulliGivesHalf) {
  WeightKernelParams psi;
  psi.rho = Vector::Constant(1, 0.5);
  Vector x0(2), x1(2);
  x0 << 1.0, 0.0;
  x1 << 1.0, 1.0;
  EXPECT_DOUBLE_EQ(kernel_g(x0, psi), 0.5);
  EXPECT_DOUBLE_EQ(kernel_g(x1, psi), 0.5);
}

TEST(Kernel, NormalTimesBernoulli) {
  WeightKernelParams psi;
  psi.mu = Vector::Constant(1, 20.0);
  psi.tau = Vector::Constant(1, 0.25);
  psi.rho = Vector::Constant(1, 0.3);
  Vector x(3);
  x << 1.0, 22.0, 1.0;
  EXPECT_NEAR(kernel_g(x, psi), std::exp(normal_logpdf(22.0, 20.0, 4.0)) * 0.3, 1e-15);
}

TEST(CovariateWeights, SumToOne) {
  const Hyperparams h = small_prior();
  Rng rng(2);
  MixtureState s;
  s.y = Matrix::Zero(1, 2);
  for (int j = 0; j < 6; ++j) append_component(s, sample_base_measure(h, rng));
  Vector x(3);
  x << 1.0, 21.0, 1.0;
  EXPECT_NEAR(covariate_weights(s, x).sum(), 1.0, 1e-12);
}

TEST(MixtureDensity, RelabelingIsBitIdentical) {
  const Hyperparams h = small_prior();
  Rng rng(3);
  MixtureState s;
  s.y = Matrix::Zero(1, 2);
  for (int j = 0; j < 5; ++j) append_component(s, sample_base_measure(h, rng));
  Vector x(3);
  x << 1.0, 19.0, 0.0;
  Vector y(2);
  y << 0.4, -0.2;
  const Vector lw = log_stick_weights(s.v);
  std::vector<int> perm{3, 0, 4, 2, 1};
  Vector lw2(5);
  std::vector<WeightKernelParams> psi2;
  std::vector<ComponentParams> th2;
  for (int k = 0; k < 5; ++k) {
    lw2(k) = lw(perm[k]);
    psi2.push_back(s.psi[perm[k]]);
    th2.push_back(s.theta[perm[k]]);
  }
  EXPECT_EQ(latent_mixture_logdensity(lw, s.psi, s.theta, x, y), latent_mixture_logdensity(lw2, psi2, th2, x, y));
}

TEST(MixtureDensity, SingleComponentIsGaussian) {
  const Hyperparams h = small_prior();
  Rng rng(4);
  MixtureState s;
  s.y = Matrix::Zero(1, 2);
  append_component(s, sample_base_measure(h, rng));
  Vector x(3);
  x << 1.0, 19.0, 0.0;
  Vector y(2);
  y << 0.1, 0.3;
  EXPECT_NEAR(latent_mixture_logdensity(s, x, y), mvn_logpdf(y, s.theta[0].beta.transpose() * x, s.theta[0].sigma),
              1e-12);
}

// vec(beta) ~ N(vec beta0, Sigma kron U).
TEST(Priors, MatrixNormalMatchesVectorizedGaussian) {
  const Hyperparams h = small_prior();
  Rng rng(5);
  Matrix sigma(2, 2);
  sigma << 1.5, 0.2, 0.2, 0.7;
  const Matrix beta = sample_matrix_normal(h, sigma, rng);
  const int w = h.width();
  Matrix K(w * 2, w * 2);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) K.block(a * w, b * w, w, w) = sigma(a, b) * h.U;
  }
  const Vector vb = Eigen::Map<const Vector>(beta.data(), beta.size());
  const Vector v0 = Eigen::Map<const Vector>(h.beta0.data(), h.beta0.size());
  EXPECT_NEAR(log_matrix_normal(beta, h, PreparedCovariance(sigma)), mvn_logpdf(vb, v0, K), 1e-10);
}

// In one dimension IW(s0, nu) is an inverse gamma with shape nu/2 and scale s0/2.
TEST(Priors, InverseWishartReducesToInverseGamma) {
  Hyperparams h = small_prior(3, 1);
  h.sigma0(0, 0) = 2.5;
  h.nu = 5.0;
  h.prepare();
  for (double s : {0.2, 1.0, 3.7}) {
    Matrix S = Matrix::Constant(1, 1, s);
    const double a = 0.5 * h.nu;
    const double b = 0.5 * 2.5;
    const double expected = a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(s) - b / s;
    EXPECT_NEAR(log_inverse_wishart(h, PreparedCovariance(S)), expected, 1e-12);
  }
}

TEST(Priors, InverseWishartSamplerMean) {
  const Hyperparams h = small_prior();
  Rng rng(6);
  Matrix acc = Matrix::Zero(2, 2);
  const int N = 100000;
  Hyperparams h2 = h;
  h2.nu = 8.0;
  h2.prepare();
  for (int k = 0; k < N; ++k) acc += sample_inverse_wishart(h2, rng);
  const Matrix expected = h2.sigma0 / (h2.nu - 2 - 1.0);
  EXPECT_NEAR((acc / N - expected).cwiseAbs().maxCoeff(), 0.0, 0.01);
}

TEST(Priors, GammaUsesRateParameter) {
  const Hyperparams h = small_prior();
  Rng rng(7);
  double tau = 0.0;
  double mu = 0.0;
  const int N = 100000;
  for (int k = 0; k < N; ++k) {
    const BaseDraw b = sample_base_measure(h, rng);
    tau += b.psi.tau(0);
    mu += b.psi.mu(0);
  }
  EXPECT_NEAR(tau / N, 2.0 / 3.0, 0.01);
  EXPECT_NEAR(mu / N, 20.0, 0.05);
}

TEST(Priors, NonSpdSigmaHasZeroDensity) {
  const Hyperparams h = small_prior();
  ComponentParams th{Matrix::Zero(3, 2), Matrix::Identity(2, 2)};
  th.sigma(0, 1) = th.sigma(1, 0) = 2.0;
  EXPECT_EQ(log_prior_theta(th, h), -kInf);
}

TEST(Hyperparams, ValidateCatchesBadShapes) {
  Hyperparams h = small_prior();
  h.nu = 2.5;
  EXPECT_THROW(h.prepare(), ValidationError);
  h = small_prior();
  h.gamma(0) = -1.0;
  EXPECT_THROW(h.prepare(), ValidationError);
}
