// Shared builders for tests: random particle sets and joint sampling from them.
#ifndef DENSREG_TESTS_FIXTURES_HPP
#define DENSREG_TESTS_FIXTURES_HPP

#include "densreg/model.hpp"
#include "densreg/particles.hpp"
#include "densreg/predict.hpp"
#include "densreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace densreg::testing {

/// Covariate row (1, age, dummy).
inline Vector test_row(double age, double dummy = 0.0) {
  Vector x(3);
  x << 1.0, age, dummy;
  return x;
}

/// Random correlation matrix with entries bounded away from +-1.
inline Matrix random_correlation(int d, Rng& rng, double strength = 0.8) {
  Matrix A(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = rng.normal();
  }
  Matrix S = strength * A * A.transpose() / d + Matrix::Identity(d, d);
  const Vector s = S.diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * S * s.asDiagonal();
}

/// Per-dimension latent location and scale of random components.
struct DimSpec {
  double mean = 0.0;
  double mean_spread = 0.0;
  double sd = 1.0;
};

/// Random weighted particle set: M particles, J components, x-independent
/// regression means (intercept only) and covariate-dependent kernel weights.
inline ParticleSet random_particle_set(int M, int J, const std::vector<DimSpec>& dims, Rng& rng) {
  const int d = static_cast<int>(dims.size());
  ParticleSet ps;
  ps.log_weights.resize(M);
  for (int m = 0; m < M; ++m) {
    MixtureState s;
    s.v.resize(J);
    for (int j = 0; j < J; ++j) {
      s.v(j) = j + 1 == J ? 0.999 : rng.uniform(0.2, 0.7);
      ComponentParams th;
      th.beta = Matrix::Zero(3, d);
      const Matrix R = random_correlation(d, rng);
      Vector sd(d);
      for (int l = 0; l < d; ++l) {
        th.beta(0, l) = dims[l].mean + dims[l].mean_spread * rng.normal();
        sd(l) = dims[l].sd * rng.uniform(0.7, 1.3);
      }
      th.sigma = sd.asDiagonal() * R * sd.asDiagonal();
      WeightKernelParams psi;
      psi.mu = Vector::Constant(1, rng.uniform(16.0, 26.0));
      psi.tau = Vector::Constant(1, rng.uniform(0.02, 0.1));
      psi.rho = Vector::Constant(1, rng.uniform(0.2, 0.8));
      s.theta.push_back(th);
      s.psi.push_back(psi);
    }
    ps.particles.push_back(std::move(s));
    ps.log_weights(m) = 0.5 * rng.normal();
    ps.seeds.push_back(static_cast<std::uint64_t>(m + 1));
  }
  return ps;
}

/// Joint draw of the latent vector from the predictive at x.
struct JointSampler {
  const PredictiveMixture* mix;
  std::vector<double> cum;
  std::vector<Matrix> chol;

  explicit JointSampler(const PredictiveMixture& m) : mix(&m) {
    double c = 0.0;
    for (const auto& comp : m.comps) {
      c += comp.weight;
      cum.push_back(c);
      chol.push_back(comp.sigma->llt().matrixL());
    }
  }

  Vector draw(Rng& rng) const {
    const double u = rng.uniform() * cum.back();
    const auto k = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const std::size_t idx = std::min(k, cum.size() - 1);
    const auto& comp = mix->comps[idx];
    Vector e(comp.mean.size());
    for (Eigen::Index a = 0; a < e.size(); ++a) e(a) = rng.normal();
    return comp.mean + chol[idx] * e;
  }
};

}  // namespace densreg::testing

#endif  // DENSREG_TESTS_FIXTURES_HPP
