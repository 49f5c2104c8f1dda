#ifndef DENSREG_PRIOR_HPP
#define DENSREG_PRIOR_HPP

#include "densreg/data.hpp"
#include "densreg/links.hpp"
#include "densreg/model.hpp"
#include "densreg/numeric.hpp"
#include "densreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace densreg {

/// How censored responses enter the auxiliary latent matrix.
enum class PriorRecipe {
  Simulation,   ///< censored event ages set to log(x_1 + 2)
  Application,  ///< censored event ages drawn from a truncated normal fitted to uncensored rows
};

inline double default_g_factor(PriorRecipe r) { return r == PriorRecipe::Simulation ? 10.0 : 20.0; }

/// Draw from N(mean, sd^2) restricted to (lo, inf) by inverse CDF on the upper tail.
inline double sample_lower_truncated_normal(double mean, double sd, double lo, Rng& rng) {
  if (!std::isfinite(lo)) return rng.normal(mean, sd);
  const double a = (lo - mean) / sd;
  const double tail = normal_sf(a);
  double y = mean - sd * normal_quantile(rng.uniform() * tail);
  if (!(y > lo)) y = std::nextafter(lo, kInf) + 1e-12 * (1.0 + std::abs(lo));
  return y;
}

/// Auxiliary latent matrix used to center the prior.
inline Matrix auxiliary_latent(const Dataset& ds, PriorRecipe recipe, Rng& rng) {
  const int n = ds.n();
  const int d = ds.d();
  Matrix y = Matrix::Zero(n, d);
  for (int l = 0; l < d; ++l) {
    const auto& s = ds.links[l];
    std::vector<int> censored_rows;
    double sum = 0.0;
    double sum2 = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      const auto z = ds.z(i);
      const Vector x = ds.x(i);
      if (s.kind == LinkKind::Identity) {
        y(i, l) = z[l];
        continue;
      }
      if (s.kind == LinkKind::SignThreshold) {
        y(i, l) = z[l] > 0.5 ? 1.0 : -1.0;
        continue;
      }
      if (s.is_event_age() && z[l] == 0.0) {
        censored_rows.push_back(i);
        continue;
      }
      Vector row = y.row(i).transpose();
      const Interval bb = bounds_for(ds.links, l, z, x, std::span<const double>(row.data(), row.size()));
      if (!bb.valid()) throw ValidationError("record " + std::to_string(i + 1) + " admits no latent value");
      double v = 0.0;
      if (std::isfinite(bb.lo) && std::isfinite(bb.hi)) {
        v = 0.5 * (bb.lo + bb.hi);
      } else if (std::isfinite(bb.hi)) {
        v = bb.hi - 1.0;
      } else if (std::isfinite(bb.lo)) {
        v = bb.lo + 1.0;
      }
      y(i, l) = v;
      sum += v;
      sum2 += v * v;
      ++count;
    }
    if (censored_rows.empty()) continue;
    double mean = 0.0;
    double sd = 1.0;
    if (count > 0) mean = sum / count;
    if (count > 1) sd = std::sqrt(std::max((sum2 - count * mean * mean) / (count - 1), 1e-12));
    for (int i : censored_rows) {
      const Vector x = ds.x(i);
      const double c = x(s.censor_covariate);
      Vector row = y.row(i).transpose();
      const Interval b = bounds_for(ds.links, l, ds.z(i), x, std::span<const double>(row.data(), row.size()));
      if (recipe == PriorRecipe::Simulation) {
        if (s.kind == LinkKind::FloorExpCensored) {
          y(i, l) = std::log(c + 2.0);
        } else {
          y(i, l) = std::log(std::max(c + 2.0 - std::exp(row(s.base_dim)), 1.0));
          if (!b.contains(y(i, l))) y(i, l) = std::isfinite(b.lo) ? b.lo + 1.0 : 0.0;
        }
      } else {
        y(i, l) = sample_lower_truncated_normal(mean, sd, b.lo, rng);
      }
    }
  }
  return y;
}

struct OlsFit {
  Matrix beta;
  Matrix sigma;
  Matrix xtx_inv;
  bool ridged = false;
};

/// Multivariate least squares Y = X B + E with residual covariance R^T R / (n - q - 1).
inline OlsFit ols_fit(const Matrix& X, const Matrix& Y) {
  const Eigen::Index n = X.rows();
  const Eigen::Index w = X.cols();
  if (n <= w) throw ValidationError("need more observations than regression coefficients for the empirical prior");
  Matrix xtx = X.transpose() * X;
  OlsFit f;
  Eigen::LDLT<Matrix> ldlt(xtx);
  const Vector D = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || D.minCoeff() <= 1e-12 * D.maxCoeff()) {
    xtx += (1e-8 * xtx.trace() / static_cast<double>(w)) * Matrix::Identity(w, w);
    ldlt.compute(xtx);
    f.ridged = true;
    const Vector D2 = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || D2.minCoeff() <= 0.0) {
      throw NumericError("X^T X is singular even after ridge jitter; drop collinear covariates");
    }
  }
  f.xtx_inv = ldlt.solve(Matrix::Identity(w, w));
  f.beta = ldlt.solve(X.transpose() * Y);
  const Matrix R = Y - X * f.beta;
  f.sigma = R.transpose() * R / static_cast<double>(n - w);
  return f;
}

/// Data-centred hyperparameters: OLS on an auxiliary latent matrix gives beta0 and
/// the IW scale; U is a g-prior; kernel hyperparameters follow the covariate ranges.
inline Hyperparams build_empirical_prior(const Dataset& ds, PriorRecipe recipe, double g_factor, Rng& rng) {
  const int d = ds.d();
  const Matrix Y = auxiliary_latent(ds, recipe, rng);
  const OlsFit fit = ols_fit(ds.X, Y);
  Hyperparams h;
  h.beta0 = fit.beta;
  h.nu = d + 3.0;
  h.sigma0 = (h.nu - d - 1.0) * fit.sigma;
  const double min_diag = fit.sigma.diagonal().minCoeff();
  if (!(min_diag > 0.0)) throw NumericError("residual variance of the auxiliary fit is zero");
  h.U = g_factor * fit.xtx_inv / min_diag;
  h.U = 0.5 * (h.U + h.U.transpose());
  const int p = ds.schema.p;
  h.mu0.resize(p);
  h.u = Vector::Constant(p, 0.5);
  h.alpha = Vector::Constant(p, 2.0);
  h.gamma.resize(p);
  for (int k = 0; k < p; ++k) {
    const Vector col = ds.X.col(1 + k);
    h.mu0(k) = col.mean();
    double range = col.maxCoeff() - col.minCoeff();
    if (!(range > 0.0)) range = 1.0;
    h.gamma(k) = h.u(k) * (range / 4.0) * (range / 4.0);
  }
  const int r = ds.q() - p;
  h.varrho = Matrix::Ones(r, 2);
  h.zeta1 = 1.0;
  h.zeta2 = 1.0;
  h.prepare();
  return h;
}

}  // namespace densreg

#endif  // DENSREG_PRIOR_HPP
