#ifndef DENSREG_NUMERIC_HPP
#define DENSREG_NUMERIC_HPP

#include "densreg/types.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace densreg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_sum_exp(std::span<const double> terms) {
  double hi = -kInf;
  for (double t : terms) hi = std::max(hi, t);
  if (hi == -kInf) return -kInf;
  if (hi == kInf) return kInf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return hi + std::log(s);
}

inline double log_sum_exp(const Vector& v) { return log_sum_exp(std::span<const double>(v.data(), v.size())); }

/// log(exp(a) + exp(b))
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

inline double normal_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1 - Phi(x), accurate in the upper tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// P(a < Z < b) for a standard normal Z, computed on the tail that avoids cancellation.
inline double normal_interval_prob(double a, double b) {
  if (!(a < b)) return 0.0;
  if (a > 0.0) return normal_sf(a) - normal_sf(b);
  return normal_cdf(b) - normal_cdf(a);
}

inline double lognormal_pdf(double z, double mu, double var) {
  if (!(z > 0.0)) return 0.0;
  const double lz = std::log(z);
  return std::exp(normal_logpdf(lz, mu, var) - lz);
}

inline double log_beta_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return -kInf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

/// Gamma density with shape/rate parameterization.
inline double log_gamma_pdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return -kInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

inline double log_multivariate_gamma(double a, int d) {
  double s = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < d; ++j) s += std::lgamma(a - 0.5 * j);
  return s;
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double inv_logit(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Conditional distribution of x[target] given x[given] = values for x ~ N(mean, cov),
/// via the Schur complement. All conditioning formulas in the predictive layer go
/// through this one routine.
struct GaussianConditional {
  double mean = 0.0;
  double var = 0.0;
};

inline GaussianConditional condition_gaussian(const Vector& mean, const Matrix& cov, int target,
                                              const std::vector<int>& given, const Vector& values) {
  const int k = static_cast<int>(given.size());
  if (k == 0) return {mean(target), cov(target, target)};
  Matrix s_gg(k, k);
  Vector s_tg(k);
  Vector resid(k);
  for (int a = 0; a < k; ++a) {
    s_tg(a) = cov(target, given[a]);
    resid(a) = values(a) - mean(given[a]);
    for (int b = 0; b < k; ++b) s_gg(a, b) = cov(given[a], given[b]);
  }
  Eigen::LDLT<Matrix> ldlt(s_gg);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
    throw NumericError("singular conditioning covariance block");
  }
  const Vector coef = ldlt.solve(s_tg);
  return {mean(target) + coef.dot(resid), cov(target, target) - coef.dot(s_tg)};
}

}  // namespace densreg

#endif  // DENSREG_NUMERIC_HPP
