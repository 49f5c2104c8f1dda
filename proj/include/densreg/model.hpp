#ifndef DENSREG_MODEL_HPP
#define DENSREG_MODEL_HPP

#include "densreg/numeric.hpp"
#include "densreg/rng.hpp"
#include "densreg/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace densreg {

/// theta_j: regression coefficients ((q+1) x d) and response covariance (d x d).
struct ComponentParams {
  Matrix beta;
  Matrix sigma;
};

/// psi_j: Normal kernel (mu, tau) for each numeric covariate and a Bernoulli
/// probability for each dummy column.
struct WeightKernelParams {
  Vector mu;
  Vector tau;
  Vector rho;
};

struct MixtureState {
  Vector v;
  std::vector<WeightKernelParams> psi;
  std::vector<ComponentParams> theta;
  Matrix y;  ///< n x d latent responses

  int J() const { return static_cast<int>(v.size()); }
  int d() const { return theta.empty() ? static_cast<int>(y.cols()) : static_cast<int>(theta[0].sigma.rows()); }
};

struct Hyperparams {
  Matrix beta0;
  Matrix U;
  Matrix sigma0;
  double nu = 0.0;
  Vector mu0;
  Vector u;
  Vector alpha;
  Vector gamma;  ///< Gamma rate parameters for tau
  Matrix varrho;  ///< (q-p) x 2 Beta parameters for rho
  double zeta1 = 1.0;
  double zeta2 = 1.0;

  int d() const { return static_cast<int>(sigma0.rows()); }
  int width() const { return static_cast<int>(beta0.rows()); }
  int p() const { return static_cast<int>(mu0.size()); }
  int r() const { return static_cast<int>(varrho.rows()); }

  /// Caches inverses and log-determinants. Must be called after any field changes.
  void prepare() {
    validate();
    Eigen::LLT<Matrix> u_llt(U);
    U_chol = u_llt.matrixL();
    U_inv = u_llt.solve(Matrix::Identity(U.rows(), U.cols()));
    logdet_U = 2.0 * U_chol.diagonal().array().log().sum();
    Eigen::LLT<Matrix> s_llt(sigma0);
    logdet_sigma0 = 2.0 * Matrix(s_llt.matrixL()).diagonal().array().log().sum();
    const Matrix s_inv = s_llt.solve(Matrix::Identity(sigma0.rows(), sigma0.cols()));
    sigma0_inv_chol = Eigen::LLT<Matrix>(s_inv).matrixL();
    prepared = true;
  }

  void validate() const {
    const int d = this->d();
    if (d < 1 || sigma0.cols() != d) throw ValidationError("sigma0 must be a square matrix");
    if (beta0.cols() != d) throw ValidationError("beta0 must have d columns");
    if (U.rows() != beta0.rows() || U.cols() != beta0.rows()) throw ValidationError("U must be (q+1) x (q+1)");
    if (!(nu > d + 1.0)) throw ValidationError("nu must exceed d + 1");
    if (u.size() != mu0.size() || alpha.size() != mu0.size() || gamma.size() != mu0.size()) {
      throw ValidationError("mu0, u, alpha and gamma must have length p");
    }
    if ((u.array() <= 0.0).any() || (alpha.array() <= 0.0).any() || (gamma.array() <= 0.0).any()) {
      throw ValidationError("u, alpha and gamma must be positive");
    }
    if (varrho.size() > 0 && (varrho.cols() != 2 || (varrho.array() <= 0.0).any())) {
      throw ValidationError("varrho must hold positive Beta parameter pairs");
    }
    if (!(zeta1 > 0.0 && zeta2 > 0.0)) throw ValidationError("zeta must be positive");
    if (Eigen::LLT<Matrix>(U).info() != Eigen::Success) throw ValidationError("U must be positive definite");
    if (Eigen::LLT<Matrix>(sigma0).info() != Eigen::Success) throw ValidationError("sigma0 must be positive definite");
  }

  bool prepared = false;
  Matrix U_chol;
  Matrix U_inv;
  double logdet_U = 0.0;
  double logdet_sigma0 = 0.0;
  Matrix sigma0_inv_chol;
};

/// w_1 = v_1, w_j = v_j prod_{j'<j} (1 - v_j').
inline Vector stick_to_weights(const Vector& v) {
  Vector w(v.size());
  double rest = 1.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    w(j) = v(j) * rest;
    rest *= 1.0 - v(j);
  }
  return w;
}

inline Vector log_stick_weights(const Vector& v) {
  Vector lw(v.size());
  double rest = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    lw(j) = std::log(v(j)) + rest;
    rest += std::log1p(-v(j));
  }
  return lw;
}

/// Weight of a newly appended component from the last one:
/// w_{J+1} = v_{J+1} (1 - v_J) / v_J * w_J, in log space.
inline double next_log_stick_weight(double v_last, double log_w_last, double v_new) {
  return std::log(v_new) + std::log1p(-v_last) - std::log(v_last) + log_w_last;
}

/// log g(x | psi); x is the intercept-prepended row, numeric covariates in
/// columns 1..p and dummies after them.
inline double log_kernel_g(const Vector& x, const WeightKernelParams& psi) {
  const Eigen::Index p = psi.mu.size();
  double s = 0.0;
  for (Eigen::Index k = 0; k < p; ++k) s += normal_logpdf(x(1 + k), psi.mu(k), 1.0 / psi.tau(k));
  for (Eigen::Index k = 0; k < psi.rho.size(); ++k) {
    s += x(1 + p + k) > 0.5 ? std::log(psi.rho(k)) : std::log1p(-psi.rho(k));
  }
  return s;
}

inline double kernel_g(const Vector& x, const WeightKernelParams& psi) { return std::exp(log_kernel_g(x, psi)); }

/// log w_j(x) from explicit log stick weights.
inline Vector log_covariate_weights(const Vector& log_w, const std::vector<WeightKernelParams>& psi, const Vector& x) {
  const Eigen::Index J = log_w.size();
  Vector a(J);
  for (Eigen::Index j = 0; j < J; ++j) a(j) = log_w(j) + log_kernel_g(x, psi[j]);
  const double norm = log_sum_exp(a);
  if (!std::isfinite(norm)) throw NumericError("covariate weights vanish for every component");
  return a.array() - norm;
}

inline Vector covariate_weights(const MixtureState& s, const Vector& x) {
  return log_covariate_weights(log_stick_weights(s.v), s.psi, x).array().exp();
}

/// Cholesky factor and log-determinant of one component covariance.
struct PreparedCovariance {
  Matrix L;
  double logdet = 0.0;
  bool ok = false;

  explicit PreparedCovariance(const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) return;
    L = llt.matrixL();
    if ((L.diagonal().array() <= 0.0).any()) return;
    logdet = 2.0 * L.diagonal().array().log().sum();
    ok = true;
  }

  double logpdf(const Vector& y, const Vector& mean) const {
    const Vector r = L.triangularView<Eigen::Lower>().solve(y - mean);
    return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + logdet + r.squaredNorm());
  }
};

inline double mvn_logpdf(const Vector& y, const Vector& mean, const Matrix& sigma) {
  PreparedCovariance pc(sigma);
  if (!pc.ok) throw NumericError("component covariance is not positive definite");
  return pc.logpdf(y, mean);
}

/// log f(y | x) = log sum_j w_j(x) N_d(y | x beta_j, Sigma_j), with explicit log stick weights.
/// Terms are summed in sorted order so relabeling components gives bit-identical values.
inline double latent_mixture_logdensity(const Vector& log_w, const std::vector<WeightKernelParams>& psi,
                                        const std::vector<ComponentParams>& theta, const Vector& x,
                                        const Vector& y) {
  const Vector lw = log_covariate_weights(log_w, psi, x);
  std::vector<double> terms(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const Vector mean = theta[j].beta.transpose() * x;
    terms[j] = lw(static_cast<Eigen::Index>(j)) + mvn_logpdf(y, mean, theta[j].sigma);
  }
  std::sort(terms.begin(), terms.end());
  return log_sum_exp(terms);
}

inline double latent_mixture_logdensity(const MixtureState& s, const Vector& x, const Vector& y) {
  return latent_mixture_logdensity(log_stick_weights(s.v), s.psi, s.theta, x, y);
}

/// Matrix-normal MN(beta | beta0, U, Sigma) log density.
inline double log_matrix_normal(const Matrix& beta, const Hyperparams& h, const PreparedCovariance& sigma) {
  const double rows = static_cast<double>(beta.rows());
  const double d = static_cast<double>(beta.cols());
  const Matrix diff = beta - h.beta0;
  const Matrix a = h.U_inv * diff;                                                  // U^{-1}(B - B0)
  const Matrix b = sigma.L.triangularView<Eigen::Lower>().solve(diff.transpose());  // L^{-1}(B - B0)^T
  const Matrix c = sigma.L.triangularView<Eigen::Lower>().solve(a.transpose());
  const double quad = (b.array() * c.array()).sum();
  return -0.5 * (rows * d * kLog2Pi + d * h.logdet_U + rows * sigma.logdet + quad);
}

inline double log_inverse_wishart(const Hyperparams& h, const PreparedCovariance& sigma) {
  const int d = h.d();
  const Matrix sinv_s0 = sigma.L.triangularView<Eigen::Lower>().solve(h.sigma0);
  const Matrix full = sigma.L.transpose().triangularView<Eigen::Upper>().solve(sinv_s0);
  return 0.5 * h.nu * h.logdet_sigma0 - 0.5 * h.nu * d * std::numbers::ln2 - log_multivariate_gamma(0.5 * h.nu, d) -
         0.5 * (h.nu + d + 1.0) * sigma.logdet - 0.5 * full.trace();
}

/// Prior terms for theta_j; -inf when Sigma_j is not SPD.
inline double log_prior_theta(const ComponentParams& th, const Hyperparams& h) {
  PreparedCovariance pc(th.sigma);
  if (!pc.ok) return -kInf;
  return log_matrix_normal(th.beta, h, pc) + log_inverse_wishart(h, pc);
}

/// Normal-Gamma prior terms for (mu_j, tau_j).
inline double log_prior_mutau(const WeightKernelParams& psi, const Hyperparams& h) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < psi.mu.size(); ++k) {
    const double tau = psi.tau(k);
    if (!(tau > 0.0)) return -kInf;
    s += normal_logpdf(psi.mu(k), h.mu0(k), 1.0 / (h.u(k) * tau)) + log_gamma_pdf(tau, h.alpha(k), h.gamma(k));
  }
  return s;
}

inline double log_prior_rho(const WeightKernelParams& psi, const Hyperparams& h) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < psi.rho.size(); ++k) s += log_beta_pdf(psi.rho(k), h.varrho(k, 0), h.varrho(k, 1));
  return s;
}

inline double log_prior_stick(double v, const Hyperparams& h) { return log_beta_pdf(v, h.zeta1, h.zeta2); }

/// Sum of base-measure and stick log densities over the J components.
inline double log_prior(const MixtureState& s, const Hyperparams& h) {
  double total = 0.0;
  for (int j = 0; j < s.J(); ++j) {
    total += log_prior_theta(s.theta[j], h) + log_prior_mutau(s.psi[j], h) + log_prior_rho(s.psi[j], h) +
             log_prior_stick(s.v(j), h);
    if (total == -kInf) return total;
  }
  return total;
}

/// Sigma ~ IW(sigma0, nu) via the Bartlett decomposition of the Wishart(sigma0^{-1}, nu) precision.
inline Matrix sample_inverse_wishart(const Hyperparams& h, Rng& rng) {
  const int d = h.d();
  Matrix A = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(h.nu - i));
    for (int k = 0; k < i; ++k) A(i, k) = rng.normal();
  }
  const Matrix LA = h.sigma0_inv_chol * A;
  const Matrix W = LA * LA.transpose();
  Matrix sigma = W.llt().solve(Matrix::Identity(d, d));
  return 0.5 * (sigma + sigma.transpose());
}

/// beta | Sigma ~ MN(beta0, U, Sigma).
inline Matrix sample_matrix_normal(const Hyperparams& h, const Matrix& sigma, Rng& rng) {
  Matrix Z(h.width(), h.d());
  for (Eigen::Index c = 0; c < Z.cols(); ++c) {
    for (Eigen::Index r = 0; r < Z.rows(); ++r) Z(r, c) = rng.normal();
  }
  const Matrix Ls = sigma.llt().matrixL();
  return h.beta0 + h.U_chol * Z * Ls.transpose();
}

struct BaseDraw {
  WeightKernelParams psi;
  ComponentParams theta;
  double v = 0.5;
};

inline BaseDraw sample_base_measure(const Hyperparams& h, Rng& rng) {
  BaseDraw out;
  out.theta.sigma = sample_inverse_wishart(h, rng);
  out.theta.beta = sample_matrix_normal(h, out.theta.sigma, rng);
  const int p = h.p();
  out.psi.mu.resize(p);
  out.psi.tau.resize(p);
  for (int k = 0; k < p; ++k) {
    const double tau = std::max(rng.gamma(h.alpha(k), h.gamma(k)), 1e-300);
    out.psi.tau(k) = tau;
    out.psi.mu(k) = rng.normal(h.mu0(k), 1.0 / std::sqrt(h.u(k) * tau));
  }
  out.psi.rho.resize(h.r());
  for (int k = 0; k < h.r(); ++k) {
    out.psi.rho(k) = std::clamp(rng.beta(h.varrho(k, 0), h.varrho(k, 1)), 1e-12, 1.0 - 1e-12);
  }
  out.v = std::clamp(rng.beta(h.zeta1, h.zeta2), 1e-300, 1.0 - 1e-16);
  return out;
}

/// Appends one base-measure draw to every per-component field of the state.
inline void append_component(MixtureState& s, const BaseDraw& draw) {
  const Eigen::Index J = s.v.size();
  s.v.conservativeResize(J + 1);
  s.v(J) = draw.v;
  s.psi.push_back(draw.psi);
  s.theta.push_back(draw.theta);
}

}  // namespace densreg

#endif  // DENSREG_MODEL_HPP
