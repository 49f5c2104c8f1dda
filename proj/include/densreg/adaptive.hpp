#ifndef DENSREG_ADAPTIVE_HPP
#define DENSREG_ADAPTIVE_HPP

#include "densreg/numeric.hpp"
#include "densreg/rng.hpp"
#include "densreg/types.hpp"

#include <algorithm>
#include <cmath>

namespace densreg {

struct AdaptSettings {
  double target_accept = 0.234;
  double step_exponent = 0.6;  ///< Robbins-Monro step c * m^{-exponent}
  double step_scale = 1.0;
  double jitter = 1e-8;        ///< floor added to the empirical covariance
  long warmup = 200;           ///< steps before the empirical covariance replaces the initial one
  double max_log_scale = 10.0;
  double min_log_scale = -30.0;
};

/// Random-walk proposal state for one block: xi = exp(log_scale) (2.4^2/p) (C + jitter I),
/// with C the initial covariance during warmup and the running empirical covariance after.
struct BlockAdaptState {
  int dim = 0;
  double log_scale = 0.0;
  Vector running_mean;
  Matrix running_cov;
  Matrix initial_cov;
  long step_count = 0;
  long accept_count = 0;
  long sample_count = 0;  ///< points in the running moments (collection starts at warmup/2)
  bool frozen = false;

  BlockAdaptState() = default;
  BlockAdaptState(int p, double initial_sd) : dim(p) {
    running_mean = Vector::Zero(p);
    running_cov = Matrix::Zero(p, p);
    initial_cov = Matrix::Identity(p, p) * (initial_sd * initial_sd * p / (2.4 * 2.4));
  }
  /// `proposal_cov` is the proposal covariance used at log_scale 0 during warmup.
  explicit BlockAdaptState(const Matrix& proposal_cov) : dim(static_cast<int>(proposal_cov.rows())) {
    running_mean = Vector::Zero(dim);
    running_cov = Matrix::Zero(dim, dim);
    initial_cov = proposal_cov * (dim / (2.4 * 2.4));
  }

  double acceptance_rate() const {
    return step_count == 0 ? 0.0 : static_cast<double>(accept_count) / static_cast<double>(step_count);
  }

  Matrix shape(const AdaptSettings& s) const {
    const Matrix& c = step_count > s.warmup ? running_cov : initial_cov;
    return c + s.jitter * Matrix::Identity(dim, dim);
  }

  Matrix xi(const AdaptSettings& s) const { return std::exp(log_scale) * (2.4 * 2.4 / dim) * shape(s); }

  Vector draw(const AdaptSettings& s, Rng& rng) const {
    Eigen::LLT<Matrix> llt(xi(s));
    Vector e(dim);
    for (int a = 0; a < dim; ++a) e(a) = rng.normal();
    if (llt.info() != Eigen::Success) {
      return std::sqrt(std::exp(log_scale) * (2.4 * 2.4 / dim)) * e.cwiseProduct(initial_cov.diagonal().cwiseSqrt());
    }
    return llt.matrixL() * e;
  }

  /// Records one step at position t (after the accept/reject decision).
  void update(const Vector& t, double accept_prob, bool accepted, const AdaptSettings& s) {
    ++step_count;
    if (accepted) ++accept_count;
    if (frozen) return;
    const double m = static_cast<double>(step_count);
    const double gamma = s.step_scale * std::pow(m, -s.step_exponent);
    log_scale = std::clamp(log_scale + gamma * (accept_prob - s.target_accept), s.min_log_scale, s.max_log_scale);
    if (step_count <= s.warmup / 2) return;
    ++sample_count;
    const double k = static_cast<double>(sample_count);
    const Vector delta = t - running_mean;
    running_mean += delta / k;
    running_cov += (delta * (t - running_mean).transpose() - running_cov) / k;
  }
};

/// Log target of a block on its original scale together with log|J_t| at that point.
struct TargetEval {
  double log_q = -kInf;
  double log_abs_jac = 0.0;
};

/// log of Q(phi*)/Q(phi) |J_t(phi)|/|J_t(phi*)|; -inf for an impossible proposal.
inline double log_acceptance_ratio(const TargetEval& current, const TargetEval& cand) {
  if (!(cand.log_q > -kInf) || std::isnan(cand.log_q)) return -kInf;
  const double log_a = (cand.log_q - current.log_q) + (current.log_abs_jac - cand.log_abs_jac);
  return std::isnan(log_a) ? -kInf : log_a;
}

/// One adaptive random-walk Metropolis step in t-space. Accepts with probability
/// min{1, Q(phi*)/Q(phi) |J_t(phi)|/|J_t(phi*)|}. `eval(t*)` returns the target at
/// the proposed point; `current` must hold the target at `t`. Returns true on accept,
/// in which case `t` and `current` are overwritten.
template <class Eval>
bool propose_and_accept(Vector& t, TargetEval& current, BlockAdaptState& adapt, const AdaptSettings& settings,
                        Eval&& eval, Rng& rng) {
  if (current.log_q == -kInf || std::isnan(current.log_q)) {
    throw NumericError("block target is -inf at the current state");
  }
  const Vector proposal = t + adapt.draw(settings, rng);
  const TargetEval cand = eval(proposal);
  const double log_a = log_acceptance_ratio(current, cand);
  const bool accept = std::log(rng.uniform()) < log_a;
  if (accept) {
    t = proposal;
    current = cand;
  }
  adapt.update(t, log_a >= 0.0 ? 1.0 : std::exp(log_a), accept, settings);
  return accept;
}

}  // namespace densreg

#endif  // DENSREG_ADAPTIVE_HPP
