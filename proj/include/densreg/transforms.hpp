#ifndef DENSREG_TRANSFORMS_HPP
#define DENSREG_TRANSFORMS_HPP

#include "densreg/links.hpp"
#include "densreg/numeric.hpp"
#include "densreg/types.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace densreg {

struct LdlFactors {
  Matrix L;  ///< unit lower triangular
  Vector D;
};

/// Unpivoted Sigma = L D L^T. Throws NumericError when a pivot is not positive.
inline LdlFactors ldl_decompose(const Matrix& sigma) {
  const Eigen::Index d = sigma.rows();
  if (sigma.cols() != d) throw NumericError("LDL of a non-square matrix");
  LdlFactors f{Matrix::Identity(d, d), Vector::Zero(d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    double dk = sigma(k, k);
    for (Eigen::Index m = 0; m < k; ++m) dk -= f.L(k, m) * f.L(k, m) * f.D(m);
    if (!(dk > 0.0) || !std::isfinite(dk)) throw NumericError("matrix is not positive definite");
    f.D(k) = dk;
    for (Eigen::Index i = k + 1; i < d; ++i) {
      double s = sigma(i, k);
      for (Eigen::Index m = 0; m < k; ++m) s -= f.L(i, m) * f.L(k, m) * f.D(m);
      f.L(i, k) = s / dk;
    }
  }
  return f;
}

inline Matrix ldl_compose(const LdlFactors& f) { return f.L * f.D.asDiagonal() * f.L.transpose(); }

/// log|J_t(Sigma)| = -sum_l (d + 1 - l) log D_l, l = 1..d.
inline double log_abs_jacobian_sigma(const Vector& D) {
  const Eigen::Index d = D.size();
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) s -= static_cast<double>(d - k) * std::log(D(k));
  return s;
}

inline int sigma_param_count(int d) { return d * (d + 1) / 2; }

/// t(Sigma) = (log D_1..log D_d, strictly-lower entries of L column by column).
inline Vector sigma_to_t(const Matrix& sigma) {
  const LdlFactors f = ldl_decompose(sigma);
  const Eigen::Index d = sigma.rows();
  Vector t(sigma_param_count(static_cast<int>(d)));
  for (Eigen::Index k = 0; k < d; ++k) t(k) = std::log(f.D(k));
  Eigen::Index a = d;
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = c + 1; r < d; ++r) t(a++) = f.L(r, c);
  }
  return t;
}

inline LdlFactors t_to_ldl(const Vector& t, int d) {
  LdlFactors f{Matrix::Identity(d, d), Vector(d)};
  for (int k = 0; k < d; ++k) f.D(k) = std::exp(t(k));
  Eigen::Index a = d;
  for (int c = 0; c < d; ++c) {
    for (int r = c + 1; r < d; ++r) f.L(r, c) = t(a++);
  }
  return f;
}

inline Matrix t_to_sigma(const Vector& t, int d) {
  const Matrix s = ldl_compose(t_to_ldl(t, d));
  return 0.5 * (s + s.transpose());
}

/// One-coordinate pieces of the sequential logistic transform.
inline double bounded_to_t(double y, const Interval& b) {
  const bool lo = std::isfinite(b.lo);
  const bool hi = std::isfinite(b.hi);
  if (lo && hi) return std::log(y - b.lo) - std::log(b.hi - y);
  if (lo) return std::log(y - b.lo);
  if (hi) return -std::log(b.hi - y);
  return y;
}

inline double t_to_bounded(double t, const Interval& b) {
  const bool lo = std::isfinite(b.lo);
  const bool hi = std::isfinite(b.hi);
  if (lo && hi) return b.lo + (b.hi - b.lo) * inv_logit(t);
  if (lo) return b.lo + std::exp(t);
  if (hi) return b.hi - std::exp(-t);
  return t;
}

/// log|dt/dy| for one coordinate.
inline double log_dt_dy(double y, const Interval& b) {
  const bool lo = std::isfinite(b.lo);
  const bool hi = std::isfinite(b.hi);
  if (lo && hi) return std::log(b.hi - b.lo) - std::log(y - b.lo) - std::log(b.hi - y);
  if (lo) return -std::log(y - b.lo);
  if (hi) return -std::log(b.hi - y);
  return 0.0;
}

/// Sequential logistic transform of one latent row. Identity-link dimensions are
/// pinned at their observed value and excluded from t.
class RowTransform {
 public:
  RowTransform(const LinkSet& links, std::span<const double> z, const Vector& x) : links_(&links), z_(z), x_(&x) {
    for (int l = 0; l < static_cast<int>(links.size()); ++l) {
      if (links[l].kind != LinkKind::Identity) dims_.push_back(l);
    }
  }

  int size() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }

  Interval bounds(int l, std::span<const double> y) const { return bounds_for(*links_, l, z_, *x_, y); }

  Vector forward(const Vector& y) const {
    Vector t(size());
    for (int a = 0; a < size(); ++a) {
      const int l = dims_[a];
      const Interval b = bounds(l, std::span<const double>(y.data(), y.size()));
      if (!b.contains(y(l))) throw NumericError("latent value outside its bounds");
      t(a) = bounded_to_t(y(l), b);
    }
    return t;
  }

  /// Writes the row for t into y (identity dims must already hold z). Returns
  /// false when a sequential bound degenerates or rounding lands on a boundary.
  bool inverse(const Vector& t, Vector& y) const {
    for (int a = 0; a < size(); ++a) {
      const int l = dims_[a];
      const Interval b = bounds(l, std::span<const double>(y.data(), y.size()));
      if (!b.valid()) return false;
      y(l) = t_to_bounded(t(a), b);
      if (!b.contains(y(l))) return false;
    }
    return true;
  }

  /// log|J_t(y)|: sum over latent dims of log|dt_l/dy_l| (the Jacobian is triangular).
  double log_abs_jacobian(const Vector& y) const {
    double s = 0.0;
    for (int l : dims_) s += log_dt_dy(y(l), bounds(l, std::span<const double>(y.data(), y.size())));
    return s;
  }

 private:
  const LinkSet* links_;
  std::span<const double> z_;
  const Vector* x_;
  std::vector<int> dims_;
};

}  // namespace densreg

#endif  // DENSREG_TRANSFORMS_HPP
