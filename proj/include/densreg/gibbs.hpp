#ifndef DENSREG_GIBBS_HPP
#define DENSREG_GIBBS_HPP

#include "densreg/adaptive.hpp"
#include "densreg/data.hpp"
#include "densreg/links.hpp"
#include "densreg/model.hpp"
#include "densreg/rng.hpp"
#include "densreg/transforms.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <string>
#include <vector>

namespace densreg {

/// Proposal states for every block of one chain.
struct AdaptTable {
  struct Component {
    std::vector<BlockAdaptState> beta;  ///< one block, or one per response column when split
    BlockAdaptState sigma;
    BlockAdaptState mutau;
    BlockAdaptState rho;
    BlockAdaptState v;
  };
  std::vector<Component> components;
  std::vector<BlockAdaptState> rows;

  void freeze() {
    for (auto& c : components) {
      for (auto& b : c.beta) b.frozen = true;
      c.sigma.frozen = c.mutau.frozen = c.rho.frozen = c.v.frozen = true;
    }
    for (auto& r : rows) r.frozen = true;
  }

  /// Appends components whose proposal equals the average of the existing ones.
  void extend_to(int J) {
    if (components.empty()) throw NumericError("cannot extend an empty adaptation table");
    while (static_cast<int>(components.size()) < J) components.push_back(average());
  }

 private:
  static BlockAdaptState mean_block(const std::vector<const BlockAdaptState*>& blocks, const AdaptSettings& s) {
    BlockAdaptState out = *blocks.front();
    if (out.dim == 0) return out;
    Matrix cov = Matrix::Zero(out.dim, out.dim);
    double log_scale = 0.0;
    for (const auto* b : blocks) {
      cov += b->shape(s);
      log_scale += b->log_scale;
    }
    const double k = static_cast<double>(blocks.size());
    out.running_cov = cov / k;
    out.initial_cov = out.running_cov;
    out.running_mean.setZero();
    out.log_scale = log_scale / k;
    out.step_count = 0;
    out.accept_count = 0;
    out.sample_count = 0;
    return out;
  }

  Component average() const {
    const AdaptSettings s;
    Component c;
    auto collect = [&](auto get) {
      std::vector<const BlockAdaptState*> v;
      for (const auto& comp : components) v.push_back(&get(comp));
      return mean_block(v, s);
    };
    for (std::size_t b = 0; b < components.front().beta.size(); ++b) {
      c.beta.push_back(collect([b](const Component& x) -> const BlockAdaptState& { return x.beta[b]; }));
    }
    c.sigma = collect([](const Component& x) -> const BlockAdaptState& { return x.sigma; });
    c.mutau = collect([](const Component& x) -> const BlockAdaptState& { return x.mutau; });
    c.rho = collect([](const Component& x) -> const BlockAdaptState& { return x.rho; });
    c.v = collect([](const Component& x) -> const BlockAdaptState& { return x.v; });
    const bool frozen = components.front().sigma.frozen;
    for (auto& b : c.beta) b.frozen = frozen;
    c.sigma.frozen = c.mutau.frozen = c.rho.frozen = c.v.frozen = frozen;
    return c;
  }
};

inline constexpr int kBetaSplitThreshold = 200;

/// Initial proposal table: beta blocks use the conjugate-posterior shape
/// Sigma_bar (x) (X^T X / J + U^{-1})^{-1}; other blocks use scalar scales
/// matched to about n/J observations per component.
inline AdaptTable make_adapt_table(const Dataset& ds, const Hyperparams& h, int J) {
  const int n = ds.n();
  const int d = h.d();
  const int w = h.width();
  const double per = std::max(1.0, static_cast<double>(n) / std::max(J, 1));
  const Matrix sigma_bar = h.sigma0 / (h.nu - d - 1.0);
  Matrix prec = h.U_inv;
  if (n > 0) prec += ds.X.transpose() * ds.X / std::max(J, 1);
  const Matrix V = prec.llt().solve(Matrix::Identity(w, w));
  const bool split = w * d > kBetaSplitThreshold;

  AdaptTable::Component comp;
  if (split) {
    for (int l = 0; l < d; ++l) comp.beta.emplace_back(Matrix(sigma_bar(l, l) * V));
  } else {
    Matrix kron(w * d, w * d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) kron.block(a * w, b * w, w, w) = sigma_bar(a, b) * V;
    }
    comp.beta.emplace_back(kron);
  }
  comp.sigma = BlockAdaptState(sigma_param_count(d), std::sqrt(2.0 / per));
  const int p = h.p();
  if (p > 0) {
    Matrix c = Matrix::Zero(2 * p, 2 * p);
    for (int k = 0; k < p; ++k) {
      double sd = 1.0;
      if (n > 1) {
        const Vector col = ds.X.col(1 + k);
        const double mean = col.mean();
        sd = std::sqrt((col.array() - mean).square().sum() / (n - 1));
        if (!(sd > 0.0)) sd = 1.0;
      }
      c(k, k) = sd * sd / per;
      c(p + k, p + k) = 2.0 / per;
    }
    comp.mutau = BlockAdaptState(c);
  }
  if (h.r() > 0) comp.rho = BlockAdaptState(h.r(), 2.0 / std::sqrt(per));
  comp.v = BlockAdaptState(1, 2.0 / std::sqrt(per));

  AdaptTable table;
  table.components.assign(J, comp);
  int latent = 0;
  for (const auto& s : ds.links) latent += s.kind != LinkKind::Identity;
  if (latent > 0) table.rows.assign(n, BlockAdaptState(latent, 1.0));
  return table;
}

/// Midpoint-style starting row: finite bounds give the midpoint, semi-infinite
/// ones sit 0.5 inside, unbounded ones start at 0. Identity dims hold z.
inline Vector initial_latent_row(const LinkSet& links, std::span<const double> z, const Vector& x) {
  const int d = static_cast<int>(links.size());
  Vector y = Vector::Zero(d);
  for (int l = 0; l < d; ++l) {
    if (links[l].kind == LinkKind::Identity) {
      y(l) = z[l];
      continue;
    }
    const Interval b = bounds_for(links, l, z, x, std::span<const double>(y.data(), d));
    if (!b.valid()) throw ValidationError("record admits no latent value");
    if (std::isfinite(b.lo) && std::isfinite(b.hi)) {
      y(l) = 0.5 * (b.lo + b.hi);
    } else if (std::isfinite(b.lo)) {
      y(l) = b.lo + 0.5;
    } else if (std::isfinite(b.hi)) {
      y(l) = b.hi - 0.5;
    } else {
      y(l) = 0.0;
    }
  }
  return y;
}

inline Matrix initial_latent(const Dataset& ds) {
  Matrix y(ds.n(), ds.d());
  for (int i = 0; i < ds.n(); ++i) y.row(i) = initial_latent_row(ds.links, ds.z(i), ds.x(i)).transpose();
  return y;
}

inline MixtureState initial_state(const Dataset& ds, const Hyperparams& h, int J, Rng& rng) {
  if (J < 1) throw ValidationError("truncation level must be at least 1");
  MixtureState s;
  s.v.resize(0);
  for (int j = 0; j < J; ++j) append_component(s, sample_base_measure(h, rng));
  s.y = initial_latent(ds);
  return s;
}

/// Running log-sum-exp of one term per component for every row, kept as a
/// shift c_i, scaled terms E_ij = exp(a_ij - c_i), and S_i = sum_j E_ij.
class RowSums {
 public:
  void resize(int n, int J) {
    E_.setZero(n, J);
    c_.setZero(n);
    S_.setZero(n);
  }
  int J() const { return static_cast<int>(E_.cols()); }

  double value(int i) const { return c_(i) + std::log(S_(i)); }

  template <class A>
  void rebuild_row(int i, A&& a) {
    double hi = -kInf;
    for (int j = 0; j < J(); ++j) hi = std::max(hi, a(j));
    if (!std::isfinite(hi)) hi = 0.0;
    c_(i) = hi;
    double s = 0.0;
    for (int j = 0; j < J(); ++j) {
      E_(i, j) = std::exp(a(j) - hi);
      s += E_(i, j);
    }
    S_(i) = s;
  }

  /// Sum after replacing term j by exp(a_new - c_i); false if cancellation or
  /// overflow would cost accuracy and the row must be recomputed exactly.
  bool try_replace(int i, int j, double a_new, double& s_out) const {
    const double e_new = std::exp(a_new - c_(i));
    const double s = S_(i) - E_(i, j) + e_new;
    s_out = s;
    return std::isfinite(s) && s > 1e-4 * S_(i) && e_new < 1e200 && s > 0.0;
  }

  void commit_replace(int i, int j, double a_new, double s_new) {
    E_(i, j) = std::exp(a_new - c_(i));
    S_(i) = s_new;
  }

  /// Sum after scaling term j by f1 and every later term by f2.
  double scaled_sum(int i, int j, double f1, double f2) const {
    double head = 0.0;
    double tail = 0.0;
    for (int k = 0; k < j; ++k) head += E_(i, k);
    for (int k = j + 1; k < J(); ++k) tail += E_(i, k);
    return head + f1 * E_(i, j) + f2 * tail;
  }

  void commit_scale(int i, int j, double f1, double f2, double s_new) {
    E_(i, j) *= f1;
    for (int k = j + 1; k < J(); ++k) E_(i, k) *= f2;
    S_(i) = s_new;
  }

  bool healthy(int i) const { return std::isfinite(S_(i)) && S_(i) > 1e-250 && S_(i) < 1e250; }
  double shift(int i) const { return c_(i); }

 private:
  Matrix E_;
  Vector c_;
  Vector S_;
};

/// Per-block acceptance counters collected between trace rows.
struct AcceptStats {
  long beta_acc = 0, beta_n = 0;
  long sigma_acc = 0, sigma_n = 0;
  long mutau_acc = 0, mutau_n = 0;
  long rho_acc = 0, rho_n = 0;
  long v_acc = 0, v_n = 0;
  long y_acc = 0, y_n = 0;

  static double rate(long a, long n) { return n == 0 ? std::nan("") : static_cast<double>(a) / static_cast<double>(n); }
};

/// Metropolis-within-Gibbs over all blocks of a MixtureState at fixed J.
class GibbsSampler {
 public:
  GibbsSampler(const Dataset& ds, const Hyperparams& h, MixtureState state, AdaptTable table,
               AdaptSettings settings = {})
      : ds_(&ds), h_(&h), s_(std::move(state)), table_(std::move(table)), settings_(settings) {
    if (!h.prepared) throw ValidationError("hyperparameters must be prepared before sampling");
    n_ = ds.n();
    d_ = ds.d();
    if (s_.y.rows() != n_ || s_.y.cols() != d_) throw ValidationError("latent matrix does not match the dataset");
    if (static_cast<int>(table_.components.size()) < s_.J()) table_.extend_to(s_.J());
    transforms_.reserve(n_);
    for (int i = 0; i < n_; ++i) {
      xrows_.push_back(ds.x(i));
    }
    for (int i = 0; i < n_; ++i) transforms_.emplace_back(ds.links, ds.z(i), xrows_[i]);
    rebuild();
  }

  GibbsSampler(const GibbsSampler&) = delete;
  GibbsSampler& operator=(const GibbsSampler&) = delete;

  const MixtureState& state() const { return s_; }
  MixtureState& mutable_state() { return s_; }
  const AdaptTable& adapt_table() const { return table_; }
  AcceptStats& stats() { return stats_; }

  /// Full recomputation of every cache from the state.
  void rebuild() {
    const int J = s_.J();
    logw_ = log_stick_weights(s_.v);
    means_.assign(J, Matrix());
    covs_.clear();
    logn_.resize(n_, J);
    logg_.resize(n_, J);
    for (int j = 0; j < J; ++j) {
      covs_.emplace_back(s_.theta[j].sigma);
      if (!covs_.back().ok) throw NumericError("component covariance is not positive definite");
      means_[j] = ds_->X * s_.theta[j].beta;
      logn_.col(j) = component_logn(s_.y, means_[j], covs_[j]);
      for (int i = 0; i < n_; ++i) logg_(i, j) = log_kernel_g(xrows_[i], s_.psi[j]);
    }
    num_.resize(n_, J);
    den_.resize(n_, J);
    for (int i = 0; i < n_; ++i) rebuild_row(i);
  }

  double row_loglik(int i) const { return num_.value(i) - den_.value(i); }

  double loglik() const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += row_loglik(i);
    return s;
  }

  /// One sweep: per component beta, Sigma, (mu, tau), rho, v; then every latent row.
  void sweep(Rng& rng) {
    rebuild_sums();
    for (int j = 0; j < s_.J(); ++j) {
      update_beta(j, rng);
      update_sigma(j, rng);
      if (h_->p() > 0) update_mutau(j, rng);
      if (h_->r() > 0) update_rho(j, rng);
      update_v(j, rng);
    }
    if (!table_.rows.empty()) {
      for (int i = 0; i < n_; ++i) update_row(i, rng);
    }
  }

 private:
  Vector component_logn(const Matrix& y, const Matrix& mean, const PreparedCovariance& pc) const {
    if (y.rows() == 0) return Vector(0);
    Matrix r = (y - mean).transpose();
    pc.L.triangularView<Eigen::Lower>().solveInPlace(r);
    const double c = -0.5 * (d_ * kLog2Pi + pc.logdet);
    return (c - 0.5 * r.colwise().squaredNorm().array()).transpose();
  }

  double a_num(int i, int j) const { return logw_(j) + logg_(i, j) + logn_(i, j); }
  double a_den(int i, int j) const { return logw_(j) + logg_(i, j); }

  void rebuild_row(int i) {
    num_.rebuild_row(i, [&](int j) { return a_num(i, j); });
    den_.rebuild_row(i, [&](int j) { return a_den(i, j); });
  }

  void rebuild_sums() {
    for (int i = 0; i < n_; ++i) rebuild_row(i);
  }

  /// Candidate change of column j in logn or logg; fills scratch and returns
  /// sum_i [new row loglik - old row loglik].
  double eval_column(int j, const Vector* new_logn, const Vector* new_logg) {
    cand_num_.resize(n_);
    cand_den_.resize(n_);
    cand_exact_.assign(n_, 0);
    double delta = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double ln = new_logn ? (*new_logn)(i) : logn_(i, j);
      const double lg = new_logg ? (*new_logg)(i) : logg_(i, j);
      const double an = logw_(j) + lg + ln;
      double s_num = 0.0;
      double new_num = 0.0;
      if (num_.try_replace(i, j, an, s_num)) {
        new_num = num_.shift(i) + std::log(s_num);
        cand_num_(i) = s_num;
      } else {
        new_num = exact_row(i, j, an, true);
        cand_exact_[i] = 1;
      }
      double new_den = den_.value(i);
      if (new_logg) {
        const double ad = logw_(j) + lg;
        double s_den = 0.0;
        if (den_.try_replace(i, j, ad, s_den)) {
          new_den = den_.shift(i) + std::log(s_den);
          cand_den_(i) = s_den;
        } else {
          new_den = exact_row(i, j, ad, false);
          cand_exact_[i] = 1;
        }
      }
      delta += (new_num - num_.value(i)) - (new_den - den_.value(i));
    }
    return delta;
  }

  /// Exact log-sum-exp of row i with term j replaced.
  double exact_row(int i, int j, double a_new, bool num) const {
    double hi = a_new;
    for (int k = 0; k < s_.J(); ++k) {
      if (k != j) hi = std::max(hi, num ? a_num(i, k) : a_den(i, k));
    }
    if (!std::isfinite(hi)) return hi;
    double s = 0.0;
    for (int k = 0; k < s_.J(); ++k) s += std::exp((k == j ? a_new : (num ? a_num(i, k) : a_den(i, k))) - hi);
    return hi + std::log(s);
  }

  void commit_column(int j, const Vector* new_logn, const Vector* new_logg) {
    if (new_logn) logn_.col(j) = *new_logn;
    if (new_logg) logg_.col(j) = *new_logg;
    for (int i = 0; i < n_; ++i) {
      if (cand_exact_[i]) {
        rebuild_row(i);
        continue;
      }
      num_.commit_replace(i, j, a_num(i, j), cand_num_(i));
      if (new_logg) den_.commit_replace(i, j, a_den(i, j), cand_den_(i));
    }
  }

  void update_beta(int j, Rng& rng) {
    auto& blocks = table_.components[j].beta;
    const int w = h_->width();
    const bool split = blocks.size() > 1;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      Matrix& beta = s_.theta[j].beta;
      Vector t = split ? Vector(beta.col(static_cast<Eigen::Index>(b)))
                       : Vector(Eigen::Map<const Vector>(beta.data(), beta.size()));
      TargetEval cur{log_matrix_normal(beta, *h_, covs_[j]), 0.0};
      const double prior_cur = cur.log_q;
      Matrix cand_beta;
      Matrix cand_mean;
      Vector cand_logn;
      auto eval = [&](const Vector& tt) {
        cand_beta = beta;
        if (split) {
          cand_beta.col(static_cast<Eigen::Index>(b)) = tt;
        } else {
          cand_beta = Eigen::Map<const Matrix>(tt.data(), w, d_);
        }
        cand_mean = ds_->X * cand_beta;
        cand_logn = component_logn(s_.y, cand_mean, covs_[j]);
        const double delta = eval_column(j, &cand_logn, nullptr);
        return TargetEval{log_matrix_normal(cand_beta, *h_, covs_[j]) + delta, 0.0};
      };
      cur.log_q = prior_cur;
      const bool acc = propose_and_accept(t, cur, blocks[b], settings_, eval, rng);
      ++stats_.beta_n;
      if (acc) {
        ++stats_.beta_acc;
        beta = cand_beta;
        means_[j] = cand_mean;
        commit_column(j, &cand_logn, nullptr);
      }
    }
  }

  void update_sigma(int j, Rng& rng) {
    Vector t = sigma_to_t(s_.theta[j].sigma);
    const Vector D = t.head(d_).array().exp();
    TargetEval cur{log_prior_theta(s_.theta[j], *h_), log_abs_jacobian_sigma(D)};
    Matrix cand_sigma;
    Vector cand_logn;
    std::unique_ptr<PreparedCovariance> cand_pc;
    auto eval = [&](const Vector& tt) {
      cand_sigma = t_to_sigma(tt, d_);
      cand_pc = std::make_unique<PreparedCovariance>(cand_sigma);
      const Vector Dn = tt.head(d_).array().exp();
      if (!cand_pc->ok || !(Dn.array() > 0.0).all() || !Dn.allFinite()) return TargetEval{};
      cand_logn = component_logn(s_.y, means_[j], *cand_pc);
      const double delta = eval_column(j, &cand_logn, nullptr);
      const double prior = log_matrix_normal(s_.theta[j].beta, *h_, *cand_pc) + log_inverse_wishart(*h_, *cand_pc);
      return TargetEval{prior + delta, log_abs_jacobian_sigma(Dn)};
    };
    const bool acc = propose_and_accept(t, cur, table_.components[j].sigma, settings_, eval, rng);
    ++stats_.sigma_n;
    if (acc) {
      ++stats_.sigma_acc;
      s_.theta[j].sigma = cand_sigma;
      covs_[j] = *cand_pc;
      commit_column(j, &cand_logn, nullptr);
    }
  }

  void update_mutau(int j, Rng& rng) {
    const int p = h_->p();
    auto& psi = s_.psi[j];
    Vector t(2 * p);
    t.head(p) = psi.mu;
    t.tail(p) = psi.tau.array().log();
    TargetEval cur{log_prior_mutau(psi, *h_), -psi.tau.array().log().sum()};
    WeightKernelParams cand = psi;
    Vector cand_logg(n_);
    auto eval = [&](const Vector& tt) {
      cand.mu = tt.head(p);
      cand.tau = tt.tail(p).array().exp();
      if (!(cand.tau.array() > 0.0).all() || !cand.tau.allFinite()) return TargetEval{};
      for (int i = 0; i < n_; ++i) cand_logg(i) = log_kernel_g(xrows_[i], cand);
      const double delta = eval_column(j, nullptr, &cand_logg);
      return TargetEval{log_prior_mutau(cand, *h_) + delta, -cand.tau.array().log().sum()};
    };
    const bool acc = propose_and_accept(t, cur, table_.components[j].mutau, settings_, eval, rng);
    ++stats_.mutau_n;
    if (acc) {
      ++stats_.mutau_acc;
      psi = cand;
      commit_column(j, nullptr, &cand_logg);
    }
  }

  void update_rho(int j, Rng& rng) {
    auto& psi = s_.psi[j];
    Vector t = psi.rho.unaryExpr([](double r) { return logit(r); });
    auto log_jac = [](const Vector& rho) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < rho.size(); ++k) s -= std::log(rho(k)) + std::log1p(-rho(k));
      return s;
    };
    TargetEval cur{log_prior_rho(psi, *h_), log_jac(psi.rho)};
    WeightKernelParams cand = psi;
    Vector cand_logg(n_);
    auto eval = [&](const Vector& tt) {
      cand.rho = tt.unaryExpr([](double a) { return inv_logit(a); });
      if (!((cand.rho.array() > 0.0) && (cand.rho.array() < 1.0)).all()) return TargetEval{};
      for (int i = 0; i < n_; ++i) cand_logg(i) = log_kernel_g(xrows_[i], cand);
      const double delta = eval_column(j, nullptr, &cand_logg);
      return TargetEval{log_prior_rho(cand, *h_) + delta, log_jac(cand.rho)};
    };
    const bool acc = propose_and_accept(t, cur, table_.components[j].rho, settings_, eval, rng);
    ++stats_.rho_n;
    if (acc) {
      ++stats_.rho_acc;
      psi = cand;
      commit_column(j, nullptr, &cand_logg);
    }
  }

  void update_v(int j, Rng& rng) {
    const double v = s_.v(j);
    Vector t(1);
    t(0) = logit(v);
    auto log_jac = [](double x) { return -(std::log(x) + std::log1p(-x)); };
    TargetEval cur{log_prior_stick(v, *h_), log_jac(v)};
    double cand_v = v;
    double f1 = 1.0;
    double f2 = 1.0;
    cand_num_.resize(n_);
    cand_den_.resize(n_);
    auto eval = [&](const Vector& tt) {
      cand_v = inv_logit(tt(0));
      if (!(cand_v > 0.0 && cand_v < 1.0)) return TargetEval{};
      const double d1 = std::log(cand_v) - std::log(v);
      const double d2 = std::log1p(-cand_v) - std::log1p(-v);
      f1 = std::exp(d1);
      f2 = std::exp(d2);
      double delta = 0.0;
      for (int i = 0; i < n_; ++i) {
        cand_num_(i) = num_.scaled_sum(i, j, f1, f2);
        cand_den_(i) = den_.scaled_sum(i, j, f1, f2);
        const double old_num = num_.value(i) - num_.shift(i);
        const double old_den = den_.value(i) - den_.shift(i);
        delta += (std::log(cand_num_(i)) - old_num) - (std::log(cand_den_(i)) - old_den);
      }
      if (!std::isfinite(delta)) return TargetEval{};
      return TargetEval{log_prior_stick(cand_v, *h_) + delta, log_jac(cand_v)};
    };
    const bool acc = propose_and_accept(t, cur, table_.components[j].v, settings_, eval, rng);
    ++stats_.v_n;
    if (acc) {
      ++stats_.v_acc;
      s_.v(j) = cand_v;
      logw_ = log_stick_weights(s_.v);
      for (int i = 0; i < n_; ++i) {
        num_.commit_scale(i, j, f1, f2, cand_num_(i));
        den_.commit_scale(i, j, f1, f2, cand_den_(i));
        if (!num_.healthy(i) || !den_.healthy(i)) rebuild_row(i);
      }
    }
  }

  void update_row(int i, Rng& rng) {
    const RowTransform& tr = transforms_[i];
    Vector y = s_.y.row(i).transpose();
    Vector t = tr.forward(y);
    TargetEval cur{num_.value(i), tr.log_abs_jacobian(y)};
    Vector cand_y = y;
    Vector cand_logn(s_.J());
    auto eval = [&](const Vector& tt) {
      cand_y = y;
      if (!tr.inverse(tt, cand_y)) return TargetEval{};
      double hi = -kInf;
      for (int j = 0; j < s_.J(); ++j) {
        cand_logn(j) = covs_[j].logpdf(cand_y, means_[j].row(i).transpose());
        hi = std::max(hi, logw_(j) + logg_(i, j) + cand_logn(j));
      }
      if (!std::isfinite(hi)) return TargetEval{};
      double s = 0.0;
      for (int j = 0; j < s_.J(); ++j) s += std::exp(logw_(j) + logg_(i, j) + cand_logn(j) - hi);
      return TargetEval{hi + std::log(s), tr.log_abs_jacobian(cand_y)};
    };
    const bool acc = propose_and_accept(t, cur, table_.rows[i], settings_, eval, rng);
    ++stats_.y_n;
    if (acc) {
      ++stats_.y_acc;
      s_.y.row(i) = cand_y.transpose();
      logn_.row(i) = cand_logn.transpose();
      num_.rebuild_row(i, [&](int j) { return a_num(i, j); });
    }
  }

  const Dataset* ds_;
  const Hyperparams* h_;
  MixtureState s_;
  AdaptTable table_;
  AdaptSettings settings_;
  int n_ = 0;
  int d_ = 0;
  std::vector<Vector> xrows_;
  std::vector<RowTransform> transforms_;

  Vector logw_;
  std::vector<Matrix> means_;
  std::vector<PreparedCovariance> covs_;
  Matrix logn_;
  Matrix logg_;
  RowSums num_;
  RowSums den_;

  Vector cand_num_;
  Vector cand_den_;
  std::vector<char> cand_exact_;
  AcceptStats stats_;
};

}  // namespace densreg

#endif  // DENSREG_GIBBS_HPP
