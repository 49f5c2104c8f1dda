#ifndef DENSREG_SMC_HPP
#define DENSREG_SMC_HPP

#include "densreg/gibbs.hpp"
#include "densreg/mcmc.hpp"
#include "densreg/parallel.hpp"
#include "densreg/particles.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

namespace densreg {

enum class StopKind { ESS, CESS };

struct StopRule {
  StopKind kind = StopKind::ESS;
  double delta = -1.0;  ///< negative means 0.01 * M
  int I = 4;
  int m_star = 3;
  double ess_resample_threshold = 0.5;
  int max_extra_components = 100;
  double max_dead_fraction = 0.1;
};

namespace detail {

/// log_w - max(log_w); exact under a common shift whenever the shift is exact.
inline Vector centered_log_weights(const Vector& log_w, const char* what) {
  const double top = log_w.size() > 0 ? log_w.maxCoeff() : -kInf;
  if (!std::isfinite(top)) throw NumericError(what);
  return log_w.array() - top;
}

}  // namespace detail

/// Effective sample size (sum w)^2 / sum w^2 from unnormalized log weights.
inline double ess(const Vector& log_w) {
  const Vector c = detail::centered_log_weights(log_w, "effective sample size of an all-zero weight vector");
  const Vector twice = 2.0 * c;
  return std::exp(2.0 * log_sum_exp(c) - log_sum_exp(twice));
}

/// Conditional ESS of an increment: M (sum W r)^2 / sum W r^2, with W the
/// previous normalized weights and r the incremental ratios (given in log space).
inline double cess(const Vector& log_w_prev, const Vector& log_incr) {
  const Vector prev = detail::centered_log_weights(log_w_prev, "conditional ESS of an all-zero weight vector");
  const double norm = log_sum_exp(prev);
  const Eigen::Index M = log_w_prev.size();
  Vector a(M);
  Vector b(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const double lw = prev(m) - norm;
    const double r = log_incr(m);
    const bool dead = lw == -kInf || r == -kInf || std::isnan(r);
    a(m) = dead ? -kInf : lw + r;
    b(m) = dead ? -kInf : lw + 2.0 * r;
  }
  const double la = log_sum_exp(a);
  if (!std::isfinite(la)) throw NumericError("conditional ESS with no surviving particle");
  return static_cast<double>(M) * std::exp(2.0 * la - log_sum_exp(b));
}

/// Ancestor indices from one uniform jitter on a 1/M grid.
inline std::vector<int> systematic_resample_indices(const Vector& weights, double u) {
  const int M = static_cast<int>(weights.size());
  const double total = weights.sum();
  std::vector<int> idx(M);
  double cum = weights(0) / total;
  int k = 0;
  for (int m = 0; m < M; ++m) {
    const double pos = (u + m) / M;
    while (pos > cum && k < M - 1) {
      ++k;
      cum += weights(k) / total;
    }
    idx[m] = k;
  }
  return idx;
}

inline ParticleSet systematic_resample(const ParticleSet& ps, Rng& rng) {
  const std::vector<int> idx = systematic_resample_indices(ps.normalized_weights(), rng.uniform());
  ParticleSet out;
  out.particles.reserve(idx.size());
  for (int a : idx) out.particles.push_back(ps.particles[a]);
  out.log_weights = Vector::Zero(ps.M());
  out.seeds = ps.seeds;
  return out;
}

/// sum_i log f^J(y_i | x_i) for one state, computed from scratch.
inline double latent_loglik(const MixtureState& s, const Dataset& ds) {
  const int n = ds.n();
  const int J = s.J();
  const Vector logw = log_stick_weights(s.v);
  Matrix num(n, J);
  Matrix den(n, J);
  for (int j = 0; j < J; ++j) {
    PreparedCovariance pc(s.theta[j].sigma);
    if (!pc.ok) return std::nan("");
    Matrix r = (s.y - ds.X * s.theta[j].beta).transpose();
    pc.L.triangularView<Eigen::Lower>().solveInPlace(r);
    const double c = -0.5 * (ds.d() * kLog2Pi + pc.logdet);
    for (int i = 0; i < n; ++i) {
      const double lg = logw(j) + log_kernel_g(ds.X.row(i).transpose(), s.psi[j]);
      den(i, j) = lg;
      num(i, j) = lg + c - 0.5 * r.col(i).squaredNorm();
    }
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector a = num.row(i).transpose();
    const Vector b = den.row(i).transpose();
    total += log_sum_exp(a) - log_sum_exp(b);
  }
  return total;
}

/// Appends one prior draw to every particle.
inline void extend_truncation(ParticleSet& ps, const Hyperparams& h, std::uint64_t seed, int increment,
                              int threads = 1) {
  parallel_for(ps.M(), threads, [&](std::size_t m) {
    Rng rng(stream_seed(seed, {kStreamSmc, static_cast<std::uint64_t>(increment), m, 1}));
    append_component(ps.particles[m], sample_base_measure(h, rng));
  });
}

/// m_star sweeps per particle with a frozen proposal table; weights untouched.
inline void rejuvenate(ParticleSet& ps, const Dataset& ds, const Hyperparams& h, const AdaptTable& frozen,
                       int m_star, std::uint64_t seed, int increment, int threads = 1,
                       const AdaptSettings& settings = {}) {
  if (m_star <= 0) return;
  parallel_for(ps.M(), threads, [&](std::size_t m) {
    Rng rng(stream_seed(seed, {kStreamSmc, static_cast<std::uint64_t>(increment), m, 2}));
    GibbsSampler g(ds, h, std::move(ps.particles[m]), frozen, settings);
    for (int k = 0; k < m_star; ++k) g.sweep(rng);
    ps.particles[m] = g.state();
  });
}

struct SmcLogRow {
  int J = 0;
  double ess_before = 0.0;
  double ess_after = 0.0;
  double cess = 0.0;
  double discrepancy = 0.0;
  bool resampled = false;
  int dead = 0;
  double seconds = 0.0;
};

struct SmcResult {
  ParticleSet particles;
  int J_star = 0;
  bool capped = false;
  std::vector<SmcLogRow> log;
};

inline void write_smc_log_csv(std::ostream& out, const std::vector<SmcLogRow>& log) {
  out << "J,ess_before,ess_after,cess,discrepancy,resampled,dead,seconds\n";
  out.precision(10);
  for (const auto& r : log) {
    out << r.J << ',' << r.ess_before << ',' << r.ess_after << ',' << r.cess << ',' << r.discrepancy << ','
        << (r.resampled ? 1 : 0) << ',' << r.dead << ',' << r.seconds << '\n';
  }
}

/// Grows J one component at a time until the discrepancy stays below delta for I
/// consecutive increments. The ESS rule uses |ESS_J - ESS_{J+1}|, the CESS rule
/// M - CESS_{J -> J+1}; both are taken before any resampling.
inline SmcResult adaptive_truncation_run(ParticleSet ps, const Dataset& ds, const Hyperparams& h,
                                         AdaptTable table, const StopRule& rule, std::uint64_t seed,
                                         int threads = 1, const AdaptSettings& settings = {}) {
  const int M = ps.M();
  if (M == 0) throw ValidationError("empty particle set");
  if (rule.I < 1) throw ValidationError("stop rule needs I >= 1");
  const double delta = rule.delta < 0.0 ? 0.01 * M : rule.delta;
  if (!(delta > 0.0)) throw ValidationError("stop rule needs delta > 0");
  const int J0 = ps.J();
  table.freeze();

  std::vector<double> ll(M);
  parallel_for(M, threads, [&](std::size_t m) { ll[m] = latent_loglik(ps.particles[m], ds); });

  SmcResult res;
  int streak = 0;
  int increment = 0;
  while (streak < rule.I) {
    if (ps.J() >= J0 + rule.max_extra_components) {
      res.capped = true;
      break;
    }
    ++increment;
    const auto t0 = std::chrono::steady_clock::now();
    extend_truncation(ps, h, seed, increment, threads);
    std::vector<double> ll_new(M);
    parallel_for(M, threads, [&](std::size_t m) { ll_new[m] = latent_loglik(ps.particles[m], ds); });

    Vector incr(M);
    for (int m = 0; m < M; ++m) {
      const double r = ll_new[m] - ll[m];
      incr(m) = std::isfinite(r) ? r : -kInf;
    }
    SmcLogRow row;
    row.J = ps.J();
    row.ess_before = ess(ps.log_weights);
    row.cess = cess(ps.log_weights, incr);
    Vector updated = ps.log_weights + incr;
    for (int m = 0; m < M; ++m) {
      if (std::isnan(updated(m))) updated(m) = -kInf;
      if (updated(m) == -kInf) ++row.dead;
    }
    if (row.dead > rule.max_dead_fraction * M) {
      throw NumericError("more than " + std::to_string(static_cast<int>(rule.max_dead_fraction * 100)) +
                         "% of particles have zero weight at J = " + std::to_string(ps.J()));
    }
    ps.log_weights = updated;
    // Keep the weights centred so long runs never overflow.
    const double shift = ps.log_weights.maxCoeff();
    ps.log_weights.array() -= shift;
    row.ess_after = ess(ps.log_weights);
    row.discrepancy = rule.kind == StopKind::ESS ? std::abs(row.ess_before - row.ess_after) : M - row.cess;
    ll = ll_new;

    if (row.ess_after < rule.ess_resample_threshold * M) {
      Rng rng(stream_seed(seed, {kStreamSmc, static_cast<std::uint64_t>(increment), 0xFFFF}));
      ps = systematic_resample(ps, rng);
      table.extend_to(ps.J());
      rejuvenate(ps, ds, h, table, rule.m_star, seed, increment, threads, settings);
      parallel_for(M, threads, [&](std::size_t m) { ll[m] = latent_loglik(ps.particles[m], ds); });
      row.resampled = true;
    }
    for (int m = 0; m < M; ++m) {
      ps.seeds[m] = stream_seed(seed, {kStreamSmc, static_cast<std::uint64_t>(increment), static_cast<std::uint64_t>(m)});
    }
    streak = row.discrepancy < delta ? streak + 1 : 0;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back(row);
  }
  res.J_star = ps.J();
  res.particles = std::move(ps);
  return res;
}

}  // namespace densreg

#endif  // DENSREG_SMC_HPP
