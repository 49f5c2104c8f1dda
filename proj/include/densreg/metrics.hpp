#ifndef DENSREG_METRICS_HPP
#define DENSREG_METRICS_HPP

#include "densreg/data.hpp"
#include "densreg/links.hpp"
#include "densreg/model.hpp"
#include "densreg/numeric.hpp"
#include "densreg/parallel.hpp"
#include "densreg/particles.hpp"
#include "densreg/predict.hpp"
#include "densreg/rng.hpp"
#include "densreg/simgen.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace densreg {

// ---------------------------------------------------------------------------
// LPML

namespace detail {

/// P(y_c in bounds(y_b)) integrated over y_b for a sum-constrained response
/// under one Gaussian component. Gauss-Legendre on the y_b probability scale.
inline double sum_constrained_mass(const Vector& mean, const Matrix& sigma, const LinkSpec& s, int l, double z,
                                   double horizon) {
  const int b = s.base_dim;
  const double sb = std::sqrt(sigma(b, b));
  auto integrand = [&](double u) {
    const double yb = mean(b) + sb * normal_quantile(u);
    const GaussianConditional g = condition_gaussian(mean, sigma, l, {b}, Vector::Constant(1, yb));
    const double sd = std::sqrt(g.var);
    const double e1 = std::exp(yb);
    double lo = -kInf;
    double hi = kInf;
    if (z == 0.0 && std::isfinite(horizon)) {
      const double gap = horizon - e1;
      lo = gap > 0.0 ? std::log(gap) : -kInf;
    } else {
      const double gap = z - e1;
      if (!(gap + 1.0 > 0.0)) return 0.0;
      lo = gap > 0.0 ? std::log(gap) : -kInf;
      hi = std::log(gap + 1.0);
    }
    return normal_interval_prob((lo - g.mean) / sd, (hi - g.mean) / sd);
  };
  return boost::math::quadrature::gauss<double, 30>::integrate(integrand, 0.0, 1.0);
}

}  // namespace detail

/// Marginal probability of the observed z_{i,l} under one particle (mass of the
/// discretization interval, the censored tail, or the binary outcome).
inline double observation_probability(const MixtureState& s, const Dataset& ds, int i, int l) {
  const Vector x = ds.x(i);
  const auto z = ds.z(i);
  const LinkSpec& spec = ds.links[l];
  const Vector w = covariate_weights(s, x);
  double f = 0.0;
  for (int j = 0; j < s.J(); ++j) {
    const Vector mean = s.theta[j].beta.transpose() * x;
    const Matrix& sigma = s.theta[j].sigma;
    const double sd = std::sqrt(sigma(l, l));
    double p = 0.0;
    switch (spec.kind) {
      case LinkKind::Identity:
        p = std::exp(normal_logpdf(z[l], mean(l), sigma(l, l)));
        break;
      case LinkKind::SumConstrainedFloorExp:
        p = detail::sum_constrained_mass(mean, sigma, spec, l, z[l], censor_horizon(x, spec.censor_covariate));
        break;
      default: {
        const std::vector<double> none(ds.d(), 0.0);
        const Interval b = bounds_for(ds.links, l, z, x, none);
        p = normal_interval_prob((b.lo - mean(l)) / sd, (b.hi - mean(l)) / sd);
      }
    }
    f += w(j) * p;
  }
  return f;
}

struct LpmlResult {
  double lpml = 0.0;
  std::vector<double> log_cpo;
  int zero_cpo = 0;  ///< observations with CPO = 0
};

/// Sum of log CPO_i, CPO_i = (sum_m W_m / f_im)^{-1}.
inline LpmlResult lpml(const ParticleSet& ps, const Dataset& ds, int l, int threads = 1) {
  const Vector W = ps.normalized_weights();
  LpmlResult r;
  r.log_cpo.assign(ds.n(), 0.0);
  parallel_for(ds.n(), threads, [&](std::size_t i) {
    std::vector<double> terms;
    terms.reserve(ps.M());
    for (int m = 0; m < ps.M(); ++m) {
      if (W(m) == 0.0) continue;
      const double f = observation_probability(ps.particles[m], ds, static_cast<int>(i), l);
      terms.push_back(std::log(W(m)) - std::log(f));
    }
    r.log_cpo[i] = -log_sum_exp(terms);
  });
  for (double v : r.log_cpo) {
    if (v == -kInf || std::isnan(v)) ++r.zero_cpo;
    r.lpml += v;
  }
  if (r.zero_cpo > 0) r.lpml = -kInf;
  return r;
}

// ---------------------------------------------------------------------------
// Error metrics against the simulation truth

/// Test covariate point: model row plus the undiscretized value used by the truth.
struct TestPoint {
  Vector x;
  double x_tilde = 0.0;
  std::vector<int> categories;
};

/// Full factorial over categorical levels x n_x equally spaced x_1 values on [lo, hi];
/// the truth is evaluated at x~_1 = x_1 + 0.5, the middle of the discretization cell.
inline std::vector<TestPoint> simulation_test_points(int n_x = 31, double lo = 15.0, double hi = 29.0) {
  const CovariateSchema schema = simulation_schema();
  std::vector<TestPoint> out;
  for (int c2 = 1; c2 <= schema.categorical_levels[0]; ++c2) {
    for (int c3 = 1; c3 <= schema.categorical_levels[1]; ++c3) {
      for (int k = 0; k < n_x; ++k) {
        const double x1 = lo + (hi - lo) * k / (n_x - 1);
        TestPoint tp;
        tp.x = expand_dummies({{x1}, {c2, c3}}, schema);
        tp.x_tilde = x1 + 0.5;
        tp.categories = {c2, c3};
        out.push_back(std::move(tp));
      }
    }
  }
  return out;
}

inline double sim_truth_mean(const TestPoint& tp, int l) {
  return sim_true_mean(tp.x_tilde, tp.categories[0], tp.categories[1], l);
}

struct ErrResult {
  double value = 0.0;
  int excluded = 0;  ///< points with zero true mean
};

/// (100 / n*) sum |mu_t - mu_hat| / |mu_t|.
inline ErrResult err_mean(const std::vector<double>& truth, const std::vector<double>& estimate) {
  ErrResult r;
  double s = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] == 0.0) {
      ++r.excluded;
      continue;
    }
    s += std::abs(truth[k] - estimate[k]) / std::abs(truth[k]);
    ++used;
  }
  r.value = used > 0 ? 100.0 * s / used : std::numeric_limits<double>::quiet_NaN();
  return r;
}

inline ErrResult err_mean(const ParticleSet& ps, const std::vector<TestPoint>& points, int l, bool binary,
                          const std::function<double(const TestPoint&)>& truth, int threads = 1) {
  std::vector<double> t(points.size());
  std::vector<double> e(points.size());
  parallel_for(points.size(), threads, [&](std::size_t k) {
    t[k] = truth(points[k]);
    e[k] = predictive_mean(predictive_mixture(ps, points[k].x), l, binary);
  });
  return err_mean(t, e);
}

/// Riemann sum sum_g |f_t - f_hat| * delta for one point.
inline double l1_riemann(const std::vector<double>& truth, const std::vector<double>& estimate, double delta) {
  double s = 0.0;
  for (std::size_t g = 0; g < truth.size(); ++g) s += std::abs(truth[g] - estimate[g]) * delta;
  return s;
}

/// Evaluation grid for density errors of event response l: uniform over +-6 of the true mean.
inline PredictGrid simulation_density_grid(const TestPoint& tp, int l, int n = 241) {
  const double m = sim_truth_mean(tp, l);
  return PredictGrid::linear(std::max(1e-3, m - 6.0), m + 6.0, n);
}

/// (100 / n*) sum_i sum_g |f_t - f_hat| delta. Binary responses use the counting
/// measure over {0, 1}.
inline double err_dens_simulation(const ParticleSet& ps, const std::vector<TestPoint>& points, int l, bool binary,
                                  int threads = 1) {
  std::vector<double> per(points.size());
  parallel_for(points.size(), threads, [&](std::size_t k) {
    const TestPoint& tp = points[k];
    const PredictiveMixture mix = predictive_mixture(ps, tp.x);
    if (binary) {
      const double pt = sim_truth_mean(tp, l);
      const double ph = prob_success_marginal(mix, l);
      per[k] = 2.0 * std::abs(pt - ph);
      return;
    }
    const PredictGrid grid = simulation_density_grid(tp, l);
    std::vector<double> ft(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      ft[g] = sim_true_density(grid.points[g], tp.x_tilde, tp.categories[0], tp.categories[1], l);
    }
    per[k] = l1_riemann(ft, marginal_density(mix, l, grid), grid.delta);
  });
  double s = 0.0;
  for (double v : per) s += v;
  return 100.0 * s / static_cast<double>(points.size());
}

// ---------------------------------------------------------------------------
// Replication and Kaplan-Meier

using ResponseMatrix = std::vector<std::vector<double>>;  ///< [i][l]

/// Replicated responses at the observed covariates for one particle.
inline ResponseMatrix replicate_particle(const MixtureState& s, const Dataset& ds, Rng& rng) {
  ResponseMatrix out(ds.n(), std::vector<double>(ds.d()));
  std::vector<Matrix> chol(s.J());
  for (int j = 0; j < s.J(); ++j) {
    PreparedCovariance pc(s.theta[j].sigma);
    if (!pc.ok) throw NumericError("component covariance is not positive definite");
    chol[j] = pc.L;
  }
  const Vector logw = log_stick_weights(s.v);
  Vector e(ds.d());
  for (int i = 0; i < ds.n(); ++i) {
    const Vector x = ds.x(i);
    const Vector w = log_covariate_weights(logw, s.psi, x).array().exp();
    const int j = static_cast<int>(rng.categorical(std::span<const double>(w.data(), w.size())));
    for (int l = 0; l < ds.d(); ++l) e(l) = rng.normal();
    const Vector y = s.theta[j].beta.transpose() * x + chol[j] * e;
    const std::span<const double> ys(y.data(), y.size());
    for (int l = 0; l < ds.d(); ++l) out[i][l] = apply_link(ds.links, l, ys, x);
  }
  return out;
}

/// One replicated response set per particle; particle m uses its own stream.
inline std::vector<ResponseMatrix> replicate(const ParticleSet& ps, const Dataset& ds, std::uint64_t seed,
                                             int threads = 1) {
  std::vector<ResponseMatrix> out(ps.M());
  parallel_for(ps.M(), threads, [&](std::size_t m) {
    Rng rng(stream_seed(seed, {kStreamReplicate, static_cast<std::uint64_t>(m)}));
    out[m] = replicate_particle(ps.particles[m], ds, rng);
  });
  return out;
}

struct KmStep {
  double time = 0.0;
  double survival = 1.0;
  int at_risk = 0;
  int events = 0;
};

/// Product-limit estimator. At tied times events are removed before censorings.
inline std::vector<KmStep> kaplan_meier(const std::vector<double>& times, const std::vector<bool>& event) {
  if (times.empty()) throw ValidationError("Kaplan-Meier needs at least one record");
  if (times.size() != event.size()) throw ValidationError("times and event flags differ in length");
  std::map<double, std::pair<int, int>> table;  // time -> (events, censored)
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto& t = table[times[i]];
    (event[i] ? t.first : t.second) += 1;
  }
  int at_risk = static_cast<int>(times.size());
  double S = 1.0;
  std::vector<KmStep> out;
  for (const auto& [t, ec] : table) {
    if (ec.first > 0) {
      S *= 1.0 - static_cast<double>(ec.first) / at_risk;
      out.push_back({t, S, at_risk, ec.first});
    }
    at_risk -= ec.first + ec.second;
  }
  return out;
}

/// S(t) from a step list (right-continuous).
inline double km_survival_at(const std::vector<KmStep>& steps, double t) {
  double S = 1.0;
  for (const auto& s : steps) {
    if (s.time > t) break;
    S = s.survival;
  }
  return S;
}

/// Event times and flags of response l: events at z, censorings at the censoring covariate.
inline void km_inputs(const Dataset& ds, const ResponseMatrix& z, int l, std::vector<double>& times,
                      std::vector<bool>& event) {
  times.clear();
  event.clear();
  const int c = ds.links[l].censor_covariate;
  for (int i = 0; i < ds.n(); ++i) {
    const bool ev = z[i][l] != 0.0 || c < 1;
    times.push_back(ev ? z[i][l] : ds.X(i, c));
    event.push_back(ev);
  }
}

inline ResponseMatrix observed_responses(const Dataset& ds) {
  ResponseMatrix z(ds.n());
  for (int i = 0; i < ds.n(); ++i) z[i] = ds.Z[i].z;
  return z;
}

// ---------------------------------------------------------------------------
// Posterior predictive p-values

enum class DiscrepancyKind { Cens, Noncens, Binary };

struct Discrepancy {
  DiscrepancyKind kind = DiscrepancyKind::Binary;
  int l = 0;

  std::string name() const {
    const std::string idx = std::to_string(l + 1);
    switch (kind) {
      case DiscrepancyKind::Cens:
        return "T_cens(z" + idx + ")";
      case DiscrepancyKind::Noncens:
        return "T_noncens(z" + idx + ")";
      case DiscrepancyKind::Binary:
        return "T(z" + idx + ")";
    }
    return {};
  }
};

namespace detail {

/// Median of a one-particle log-normal mixture by bisection on the exact CDF.
inline double mixture_median(const PredictiveMixture& mix, int l) {
  double lo = kInf;
  double hi = -kInf;
  for (const auto& c : mix.comps) {
    lo = std::min(lo, c.mean(l) - 10.0 * c.sd(l));
    hi = std::max(hi, c.mean(l) + 10.0 * c.sd(l));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    double F = 0.0;
    for (const auto& c : mix.comps) F += c.weight * normal_cdf((mid - c.mean(l)) / c.sd(l));
    (F < 0.5 ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

/// Per-particle predictive summaries at each distinct covariate row.
struct ParticleSummaries {
  std::vector<int> row_of;  ///< observation -> distinct row
  std::vector<double> value;
};

inline std::vector<int> distinct_rows(const Dataset& ds, std::vector<Vector>& rows) {
  std::map<std::vector<double>, int> seen;
  std::vector<int> row_of(ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    std::vector<double> key(ds.X.cols());
    for (Eigen::Index c = 0; c < ds.X.cols(); ++c) key[c] = ds.X(i, c);
    auto [it, inserted] = seen.emplace(key, static_cast<int>(rows.size()));
    if (inserted) rows.push_back(ds.x(i));
    row_of[i] = it->second;
  }
  return row_of;
}

inline double discrepancy_value(const Discrepancy& t, const Dataset& ds, const ResponseMatrix& z,
                                const std::vector<int>& row_of, const std::vector<double>& summary) {
  double s = 0.0;
  int count = 0;
  for (int i = 0; i < ds.n(); ++i) {
    const double v = summary[row_of[i]];
    const double zi = z[i][t.l];
    switch (t.kind) {
      case DiscrepancyKind::Cens:
        s += std::abs((zi == 0.0 ? 1.0 : 0.0) - v);
        ++count;
        break;
      case DiscrepancyKind::Noncens:
        if (zi == 0.0) break;
        s += std::abs(zi - v);
        ++count;
        break;
      case DiscrepancyKind::Binary:
        s += std::abs(zi - v);
        ++count;
        break;
    }
  }
  return count > 0 ? s / count : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

struct PValueResult {
  double p = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

/// Weighted fraction of particles with T(z_rep^m; xi^m) >= T(z; xi^m). The
/// replicates must come from `replicate` on the same particle set.
inline PValueResult posterior_predictive_pvalue(const ParticleSet& ps, const Dataset& ds,
                                                const std::vector<ResponseMatrix>& reps, const Discrepancy& t,
                                                int threads = 1) {
  std::vector<Vector> rows;
  const std::vector<int> row_of = detail::distinct_rows(ds, rows);
  const ResponseMatrix obs = observed_responses(ds);
  const Vector W = ps.normalized_weights();
  std::vector<int> hit(ps.M(), 0);
  std::vector<int> undefined(ps.M(), 0);
  const int cov = ds.links[t.l].censor_covariate;
  parallel_for(ps.M(), threads, [&](std::size_t m) {
    if (W(m) == 0.0) return;
    std::vector<double> summary(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const PredictiveMixture mix = particle_mixture(ps.particles[m], rows[r], static_cast<int>(m));
      switch (t.kind) {
        case DiscrepancyKind::Cens:
          summary[r] = censoring_probability(mix, t.l, cov);
          break;
        case DiscrepancyKind::Noncens:
          summary[r] = detail::mixture_median(mix, t.l);
          break;
        case DiscrepancyKind::Binary:
          summary[r] = prob_success_marginal(mix, t.l);
          break;
      }
    }
    const double t_obs = detail::discrepancy_value(t, ds, obs, row_of, summary);
    const double t_rep = detail::discrepancy_value(t, ds, reps[m], row_of, summary);
    if (std::isnan(t_obs) || std::isnan(t_rep)) {
      undefined[m] = 1;
      return;
    }
    hit[m] = t_rep >= t_obs ? 1 : 0;
  });
  PValueResult res;
  double p = 0.0;
  double used = 0.0;
  for (int m = 0; m < ps.M(); ++m) {
    if (undefined[m] || W(m) == 0.0) continue;
    p += W(m) * hit[m];
    used += W(m);
  }
  if (used > 0.0) {
    res.p = p / used;
  } else {
    res.note = "no uncensored observations in the discrepancy subset";
  }
  return res;
}

// ---------------------------------------------------------------------------
// MCMC diagnostics

/// n s^2 / sigma^2_BM with batch size floor(sqrt(n)).
inline double batch_means_ess(const std::vector<double>& trace) {
  const std::size_t n = trace.size();
  if (n < 100) throw ValidationError("batch-means ESS needs at least 100 draws");
  const std::size_t b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const std::size_t a = n / b;
  const std::size_t used = a * b;
  double mean = 0.0;
  for (std::size_t k = 0; k < used; ++k) mean += trace[k];
  mean /= static_cast<double>(used);
  double s2 = 0.0;
  for (std::size_t k = 0; k < used; ++k) s2 += (trace[k] - mean) * (trace[k] - mean);
  s2 /= static_cast<double>(used - 1);
  double bm = 0.0;
  for (std::size_t k = 0; k < a; ++k) {
    double m = 0.0;
    for (std::size_t t = 0; t < b; ++t) m += trace[k * b + t];
    m /= static_cast<double>(b);
    bm += (m - mean) * (m - mean);
  }
  bm = static_cast<double>(b) * bm / static_cast<double>(a - 1);
  if (!(s2 > 0.0) || !(bm > 0.0)) return 1.0;
  return static_cast<double>(used) * s2 / bm;
}

}  // namespace densreg

#endif  // DENSREG_METRICS_HPP
