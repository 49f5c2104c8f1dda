#ifndef DENSREG_PREDICT_HPP
#define DENSREG_PREDICT_HPP

#include "densreg/links.hpp"
#include "densreg/model.hpp"
#include "densreg/numeric.hpp"
#include "densreg/parallel.hpp"
#include "densreg/particles.hpp"
#include "densreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace densreg {

/// Ordered evaluation abscissae on the response scale.
struct PredictGrid {
  std::vector<double> points;
  double delta = 0.0;  ///< mean spacing

  static PredictGrid linear(double lo, double hi, int n) {
    if (!(hi > lo) || n < 2) throw ValidationError("grid needs lo < hi and at least two points");
    PredictGrid g;
    g.points.resize(n);
    for (int k = 0; k < n; ++k) g.points[k] = lo + (hi - lo) * k / (n - 1);
    g.delta = (hi - lo) / (n - 1);
    return g;
  }

  static PredictGrid log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ValidationError("log grid needs 0 < lo < hi and at least two points");
    PredictGrid g;
    g.points.resize(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int k = 0; k < n; ++k) g.points[k] = std::exp(a + (b - a) * k / (n - 1));
    g.points.front() = lo;
    g.points.back() = hi;
    g.delta = (hi - lo) / (n - 1);
    return g;
  }

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.size() < 2) throw ValidationError("grid needs at least two points");
    for (std::size_t k = 1; k < points.size(); ++k) {
      if (!(points[k] > points[k - 1])) throw ValidationError("grid points must be strictly increasing");
    }
  }

  double trapezoid(const std::vector<double>& f) const {
    double s = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) s += 0.5 * (f[k] + f[k - 1]) * (points[k] - points[k - 1]);
    return s;
  }
};

/// One (particle, component) term of the predictive mixture at a fixed x*.
struct FlatComponent {
  double weight = 0.0;  ///< W_m w_j^m(x*)
  Vector mean;          ///< x* beta_j
  const Matrix* sigma = nullptr;
  int particle = 0;
  int component = 0;

  double sd(int l) const { return std::sqrt((*sigma)(l, l)); }
  double var(int l) const { return (*sigma)(l, l); }
};

/// The posterior predictive of y at x* as a flat mixture over (m, j). Holds pointers
/// into the particle set, which must outlive it.
struct PredictiveMixture {
  std::vector<FlatComponent> comps;
  Vector x;
  int M = 0;

  /// Flat indices of the terms that belong to particle m.
  std::vector<std::vector<int>> by_particle() const {
    std::vector<std::vector<int>> out(M);
    for (int k = 0; k < static_cast<int>(comps.size()); ++k) out[comps[k].particle].push_back(k);
    return out;
  }
};

inline PredictiveMixture predictive_mixture(const ParticleSet& ps, const Vector& x) {
  PredictiveMixture mix;
  mix.x = x;
  mix.M = ps.M();
  const Vector W = ps.normalized_weights();
  for (int m = 0; m < ps.M(); ++m) {
    if (W(m) == 0.0) continue;
    const MixtureState& s = ps.particles[m];
    const Vector w = covariate_weights(s, x);
    for (int j = 0; j < s.J(); ++j) {
      FlatComponent c;
      c.weight = W(m) * w(j);
      c.mean = s.theta[j].beta.transpose() * x;
      c.sigma = &s.theta[j].sigma;
      c.particle = m;
      c.component = j;
      mix.comps.push_back(std::move(c));
    }
  }
  return mix;
}

/// Single-particle view, used for per-particle quantities.
inline PredictiveMixture particle_mixture(const MixtureState& s, const Vector& x, int particle = 0) {
  PredictiveMixture mix;
  mix.x = x;
  mix.M = particle + 1;
  const Vector w = covariate_weights(s, x);
  for (int j = 0; j < s.J(); ++j) {
    mix.comps.push_back({w(j), s.theta[j].beta.transpose() * x, &s.theta[j].sigma, particle, j});
  }
  return mix;
}

/// P(y_l >= 0) for a sign-threshold response.
inline double prob_success_marginal(const PredictiveMixture& mix, int l) {
  double p = 0.0;
  for (const auto& c : mix.comps) p += c.weight * normal_cdf(c.mean(l) / c.sd(l));
  return p;
}

inline double prob_success_marginal(const ParticleSet& ps, const Vector& x, int l) {
  return prob_success_marginal(predictive_mixture(ps, x), l);
}

/// Log-normal mixture density of z~_l = exp(y_l).
inline double marginal_density_at(const PredictiveMixture& mix, int l, double z) {
  double f = 0.0;
  for (const auto& c : mix.comps) f += c.weight * lognormal_pdf(z, c.mean(l), c.var(l));
  return f;
}

inline std::vector<double> marginal_density(const PredictiveMixture& mix, int l, const PredictGrid& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = marginal_density_at(mix, l, grid.points[k]);
  return out;
}

inline std::vector<double> marginal_density(const ParticleSet& ps, const Vector& x, int l, const PredictGrid& grid) {
  return marginal_density(predictive_mixture(ps, x), l, grid);
}

/// P(z~_l <= z).
inline double marginal_cdf(const PredictiveMixture& mix, int l, double z) {
  if (!(z > 0.0)) return 0.0;
  const double lz = std::log(z);
  double F = 0.0;
  for (const auto& c : mix.comps) F += c.weight * normal_cdf((lz - c.mean(l)) / c.sd(l));
  return F;
}

/// E[z~_l] for an event response (log-normal means), P(success) for a binary one.
inline double predictive_mean(const PredictiveMixture& mix, int l, bool binary) {
  if (binary) return prob_success_marginal(mix, l);
  double s = 0.0;
  for (const auto& c : mix.comps) s += c.weight * std::exp(c.mean(l) + 0.5 * c.var(l));
  return s;
}

/// Log-spaced grid over [exp(mu_min - 6 sd_max), exp(mu_max + 6 sd_max)] pooled over components.
inline PredictGrid default_grid(const PredictiveMixture& mix, int l, int n = 512, double width = 6.0) {
  if (mix.comps.empty()) throw NumericError("empty predictive mixture");
  double lo = kInf;
  double hi = -kInf;
  double sd = 0.0;
  for (const auto& c : mix.comps) {
    lo = std::min(lo, c.mean(l));
    hi = std::max(hi, c.mean(l));
    sd = std::max(sd, c.sd(l));
  }
  return PredictGrid::log_spaced(std::exp(lo - width * sd), std::exp(hi + width * sd), n);
}

struct MedianResult {
  double value = std::numeric_limits<double>::quiet_NaN();
  double raw = std::numeric_limits<double>::quiet_NaN();  ///< median ignoring the horizon flag
  bool beyond_horizon = false;
};

/// Smallest grid point with cumulative trapezoid mass >= 0.5. The grid is widened
/// (log-scale half-width doubled) until the exact tail mass outside it is < 1e-4.
inline double marginal_median(const PredictiveMixture& mix, int l, PredictGrid grid, int max_widen = 8) {
  for (int attempt = 0;; ++attempt) {
    const double tail = marginal_cdf(mix, l, grid.points.front()) + 1.0 - marginal_cdf(mix, l, grid.points.back());
    if (tail < 1e-4) break;
    if (attempt >= max_widen) throw NumericError("predictive grid still too narrow after widening");
    const double a = std::log(grid.points.front());
    const double b = std::log(grid.points.back());
    const double mid = 0.5 * (a + b);
    const double half = b - a;
    grid = PredictGrid::log_spaced(std::exp(mid - half), std::exp(mid + half), static_cast<int>(grid.size()));
  }
  const std::vector<double> f = marginal_density(mix, l, grid);
  double cum = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    cum += 0.5 * (f[k] + f[k - 1]) * (grid.points[k] - grid.points[k - 1]);
    if (cum >= 0.5) return grid.points[k];
  }
  return grid.points.back();
}

inline double marginal_median(const PredictiveMixture& mix, int l) {
  return marginal_median(mix, l, default_grid(mix, l));
}

/// P(z~_l >= x_c + 1) for a floor-exp event response.
inline double censoring_probability(const PredictiveMixture& mix, int l, int censor_covariate = 1) {
  const double b = std::log(censor_horizon(mix.x, censor_covariate));
  double p = 0.0;
  for (const auto& c : mix.comps) p += c.weight * normal_sf((b - c.mean(l)) / c.sd(l));
  return p;
}

inline double censoring_probability(const ParticleSet& ps, const Vector& x, int l, int censor_covariate = 1) {
  return censoring_probability(predictive_mixture(ps, x), l, censor_covariate);
}

/// Median flagged as beyond the censoring horizon when more than half the
/// predictive mass lies above x_c + 1.
inline MedianResult marginal_median_flagged(const PredictiveMixture& mix, int l, int censor_covariate = 1) {
  MedianResult r;
  r.raw = marginal_median(mix, l);
  r.beyond_horizon = censoring_probability(mix, l, censor_covariate) > 0.5;
  if (!r.beyond_horizon) r.value = r.raw;
  return r;
}

/// Posterior-predictive responsibilities of every flat term given z~ at `given`
/// dims: proportional to weight x N(log z~ | mean, Sigma_given). Sums to 1.
inline std::vector<double> responsibilities(const PredictiveMixture& mix, const std::vector<int>& given,
                                            const std::vector<double>& ztilde) {
  const int k = static_cast<int>(given.size());
  Vector lz(k);
  for (int a = 0; a < k; ++a) {
    if (!(ztilde[a] > 0.0)) throw ValidationError("conditioning value must be positive");
    lz(a) = std::log(ztilde[a]);
  }
  std::vector<double> logr(mix.comps.size());
  for (std::size_t t = 0; t < mix.comps.size(); ++t) {
    const auto& c = mix.comps[t];
    Matrix S(k, k);
    Vector mu(k);
    for (int a = 0; a < k; ++a) {
      mu(a) = c.mean(given[a]);
      for (int b = 0; b < k; ++b) S(a, b) = (*c.sigma)(given[a], given[b]);
    }
    PreparedCovariance pc(S);
    logr[t] = pc.ok && c.weight > 0.0 ? std::log(c.weight) + pc.logpdf(lz, mu) : -kInf;
  }
  const double norm = log_sum_exp(logr);
  if (!std::isfinite(norm)) {
    throw NumericError("predictive density of the conditioning value underflows; move it closer to the bulk");
  }
  for (double& r : logr) r = std::exp(r - norm);
  return logr;
}

namespace detail {

inline Vector log_values(const std::vector<double>& z) {
  Vector v(static_cast<Eigen::Index>(z.size()));
  for (std::size_t a = 0; a < z.size(); ++a) v(static_cast<Eigen::Index>(a)) = std::log(z[a]);
  return v;
}

}  // namespace detail

/// P(z_l = 1 | z~_{l'} = z') for binary l and event l'.
inline double cond_prob_success_given_event(const PredictiveMixture& mix, int l, int lp, double zp) {
  const std::vector<double> r = responsibilities(mix, {lp}, {zp});
  const Vector given = detail::log_values({zp});
  double p = 0.0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (r[t] == 0.0) continue;
    const auto& c = mix.comps[t];
    const GaussianConditional g = condition_gaussian(c.mean, *c.sigma, l, {lp}, given);
    p += r[t] * normal_cdf(g.mean / std::sqrt(g.var));
  }
  return p;
}

/// Density of z~_l given z~_{l'} = z'.
inline std::vector<double> cond_density_event_given_event(const PredictiveMixture& mix, int l, int lp, double zp,
                                                          const PredictGrid& grid) {
  const std::vector<double> r = responsibilities(mix, {lp}, {zp});
  const Vector given = detail::log_values({zp});
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t t = 0; t < r.size(); ++t) {
    if (r[t] == 0.0) continue;
    const auto& c = mix.comps[t];
    const GaussianConditional g = condition_gaussian(c.mean, *c.sigma, l, {lp}, given);
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] += r[t] * lognormal_pdf(grid.points[k], g.mean, g.var);
  }
  return out;
}

/// Dimensions of the application layout: first-event age (base), age gap to the
/// constrained event (child), second event age (union) and a binary response.
struct ChildDims {
  int base = 0;
  int union_dim = 1;
  int child = 2;
  int binary = 3;
  int censor_covariate = 1;
};

struct McSettings {
  int draws = 10000;  ///< per particle, shared across components
  std::uint64_t seed = 1;
  int threads = 1;
};

namespace detail {

/// Stratified standard normal draws for particle m; common to every component
/// of the particle and every grid point.
inline std::vector<double> crn_normals(const McSettings& mc, int m, std::uint64_t tag) {
  Rng rng(stream_seed(mc.seed, {kStreamPredict, tag, static_cast<std::uint64_t>(m)}));
  std::vector<double> z(mc.draws);
  for (int k = 0; k < mc.draws; ++k) z[k] = normal_quantile((k + rng.uniform()) / mc.draws);
  return z;
}

/// Calls fn(particle, flat indices, draws) per particle in parallel and sums the
/// per-particle result vectors in particle order.
template <class Fn>
std::vector<double> reduce_particles(const PredictiveMixture& mix, const McSettings& mc, std::uint64_t tag,
                                     std::size_t width, Fn&& fn) {
  const auto groups = mix.by_particle();
  std::vector<std::vector<double>> parts(groups.size());
  parallel_for(groups.size(), mc.threads, [&](std::size_t m) {
    parts[m].assign(width, 0.0);
    if (groups[m].empty()) return;
    const std::vector<double> z = crn_normals(mc, static_cast<int>(m), tag);
    fn(groups[m], z, parts[m]);
  });
  std::vector<double> out(width, 0.0);
  for (const auto& p : parts) {
    for (std::size_t k = 0; k < width; ++k) out[k] += p[k];
  }
  return out;
}

inline constexpr std::uint64_t kTagChild = 1;
inline constexpr std::uint64_t kTagChildUnion = 2;

}  // namespace detail

/// Density of the constrained event age z = z~_base + z~_child, by Monte Carlo over
/// z~_base ~ LogNormal and the closed-form conditional of the gap.
inline std::vector<double> child_marginal_density(const PredictiveMixture& mix, const PredictGrid& grid,
                                                  const McSettings& mc, const ChildDims& dims = {}) {
  const int b = dims.base;
  const int c = dims.child;
  return detail::reduce_particles(mix, mc, detail::kTagChild, grid.size(),
                                  [&](const std::vector<int>& idx, const std::vector<double>& z,
                                      std::vector<double>& acc) {
    for (int t : idx) {
      const auto& comp = mix.comps[t];
      const double sb = comp.sd(b);
      const double wt = comp.weight / z.size();
      for (double zk : z) {
        const double ly1 = comp.mean(b) + sb * zk;
        const double z1 = std::exp(ly1);
        const Vector given = Vector::Constant(1, ly1);
        const GaussianConditional g = condition_gaussian(comp.mean, *comp.sigma, c, {b}, given);
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const double gap = grid.points[k] - z1;
          if (gap > 0.0) acc[k] += wt * lognormal_pdf(gap, g.mean, g.var);
        }
      }
    }
  });
}

/// P(z~_base + z~_child >= x_c + 1): the constrained event has not happened yet.
inline double child_not_yet_probability(const PredictiveMixture& mix, const McSettings& mc, const ChildDims& dims = {}) {
  const int b = dims.base;
  const int c = dims.child;
  const double horizon = censor_horizon(mix.x, dims.censor_covariate);
  return detail::reduce_particles(mix, mc, detail::kTagChild, 1,
                                  [&](const std::vector<int>& idx, const std::vector<double>& z,
                                      std::vector<double>& acc) {
    for (int t : idx) {
      const auto& comp = mix.comps[t];
      const double wt = comp.weight / z.size();
      for (double zk : z) {
        const double ly1 = comp.mean(b) + comp.sd(b) * zk;
        const double gap = horizon - std::exp(ly1);
        if (!(gap > 0.0)) {
          acc[0] += wt;
          continue;
        }
        const GaussianConditional g = condition_gaussian(comp.mean, *comp.sigma, c, {b}, Vector::Constant(1, ly1));
        acc[0] += wt * normal_sf((std::log(gap) - g.mean) / std::sqrt(g.var));
      }
    }
  })[0];
}

/// Density of the constrained event age given the union age z~_union = zu.
inline std::vector<double> cond_density_child_given_union(const PredictiveMixture& mix, double zu,
                                                          const PredictGrid& grid, const McSettings& mc,
                                                          const ChildDims& dims = {}) {
  const int b = dims.base;
  const int c = dims.child;
  const int u = dims.union_dim;
  const std::vector<double> r = responsibilities(mix, {u}, {zu});
  const double lu = std::log(zu);
  return detail::reduce_particles(mix, mc, detail::kTagChildUnion, grid.size(),
                                  [&](const std::vector<int>& idx, const std::vector<double>& z,
                                      std::vector<double>& acc) {
    for (int t : idx) {
      if (r[t] == 0.0) continue;
      const auto& comp = mix.comps[t];
      GaussianConditional g1;
      try {
        g1 = condition_gaussian(comp.mean, *comp.sigma, b, {u}, Vector::Constant(1, lu));
      } catch (const NumericError&) {
        continue;  // singular block: component skipped
      }
      const double s1 = std::sqrt(g1.var);
      const double wt = r[t] / z.size();
      Vector given(2);
      given(1) = lu;
      for (double zk : z) {
        given(0) = g1.mean + s1 * zk;
        const double z1 = std::exp(given(0));
        GaussianConditional g;
        try {
          g = condition_gaussian(comp.mean, *comp.sigma, c, {b, u}, given);
        } catch (const NumericError&) {
          break;
        }
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const double gap = grid.points[k] - z1;
          if (gap > 0.0) acc[k] += wt * lognormal_pdf(gap, g.mean, g.var);
        }
      }
    }
  });
}

/// P(z_binary = 1 | z~_base + z~_child = zc), a ratio of two Monte Carlo integrals
/// sharing the same draws.
inline double cond_prob_success_given_child(const PredictiveMixture& mix, double zc, const McSettings& mc,
                                            const ChildDims& dims = {}) {
  if (!(zc > 0.0)) throw ValidationError("conditioning age must be positive");
  const int b = dims.base;
  const int c = dims.child;
  const int s = dims.binary;
  const std::vector<double> nd = detail::reduce_particles(mix, mc, detail::kTagChild, 2,
                                                          [&](const std::vector<int>& idx, const std::vector<double>& z,
                                                              std::vector<double>& acc) {
    for (int t : idx) {
      const auto& comp = mix.comps[t];
      const double wt = comp.weight / z.size();
      Vector given(2);
      for (double zk : z) {
        const double ly1 = comp.mean(b) + comp.sd(b) * zk;
        const double gap = zc - std::exp(ly1);
        if (!(gap > 0.0)) continue;
        const GaussianConditional gc = condition_gaussian(comp.mean, *comp.sigma, c, {b}, Vector::Constant(1, ly1));
        const double f = wt * lognormal_pdf(gap, gc.mean, gc.var);
        given(0) = ly1;
        given(1) = std::log(gap);
        const GaussianConditional gs = condition_gaussian(comp.mean, *comp.sigma, s, {b, c}, given);
        acc[0] += f * normal_cdf(gs.mean / std::sqrt(gs.var));
        acc[1] += f;
      }
    }
  });
  if (!(nd[1] > 0.0)) throw NumericError("predictive density of the conditioning age underflows");
  return nd[0] / nd[1];
}

/// Grid for the constrained event age: log-spaced up to the pooled upper tail of the sum.
inline PredictGrid default_child_grid(const PredictiveMixture& mix, int n = 256, const ChildDims& dims = {}) {
  double lo = kInf;
  double hi = 0.0;
  for (const auto& c : mix.comps) {
    lo = std::min(lo, std::exp(c.mean(dims.base) - 6.0 * c.sd(dims.base)));
    hi = std::max(hi, std::exp(c.mean(dims.base) + 6.0 * c.sd(dims.base)) +
                          std::exp(c.mean(dims.child) + 6.0 * c.sd(dims.child)));
  }
  return PredictGrid::log_spaced(lo, hi, n);
}

/// Pointwise weighted quantile across particles of per-particle curves.
inline std::vector<double> weighted_quantile_band(const std::vector<std::vector<double>>& curves, const Vector& weights,
                                                  double level) {
  if (curves.empty()) return {};
  const std::size_t G = curves.front().size();
  std::vector<double> out(G);
  std::vector<std::pair<double, double>> col(curves.size());
  for (std::size_t k = 0; k < G; ++k) {
    for (std::size_t m = 0; m < curves.size(); ++m) col[m] = {curves[m][k], weights(static_cast<Eigen::Index>(m))};
    std::sort(col.begin(), col.end());
    double cum = 0.0;
    out[k] = col.back().first;
    for (const auto& [v, w] : col) {
      cum += w;
      if (cum >= level) {
        out[k] = v;
        break;
      }
    }
  }
  return out;
}

/// Per-particle marginal densities, for credible bands.
inline std::vector<std::vector<double>> particle_marginal_densities(const ParticleSet& ps, const Vector& x, int l,
                                                                    const PredictGrid& grid) {
  std::vector<std::vector<double>> out;
  out.reserve(ps.M());
  for (int m = 0; m < ps.M(); ++m) out.push_back(marginal_density(particle_mixture(ps.particles[m], x, m), l, grid));
  return out;
}

}  // namespace densreg

#endif  // DENSREG_PREDICT_HPP
