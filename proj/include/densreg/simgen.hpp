#ifndef DENSREG_SIMGEN_HPP
#define DENSREG_SIMGEN_HPP

#include "densreg/data.hpp"
#include "densreg/links.hpp"
#include "densreg/numeric.hpp"
#include "densreg/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

namespace densreg {

struct SimConfig {
  int n = 700;
  std::uint64_t seed = 1;
  bool censor = true;
};

/// Generated data plus the hidden undiscretized values.
struct SimData {
  Dataset data;
  std::vector<double> x_tilde;
  std::vector<std::array<double, 2>> z_tilde;
};

inline CovariateSchema simulation_schema() { return {1, {3, 2}}; }

/// True regression function of the first response.
inline double sim_mu1(double x, int x2, int x3) {
  if (x2 != 1 && x3 == 2) return -0.057 * x * x + 3.08 * x - 21.247;
  if (x2 != 1 && x3 == 1) return x / 3.0 + 10.0;
  if (x2 == 1 && x3 == 2) return 0.0001 * x * x * x - 0.0695 * x * x + 3.83 * x - 30.584;
  return 8.0 * x / 15.0 + 7.0;
}

inline double sim_mu2(double x, int x3) { return x3 == 2 ? -0.056 * x * x + 3.08 * x - 18.0 : 0.5 * x + 8.0; }

struct NormalTerm {
  double weight;
  double mean;
  double sd;
};

inline std::array<NormalTerm, 2> sim_eps1_terms() { return {{{0.9, -15.0 / 90.0, 0.5}, {0.1, 1.5, 0.75}}}; }

inline std::array<NormalTerm, 2> sim_eps2_terms(double x, int x3) {
  if (x3 == 2) return {{{0.9, -1.0 / 6.0, 0.4}, {0.1, 1.5, 0.75}}};
  const double s = 7.5 / x;
  return {{{0.9, -1.0 / 6.0, s}, {0.1, 1.5, s}}};
}

inline double sample_terms(const std::array<NormalTerm, 2>& t, Rng& rng) {
  const NormalTerm& c = rng.uniform() < t[0].weight ? t[0] : t[1];
  return rng.normal(c.mean, c.sd);
}

/// E[z~_dim | x~] for dims 0, 1; success probability for dim 2.
inline double sim_true_mean(double x, int x2, int x3, int dim) {
  auto mean = [](const std::array<NormalTerm, 2>& t) { return t[0].weight * t[0].mean + t[1].weight * t[1].mean; };
  switch (dim) {
    case 0:
      return sim_mu1(x, x2, x3) + mean(sim_eps1_terms());
    case 1:
      return sim_mu2(x, x3) + 0.75 * mean(sim_eps1_terms()) + mean(sim_eps2_terms(x, x3));
    case 2:
      return normal_cdf((x - 18.0) / 6.0);
    default:
      throw ValidationError("simulation has three responses");
  }
}

/// Density of the undiscretized response for dims 0, 1 (normal mixtures) and the
/// probability mass of z for the binary dim 2.
inline double sim_true_density(double z, double x, int x2, int x3, int dim) {
  switch (dim) {
    case 0: {
      const double m = sim_mu1(x, x2, x3);
      double f = 0.0;
      for (const auto& t : sim_eps1_terms()) f += t.weight * std::exp(normal_logpdf(z, m + t.mean, t.sd * t.sd));
      return f;
    }
    case 1: {
      const double m = sim_mu2(x, x3);
      double f = 0.0;
      for (const auto& a : sim_eps1_terms()) {
        for (const auto& b : sim_eps2_terms(x, x3)) {
          const double var = 0.5625 * a.sd * a.sd + b.sd * b.sd;
          f += a.weight * b.weight * std::exp(normal_logpdf(z, m + 0.75 * a.mean + b.mean, var));
        }
      }
      return f;
    }
    case 2: {
      const double p = normal_cdf((x - 18.0) / 6.0);
      return z > 0.5 ? p : 1.0 - p;
    }
    default:
      throw ValidationError("simulation has three responses");
  }
}

inline SimData simulate(const SimConfig& cfg) {
  if (cfg.n < 1) throw ValidationError("simulation needs n >= 1");
  Rng rng(stream_seed(cfg.seed, {kStreamSimulate}));
  SimData out;
  std::vector<RawCovariates> raw;
  std::vector<std::vector<double>> z;
  const std::array<double, 3> p2{0.5, 0.3, 0.2};
  const std::array<double, 2> p3{0.4, 0.6};
  for (int i = 0; i < cfg.n; ++i) {
    const double xt = rng.uniform(15.0, 30.0);
    const int x2 = static_cast<int>(rng.categorical(p2)) + 1;
    const int x3 = static_cast<int>(rng.categorical(p3)) + 1;
    const double mu1 = sim_mu1(xt, x2, x3);
    const double e1 = sample_terms(sim_eps1_terms(), rng);
    const double z1 = mu1 + e1;
    const double z2 = sim_mu2(xt, x3) + 0.75 * (z1 - mu1) + sample_terms(sim_eps2_terms(xt, x3), rng);
    const double z3 = rng.bernoulli(normal_cdf((xt - 18.0) / 6.0)) ? 1.0 : 0.0;
    auto observe = [&](double zt) { return cfg.censor && zt > xt ? 0.0 : std::floor(zt); };
    raw.push_back({{std::floor(xt)}, {x2, x3}});
    z.push_back({observe(z1), observe(z2), z3});
    out.x_tilde.push_back(xt);
    out.z_tilde.push_back({z1, z2});
  }
  out.data = make_dataset(simulation_schema(), simulation_links(cfg.censor), std::move(raw), z);
  return out;
}

/// Hidden-truth sidecar: x~_1 and the undiscretized responses, one row per observation.
inline void save_sim_truth(const std::string& path, const SimData& sim, const std::string& comment = {}) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "x_tilde_1,z_tilde_1,z_tilde_2\n" << std::setprecision(17);
  for (std::size_t i = 0; i < sim.x_tilde.size(); ++i) {
    out << sim.x_tilde[i] << ',' << sim.z_tilde[i][0] << ',' << sim.z_tilde[i][1] << '\n';
  }
}

}  // namespace densreg

#endif  // DENSREG_SIMGEN_HPP
