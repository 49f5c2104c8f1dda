#ifndef DENSREG_MCMC_HPP
#define DENSREG_MCMC_HPP

#include "densreg/gibbs.hpp"
#include "densreg/particles.hpp"

#include <cstdint>
#include <ostream>
#include <vector>

namespace densreg {

struct McmcSettings {
  int J0 = 15;
  long burnin = 10000;
  long iters = 20000;
  long thin = 10;
  std::uint64_t seed = 1;
  AdaptSettings adapt;
};

struct TraceRow {
  long iteration = 0;
  double loglik = 0.0;
  AcceptStats accept;
};

struct McmcResult {
  ParticleSet particles;
  AdaptTable adapt;
  std::vector<TraceRow> trace;
};

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "iteration,loglik,acc_beta,acc_sigma,acc_mutau,acc_rho,acc_v,acc_y\n";
  out.precision(10);
  for (const auto& r : trace) {
    const auto& a = r.accept;
    out << r.iteration << ',' << r.loglik << ',' << AcceptStats::rate(a.beta_acc, a.beta_n) << ','
        << AcceptStats::rate(a.sigma_acc, a.sigma_n) << ',' << AcceptStats::rate(a.mutau_acc, a.mutau_n) << ','
        << AcceptStats::rate(a.rho_acc, a.rho_n) << ',' << AcceptStats::rate(a.v_acc, a.v_n) << ','
        << AcceptStats::rate(a.y_acc, a.y_n) << '\n';
  }
}

/// Adaptive Metropolis-within-Gibbs at fixed J0. Saves every thin-th state after
/// burn-in as an equally weighted particle; M = iters / thin.
inline McmcResult run_mcmc(const Dataset& ds, const Hyperparams& h, const McmcSettings& cfg) {
  if (cfg.J0 < 1 || cfg.burnin < 0 || cfg.iters < 1 || cfg.thin < 1 || cfg.thin > cfg.iters) {
    throw ValidationError("invalid MCMC settings");
  }
  Rng init_rng(stream_seed(cfg.seed, {kStreamInit}));
  Rng rng(stream_seed(cfg.seed, {kStreamChain}));
  GibbsSampler sampler(ds, h, initial_state(ds, h, cfg.J0, init_rng), make_adapt_table(ds, h, cfg.J0), cfg.adapt);
  McmcResult res;
  const long total = cfg.burnin + cfg.iters;
  for (long it = 1; it <= total; ++it) {
    sampler.sweep(rng);
    if (it > cfg.burnin && (it - cfg.burnin) % cfg.thin == 0) {
      res.particles.particles.push_back(sampler.state());
      res.trace.push_back({it, sampler.loglik(), sampler.stats()});
      sampler.stats() = AcceptStats{};
    }
  }
  const int M = res.particles.M();
  res.particles.log_weights = Vector::Zero(M);
  for (int m = 0; m < M; ++m) res.particles.seeds.push_back(stream_seed(cfg.seed, {kStreamParticle, static_cast<std::uint64_t>(m)}));
  res.adapt = sampler.adapt_table();
  return res;
}

}  // namespace densreg

#endif  // DENSREG_MCMC_HPP
