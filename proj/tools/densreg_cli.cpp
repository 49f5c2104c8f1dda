// Command-line driver: simulate -> fit -> predict -> check -> score.

#include "densreg/densreg.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace densreg;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir = "run";
  std::string stop_rule;
  std::optional<int> j0;
  std::optional<int> particles;
  std::string data;
  std::string particle_file;
  std::string points;
  std::vector<std::string> quantities;
  bool latent = false;
};

RunConfig resolve(const Options& o) {
  RunConfig c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (!o.stop_rule.empty()) c.smc.rule.kind = detail::stop_kind_from(o.stop_rule);
  if (o.j0) c.mcmc.J0 = *o.j0;
  if (o.particles) {
    if (*o.particles < 1 || *o.particles > c.mcmc.iters) throw ValidationError("--particles must be in 1..iters");
    c.mcmc.thin = c.mcmc.iters / *o.particles;
  }
  if (!o.data.empty()) c.data.path = o.data;
  if (!o.quantities.empty()) c.predict.quantities = o.quantities;
  if (c.mcmc.J0 < 1) throw ValidationError("J0 must be positive");
  return c;
}

std::string provenance(const RunConfig& c) {
  return "seed=" + std::to_string(c.seed) + " config_hash=" + config_hash(c);
}

fs::path out_path(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

Dataset obtain_data(const RunConfig& c) {
  if (!c.data.path.empty()) return load_dataset(c.data.path, c.data.schema, c.links);
  if (c.links_name != "simulation") throw ValidationError("no data path given and the link set is not the simulation one");
  return simulate({c.data.sim_n, c.seed, c.data.sim_censor}).data;
}

Hyperparams build_prior(const RunConfig& c, const Dataset& ds) {
  Rng rng(stream_seed(c.seed, {kStreamPrior}));
  const double g = c.prior.g < 0.0 ? default_g_factor(c.prior.recipe) : c.prior.g;
  return build_empirical_prior(ds, c.prior.recipe, g, rng);
}

json meta(const RunConfig& c) { return {{"seed", c.seed}, {"config_hash", config_hash(c)}}; }

int cmd_simulate(const Options& o) {
  const RunConfig c = resolve(o);
  const SimData sim = simulate({c.data.sim_n, c.seed, c.data.sim_censor});
  save_dataset(out_path(o, "data.csv").string(), sim.data, provenance(c));
  save_sim_truth(out_path(o, "truth.csv").string(), sim, provenance(c));
  std::cout << "wrote " << sim.data.n() << " rows to " << out_path(o, "data.csv").string() << "\n";
  return 0;
}

int cmd_fit(const Options& o) {
  const RunConfig c = resolve(o);
  const int threads = resolve_threads(c.threads);
  const Dataset ds = obtain_data(c);
  const Hyperparams h = build_prior(c, ds);
  McmcSettings ms = c.mcmc;
  ms.seed = c.seed;
  McmcResult mc = run_mcmc(ds, h, ms);
  {
    std::ofstream tr(out_path(o, "trace.csv"));
    tr << "# " << provenance(c) << "\n";
    write_trace_csv(tr, mc.trace);
  }
  ParticleSet ps = std::move(mc.particles);
  json m = meta(c);
  m["J0"] = ms.J0;
  if (c.smc.enabled) {
    SmcResult sr = adaptive_truncation_run(std::move(ps), ds, h, mc.adapt, c.smc.rule, c.seed, threads, ms.adapt);
    std::ofstream lg(out_path(o, "smc_log.csv"));
    lg << "# " << provenance(c) << "\n";
    write_smc_log_csv(lg, sr.log);
    if (sr.capped) std::cerr << "warning: truncation cap reached at J = " << sr.J_star << "\n";
    m["J_star"] = sr.J_star;
    m["capped"] = sr.capped;
    ps = std::move(sr.particles);
  }
  save_particles(out_path(o, "particles.json").string(), ps, m, o.latent);
  write_json(out_path(o, "prior.json"), hyperparams_to_json(h));
  std::cout << "M=" << ps.M() << " J=" << ps.J() << " ESS=" << ess(ps.log_weights) << "\n";
  return 0;
}

ParticleSet read_particles(const Options& o) {
  const std::string path = o.particle_file.empty() ? (fs::path(o.out_dir) / "particles.json").string() : o.particle_file;
  return load_particles(path);
}

int cmd_predict(const Options& o) {
  const RunConfig c = resolve(o);
  const ParticleSet ps = read_particles(o);
  if (o.points.empty()) throw ValidationError("predict needs --points");
  const std::vector<RawCovariates> pts = load_points(o.points, c.data.schema);
  McSettings mcs{c.predict.mc_draws, c.seed, resolve_threads(c.threads)};
  std::ofstream out(out_path(o, "predictions.csv"));
  out << "# " << provenance(c) << "\n";
  out << "point,quantity,abscissa,value\n" << std::setprecision(10);
  const int d = static_cast<int>(c.links.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Vector x = expand_dummies(pts[k], c.data.schema);
    const PredictiveMixture mix = predictive_mixture(ps, x);
    auto put = [&](const std::string& q, double a, double v) {
      out << k + 1 << ',' << q << ',';
      if (std::isnan(a)) {
        out << "";
      } else {
        out << a;
      }
      out << ',' << v << '\n';
    };
    const double none = std::numeric_limits<double>::quiet_NaN();
    for (const std::string& q : c.predict.quantities) {
      for (int l = 0; l < d; ++l) {
        const LinkSpec& s = c.links[l];
        const std::string tag = q + "_z" + std::to_string(l + 1);
        const bool floor_exp = s.kind == LinkKind::FloorExpCensored;
        if (q == "success" && s.is_binary()) put(tag, none, prob_success_marginal(mix, l));
        if (q == "mean" && (floor_exp || s.is_binary())) put(tag, none, predictive_mean(mix, l, s.is_binary()));
        if (q == "censoring" && floor_exp) put(tag, none, censoring_probability(mix, l, s.censor_covariate));
        if (q == "median" && floor_exp) {
          const MedianResult r = marginal_median_flagged(mix, l, s.censor_covariate);
          put(tag, none, r.value);
        }
        if (q == "density" && floor_exp) {
          const PredictGrid g = default_grid(mix, l, c.predict.grid_points);
          const std::vector<double> f = marginal_density(mix, l, g);
          for (std::size_t t = 0; t < g.size(); ++t) put(tag, g.points[t], f[t]);
        }
        if (s.kind == LinkKind::SumConstrainedFloorExp) {
          ChildDims dims;
          dims.base = s.base_dim;
          dims.child = l;
          dims.censor_covariate = s.censor_covariate;
          if (q == "censoring") put(tag, none, child_not_yet_probability(mix, mcs, dims));
          if (q == "density") {
            const PredictGrid g = default_child_grid(mix, 128, dims);
            const std::vector<double> f = child_marginal_density(mix, g, mcs, dims);
            for (std::size_t t = 0; t < g.size(); ++t) put(tag, g.points[t], f[t]);
          }
        }
      }
    }
  }
  std::cout << "wrote predictions for " << pts.size() << " points\n";
  return 0;
}

int cmd_check(const Options& o) {
  const RunConfig c = resolve(o);
  const int threads = resolve_threads(c.threads);
  const Dataset ds = obtain_data(c);
  const ParticleSet ps = read_particles(o);
  const std::vector<ResponseMatrix> reps = replicate(ps, ds, c.seed, threads);
  {
    std::ofstream km(out_path(o, "km.csv"));
    km << "# " << provenance(c) << "\n" << "response,curve,time,survival\n" << std::setprecision(10);
    std::vector<double> times;
    std::vector<bool> ev;
    for (int l = 0; l < ds.d(); ++l) {
      if (!ds.links[l].is_event_age()) continue;
      km_inputs(ds, observed_responses(ds), l, times, ev);
      for (const auto& s : kaplan_meier(times, ev)) km << l + 1 << ",observed," << s.time << ',' << s.survival << '\n';
      for (int m = 0; m < ps.M(); ++m) {
        km_inputs(ds, reps[m], l, times, ev);
        for (const auto& s : kaplan_meier(times, ev)) km << l + 1 << ',' << m + 1 << ',' << s.time << ',' << s.survival << '\n';
      }
    }
  }
  std::vector<Discrepancy> ts;
  for (int l = 0; l < ds.d(); ++l) {
    if (ds.links[l].kind == LinkKind::FloorExpCensored) {
      ts.push_back({DiscrepancyKind::Cens, l});
      ts.push_back({DiscrepancyKind::Noncens, l});
    } else if (ds.links[l].is_binary()) {
      ts.push_back({DiscrepancyKind::Binary, l});
    }
  }
  std::ofstream pv(out_path(o, "pvalues.csv"));
  pv << "# " << provenance(c) << "\n" << "discrepancy,p_value,note\n" << std::setprecision(6);
  json j = meta(c);
  for (const auto& t : ts) {
    const PValueResult r = posterior_predictive_pvalue(ps, ds, reps, t, threads);
    pv << t.name() << ',' << r.p << ',' << r.note << '\n';
    j["p_values"][t.name()] = std::isnan(r.p) ? json(nullptr) : json(r.p);
  }
  write_json(out_path(o, "check.json"), j);
  std::cout << j["p_values"].dump(2) << "\n";
  return 0;
}

int cmd_score(const Options& o) {
  const RunConfig c = resolve(o);
  const int threads = resolve_threads(c.threads);
  const Dataset ds = obtain_data(c);
  const ParticleSet ps = read_particles(o);
  json j = meta(c);
  for (int l = 0; l < ds.d(); ++l) {
    const LpmlResult r = lpml(ps, ds, l, threads);
    j["lpml"]["z" + std::to_string(l + 1)] = std::isfinite(r.lpml) ? json(r.lpml) : json(nullptr);
    if (r.zero_cpo > 0) j["zero_cpo"]["z" + std::to_string(l + 1)] = r.zero_cpo;
  }
  if (c.links_name == "simulation" && ds.schema == simulation_schema()) {
    const std::vector<TestPoint> tp = simulation_test_points();
    {
      std::ofstream tf(out_path(o, "test_points.csv"));
      tf << "# " << provenance(c) << "\n" << "x_1,cat_1,cat_2,x_tilde_1\n";
      for (const auto& p : tp) tf << p.x(1) << ',' << p.categories[0] << ',' << p.categories[1] << ',' << p.x_tilde << '\n';
    }
    for (int l = 0; l < ds.d(); ++l) {
      const bool binary = ds.links[l].is_binary();
      const std::string key = "z" + std::to_string(l + 1);
      const ErrResult e = err_mean(ps, tp, l, binary, [l](const TestPoint& t) { return sim_truth_mean(t, l); }, threads);
      j["err_mean"][key] = e.value;
      j["err_dens"][key] = err_dens_simulation(ps, tp, l, binary, threads);
    }
  }
  write_json(out_path(o, "metrics.json"), j);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_describe(const Options& o) {
  const RunConfig c = resolve(o);
  json j = config_to_json(c);
  j["config_hash"] = config_hash(c);
  try {
    const Dataset ds = obtain_data(c);
    j["n"] = ds.n();
    j["empirical_prior"] = hyperparams_to_json(build_prior(c, ds));
  } catch (const ValidationError& e) {
    j["empirical_prior"] = std::string("unavailable: ") + e.what();
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density regression for mixed-type responses with censoring"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "JSON config file");
    s->add_option("--seed", o.seed, "master seed");
    s->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    s->add_option("--out-dir", o.out_dir, "run directory");
    s->add_option("--data", o.data, "data CSV (overrides the config)");
  };
  auto* sim = app.add_subcommand("simulate", "generate the synthetic data set and its hidden truth");
  common(sim);
  auto* fit = app.add_subcommand("fit", "adaptive MCMC at J0 followed by adaptive truncation");
  common(fit);
  fit->add_option("--stop-rule", o.stop_rule, "ess or cess")->check(CLI::IsMember({"ess", "cess"}));
  fit->add_option("--j0", o.j0, "initial truncation level");
  fit->add_option("--particles", o.particles, "number of retained MCMC draws");
  fit->add_flag("--latent", o.latent, "store latent responses in the particle dump");
  auto* pred = app.add_subcommand("predict", "predictive quantities at new covariate rows");
  common(pred);
  pred->add_option("--particles-file", o.particle_file, "particle dump (default <out-dir>/particles.json)");
  pred->add_option("--points", o.points, "CSV of covariate rows")->required();
  pred->add_option("--quantities", o.quantities, "mean density median censoring success");
  auto* check = app.add_subcommand("check", "replicated Kaplan-Meier curves and predictive p-values");
  common(check);
  check->add_option("--particles-file", o.particle_file, "particle dump");
  auto* score = app.add_subcommand("score", "LPML and error metrics");
  common(score);
  score->add_option("--particles-file", o.particle_file, "particle dump");
  auto* desc = app.add_subcommand("describe", "print the resolved config and empirical prior");
  common(desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*sim) return cmd_simulate(o);
    if (*fit) return cmd_fit(o);
    if (*pred) return cmd_predict(o);
    if (*check) return cmd_check(o);
    if (*score) return cmd_score(o);
    if (*desc) return cmd_describe(o);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
