#ifndef DENSREG_CONFIG_HPP
#define DENSREG_CONFIG_HPP

#include "densreg/data.hpp"
#include "densreg/links.hpp"
#include "densreg/mcmc.hpp"
#include "densreg/particles.hpp"
#include "densreg/prior.hpp"
#include "densreg/simgen.hpp"
#include "densreg/smc.hpp"

#include "json.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace densreg {

struct DataConfig {
  std::string path;  ///< empty: simulate
  CovariateSchema schema = simulation_schema();
  int sim_n = 700;
  bool sim_censor = true;
};

struct PriorConfig {
  PriorRecipe recipe = PriorRecipe::Simulation;
  double g = -1.0;  ///< negative: recipe default
};

struct SmcConfig {
  bool enabled = true;
  StopRule rule;
};

struct PredictConfig {
  int grid_points = 512;
  int mc_draws = 10000;
  std::vector<std::string> quantities = {"mean", "density", "median", "censoring", "success"};
};

/// Resolved run configuration. Every field has a default so `{}` is a valid file.
struct RunConfig {
  DataConfig data;
  LinkSet links = simulation_links();
  std::string links_name = "simulation";
  PriorConfig prior;
  McmcSettings mcmc;
  SmcConfig smc;
  PredictConfig predict;
  std::uint64_t seed = 1;
  int threads = 0;  ///< 0: all cores; never part of the hash
};

namespace detail {

inline LinkSpec link_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int cov = j.value("censor_covariate", 1);
  if (kind == "identity") return LinkSpec::identity();
  if (kind == "floor_exp") return LinkSpec::floor_exp(cov);
  if (kind == "sum_constrained") return LinkSpec::sum_constrained(j.at("base").get<int>() - 1, cov);
  if (kind == "sign") return LinkSpec::sign();
  if (kind == "ordinal") return LinkSpec::ordinal(j.at("cutoffs").get<std::vector<double>>());
  throw SchemaError("unknown link kind '" + kind + "'");
}

inline nlohmann::json link_to_json(const LinkSpec& s) {
  nlohmann::json j;
  switch (s.kind) {
    case LinkKind::Identity:
      j["kind"] = "identity";
      break;
    case LinkKind::FloorExpCensored:
      j["kind"] = "floor_exp";
      j["censor_covariate"] = s.censor_covariate;
      break;
    case LinkKind::SumConstrainedFloorExp:
      j["kind"] = "sum_constrained";
      j["base"] = s.base_dim + 1;
      j["censor_covariate"] = s.censor_covariate;
      break;
    case LinkKind::SignThreshold:
      j["kind"] = "sign";
      break;
    case LinkKind::Ordinal:
      j["kind"] = "ordinal";
      j["cutoffs"] = s.cutoffs;
      break;
  }
  return j;
}

inline StopKind stop_kind_from(const std::string& s) {
  if (s == "ess") return StopKind::ESS;
  if (s == "cess") return StopKind::CESS;
  throw ValidationError("stop rule must be 'ess' or 'cess'");
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("data")) {
      const auto& d = j["data"];
      c.data.path = d.value("path", std::string{});
      if (d.contains("numeric")) c.data.schema.p = d["numeric"].get<int>();
      if (d.contains("categorical_levels")) c.data.schema.categorical_levels = d["categorical_levels"].get<std::vector<int>>();
      c.data.sim_n = d.value("n", c.data.sim_n);
      c.data.sim_censor = d.value("censor", c.data.sim_censor);
    }
    if (j.contains("links")) {
      const auto& l = j["links"];
      if (l.is_string()) {
        c.links_name = l.get<std::string>();
        if (c.links_name == "simulation") {
          c.links = simulation_links();
        } else if (c.links_name == "application") {
          c.links = colombia_links();
        } else {
          throw SchemaError("unknown link set '" + c.links_name + "'");
        }
      } else {
        c.links.clear();
        c.links_name = "custom";
        for (const auto& s : l) c.links.push_back(detail::link_from_json(s));
      }
    }
    if (j.contains("prior")) {
      const auto& p = j["prior"];
      const std::string recipe = p.value("recipe", std::string("simulation"));
      if (recipe == "simulation") {
        c.prior.recipe = PriorRecipe::Simulation;
      } else if (recipe == "application") {
        c.prior.recipe = PriorRecipe::Application;
      } else {
        throw SchemaError("prior recipe must be 'simulation' or 'application'");
      }
      c.prior.g = p.value("g", c.prior.g);
    }
    if (j.contains("mcmc")) {
      const auto& m = j["mcmc"];
      c.mcmc.J0 = m.value("J0", c.mcmc.J0);
      c.mcmc.burnin = m.value("burnin", c.mcmc.burnin);
      c.mcmc.iters = m.value("iters", c.mcmc.iters);
      c.mcmc.thin = m.value("thin", c.mcmc.thin);
      c.mcmc.adapt.target_accept = m.value("target_accept", c.mcmc.adapt.target_accept);
      c.mcmc.adapt.warmup = m.value("warmup", c.mcmc.adapt.warmup);
    }
    if (j.contains("smc")) {
      const auto& s = j["smc"];
      c.smc.enabled = s.value("enabled", c.smc.enabled);
      if (s.contains("stop_rule")) c.smc.rule.kind = detail::stop_kind_from(s["stop_rule"].get<std::string>());
      if (s.contains("delta") && !s["delta"].is_null()) c.smc.rule.delta = s["delta"].get<double>();
      c.smc.rule.I = s.value("I", c.smc.rule.I);
      c.smc.rule.m_star = s.value("m_star", c.smc.rule.m_star);
      c.smc.rule.ess_resample_threshold = s.value("resample_threshold", c.smc.rule.ess_resample_threshold);
      c.smc.rule.max_extra_components = s.value("max_extra_components", c.smc.rule.max_extra_components);
    }
    if (j.contains("predict")) {
      const auto& p = j["predict"];
      c.predict.grid_points = p.value("grid_points", c.predict.grid_points);
      c.predict.mc_draws = p.value("mc_draws", c.predict.mc_draws);
      if (p.contains("quantities")) c.predict.quantities = p["quantities"].get<std::vector<std::string>>();
    }
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  if (c.links_name == "simulation") c.links = simulation_links(c.data.sim_censor);
  c.data.schema.validate();
  validate_links(c.links);
  if (c.mcmc.J0 < 1 || c.mcmc.iters < 1 || c.mcmc.thin < 1 || c.mcmc.burnin < 0) {
    throw ValidationError("mcmc settings need J0 >= 1, iters >= 1, thin >= 1, burnin >= 0");
  }
  if (c.data.sim_n < 1) throw ValidationError("data.n must be positive");
  return c;
}

/// Resolved configuration as JSON. Thread count is left out: it never changes results.
inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["data"] = {{"path", c.data.path},
               {"numeric", c.data.schema.p},
               {"categorical_levels", c.data.schema.categorical_levels},
               {"n", c.data.sim_n},
               {"censor", c.data.sim_censor}};
  nlohmann::json links = nlohmann::json::array();
  for (const auto& s : c.links) links.push_back(detail::link_to_json(s));
  j["links"] = links;
  j["prior"] = {{"recipe", c.prior.recipe == PriorRecipe::Simulation ? "simulation" : "application"},
                {"g", c.prior.g < 0.0 ? default_g_factor(c.prior.recipe) : c.prior.g}};
  j["mcmc"] = {{"J0", c.mcmc.J0},         {"burnin", c.mcmc.burnin}, {"iters", c.mcmc.iters},
               {"thin", c.mcmc.thin},     {"target_accept", c.mcmc.adapt.target_accept},
               {"warmup", c.mcmc.adapt.warmup}};
  j["smc"] = {{"enabled", c.smc.enabled},
              {"stop_rule", c.smc.rule.kind == StopKind::ESS ? "ess" : "cess"},
              {"delta", c.smc.rule.delta < 0.0 ? nlohmann::json(nullptr) : nlohmann::json(c.smc.rule.delta)},
              {"I", c.smc.rule.I},
              {"m_star", c.smc.rule.m_star},
              {"resample_threshold", c.smc.rule.ess_resample_threshold},
              {"max_extra_components", c.smc.rule.max_extra_components}};
  j["predict"] = {{"grid_points", c.predict.grid_points},
                  {"mc_draws", c.predict.mc_draws},
                  {"quantities", c.predict.quantities}};
  j["seed"] = c.seed;
  return j;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_to_json(c).dump())));
  return buf;
}

inline RunConfig load_config(const std::string& path) {
  if (path.empty()) return config_from_json(nlohmann::json::object());
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config file: ") + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json hyperparams_to_json(const Hyperparams& h) {
  using detail::matrix_to_json;
  using detail::vector_to_json;
  return {{"beta0", matrix_to_json(h.beta0)}, {"U", matrix_to_json(h.U)},       {"sigma0", matrix_to_json(h.sigma0)},
          {"nu", h.nu},                       {"mu0", vector_to_json(h.mu0)},   {"u", vector_to_json(h.u)},
          {"alpha", vector_to_json(h.alpha)}, {"gamma", vector_to_json(h.gamma)}, {"varrho", matrix_to_json(h.varrho)},
          {"zeta1", h.zeta1},                 {"zeta2", h.zeta2}};
}

/// Covariate rows x_1..x_p, cat_1..cat_k for prediction; '#' lines are skipped.
inline std::vector<RawCovariates> load_points(const std::string& path, const CovariateSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open covariate file " + path);
  std::string line;
  std::vector<std::string> header;
  std::vector<RawCovariates> out;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (header.empty()) {
      header = cells;
      if (static_cast<int>(header.size()) != schema.p + schema.num_categorical()) {
        throw ValidationError("covariate file needs " + std::to_string(schema.p + schema.num_categorical()) + " columns");
      }
      continue;
    }
    ++row;
    if (cells.size() != header.size()) throw ValidationError("row " + std::to_string(row) + " has the wrong column count");
    RawCovariates rc;
    for (int a = 0; a < schema.p; ++a) rc.numeric.push_back(detail::parse_double(cells[a], row, header[a]));
    for (int a = 0; a < schema.num_categorical(); ++a) {
      const double v = detail::parse_double(cells[schema.p + a], row, header[schema.p + a]);
      rc.categories.push_back(static_cast<int>(v));
    }
    expand_dummies(rc, schema);
    out.push_back(std::move(rc));
  }
  if (out.empty()) throw ValidationError("covariate file has no rows");
  return out;
}

}  // namespace densreg

#endif  // DENSREG_CONFIG_HPP
