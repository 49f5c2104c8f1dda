#ifndef DENSREG_PARTICLES_HPP
#define DENSREG_PARTICLES_HPP

#include "densreg/model.hpp"
#include "densreg/numeric.hpp"
#include "densreg/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace densreg {

inline constexpr int kParticleSchemaVersion = 1;

struct ParticleSet {
  std::vector<MixtureState> particles;
  Vector log_weights;  ///< unnormalized; -inf marks a dead particle
  std::vector<std::uint64_t> seeds;

  int M() const { return static_cast<int>(particles.size()); }
  int J() const { return particles.empty() ? 0 : particles.front().J(); }

  /// Normalized weights; dead particles get exactly zero.
  Vector normalized_weights() const {
    const double norm = log_sum_exp(log_weights);
    if (!std::isfinite(norm)) throw NumericError("every particle weight is zero");
    Vector w(log_weights.size());
    for (Eigen::Index m = 0; m < w.size(); ++m) {
      w(m) = log_weights(m) == -kInf ? 0.0 : std::exp(log_weights(m) - norm);
    }
    return w;
  }
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline Matrix json_to_matrix(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw SchemaError("ragged matrix in particle file");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline Vector json_to_vector(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = j[k].get<double>();
  return v;
}

}  // namespace detail

/// Serializes a particle set. Latent matrices are included only on request since
/// the predictive and checking layers never read them.
inline nlohmann::json particles_to_json(const ParticleSet& ps, bool include_latent = false) {
  using nlohmann::json;
  json out;
  out["schema_version"] = kParticleSchemaVersion;
  out["M"] = ps.M();
  out["J"] = ps.J();
  json lw = json::array();
  for (Eigen::Index m = 0; m < ps.log_weights.size(); ++m) {
    const double v = ps.log_weights(m);
    lw.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  }
  out["log_weights"] = std::move(lw);
  json seeds = json::array();
  for (auto s : ps.seeds) seeds.push_back(s);
  out["seeds"] = std::move(seeds);
  json parts = json::array();
  for (const auto& st : ps.particles) {
    json p;
    p["v"] = detail::vector_to_json(st.v);
    json comps = json::array();
    for (int j = 0; j < st.J(); ++j) {
      json c;
      c["beta"] = detail::matrix_to_json(st.theta[j].beta);
      c["sigma"] = detail::matrix_to_json(st.theta[j].sigma);
      c["mu"] = detail::vector_to_json(st.psi[j].mu);
      c["tau"] = detail::vector_to_json(st.psi[j].tau);
      c["rho"] = detail::vector_to_json(st.psi[j].rho);
      comps.push_back(std::move(c));
    }
    p["components"] = std::move(comps);
    if (include_latent) p["y"] = detail::matrix_to_json(st.y);
    parts.push_back(std::move(p));
  }
  out["particles"] = std::move(parts);
  return out;
}

inline ParticleSet particles_from_json(const nlohmann::json& in) {
  if (!in.contains("schema_version") || in["schema_version"].get<int>() != kParticleSchemaVersion) {
    throw SchemaError("unsupported particle file schema version");
  }
  ParticleSet ps;
  const auto& lw = in.at("log_weights");
  ps.log_weights.resize(static_cast<Eigen::Index>(lw.size()));
  for (std::size_t m = 0; m < lw.size(); ++m) {
    ps.log_weights(static_cast<Eigen::Index>(m)) = lw[m].is_null() ? -kInf : lw[m].get<double>();
  }
  for (const auto& s : in.at("seeds")) ps.seeds.push_back(s.get<std::uint64_t>());
  for (const auto& p : in.at("particles")) {
    MixtureState st;
    st.v = detail::json_to_vector(p.at("v"));
    for (const auto& c : p.at("components")) {
      st.theta.push_back({detail::json_to_matrix(c.at("beta")), detail::json_to_matrix(c.at("sigma"))});
      st.psi.push_back({detail::json_to_vector(c.at("mu")), detail::json_to_vector(c.at("tau")),
                        detail::json_to_vector(c.at("rho"))});
    }
    if (static_cast<int>(st.theta.size()) != st.J()) throw SchemaError("component count does not match sticks");
    if (p.contains("y")) st.y = detail::json_to_matrix(p.at("y"));
    ps.particles.push_back(std::move(st));
  }
  if (ps.log_weights.size() != ps.M()) throw SchemaError("weight count does not match particle count");
  return ps;
}

inline void save_particles(const std::string& path, const ParticleSet& ps, const nlohmann::json& meta = {},
                           bool include_latent = false) {
  nlohmann::json j = particles_to_json(ps, include_latent);
  if (!meta.is_null()) j["meta"] = meta;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump() << "\n";
}

inline ParticleSet load_particles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open particle file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed particle file: ") + e.what());
  }
  return particles_from_json(j);
}

}  // namespace densreg

#endif  // DENSREG_PARTICLES_HPP
