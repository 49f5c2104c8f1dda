#ifndef DENSREG_LINKS_HPP
#define DENSREG_LINKS_HPP

#include "densreg/numeric.hpp"
#include "densreg/types.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace densreg {

enum class LinkKind {
  Identity,                ///< z = y
  FloorExpCensored,        ///< z = floor(exp(y)) if exp(y) < x_c + 1, else 0 (censored)
  SumConstrainedFloorExp,  ///< z = floor(exp(y_base) + exp(y)) with the same censoring rule
  SignThreshold,           ///< z = 1{y >= 0}
  Ordinal,                 ///< z = #{a : y >= cutoff_a}, fixed increasing cutoffs
};

/// Link between one latent coordinate and its observed response. Dimensions are
/// zero-based: `base_dim` refers to an earlier response, `censor_covariate` to a
/// column of the intercept-prepended covariate row (1 is the first numeric covariate).
struct LinkSpec {
  LinkKind kind = LinkKind::Identity;
  int base_dim = -1;
  int censor_covariate = 1;
  std::vector<double> cutoffs;

  static LinkSpec identity() { return {}; }
  static LinkSpec floor_exp(int censor_covariate = 1) { return {LinkKind::FloorExpCensored, -1, censor_covariate, {}}; }
  static LinkSpec sum_constrained(int base_dim, int censor_covariate = 1) {
    return {LinkKind::SumConstrainedFloorExp, base_dim, censor_covariate, {}};
  }
  static LinkSpec sign() { return {LinkKind::SignThreshold, -1, 1, {0.0}}; }
  static LinkSpec ordinal(std::vector<double> cutoffs) { return {LinkKind::Ordinal, -1, 1, std::move(cutoffs)}; }

  bool is_event_age() const {
    return kind == LinkKind::FloorExpCensored || kind == LinkKind::SumConstrainedFloorExp;
  }
  bool is_binary() const { return kind == LinkKind::SignThreshold; }
  /// Event ages are censored at censor_covariate + 1 unless censor_covariate is -1.
  bool has_horizon() const { return censor_covariate >= 1; }
};

using LinkSet = std::vector<LinkSpec>;

/// Two ages at event followed by a binary response.
inline LinkSet simulation_links(bool censored = true) {
  const int c = censored ? 1 : -1;
  return {LinkSpec::floor_exp(c), LinkSpec::floor_exp(c), LinkSpec::sign()};
}

/// Debut age, union age, age at first child constrained to follow debut, work status.
inline LinkSet colombia_links() {
  return {LinkSpec::floor_exp(), LinkSpec::floor_exp(), LinkSpec::sum_constrained(0), LinkSpec::sign()};
}

/// Throws SchemaError when the ordering or cutoffs are unusable.
inline void validate_links(const LinkSet& links) {
  for (std::size_t l = 0; l < links.size(); ++l) {
    const auto& s = links[l];
    if (s.kind == LinkKind::SumConstrainedFloorExp) {
      if (s.base_dim < 0 || s.base_dim >= static_cast<int>(l)) {
        throw SchemaError("sum-constrained link " + std::to_string(l + 1) + " must reference an earlier response");
      }
      if (links[s.base_dim].kind != LinkKind::FloorExpCensored) {
        throw SchemaError("sum-constrained link must build on a floor-exp response");
      }
    }
    if (s.kind == LinkKind::Ordinal || s.kind == LinkKind::SignThreshold) {
      if (s.cutoffs.empty()) throw SchemaError("threshold link needs at least one cutoff");
      for (std::size_t a = 1; a < s.cutoffs.size(); ++a) {
        if (!(s.cutoffs[a - 1] < s.cutoffs[a])) throw SchemaError("ordinal cutoffs must be increasing");
      }
    }
    if (s.is_event_age() && s.censor_covariate < 1 && s.censor_covariate != -1) {
      throw SchemaError("censor covariate must be a covariate column or -1 for none");
    }
  }
}

/// Open interval (lo, hi) on the latent scale; either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  bool valid() const { return lo < hi; }
  bool contains(double y) const { return lo < y && y < hi; }
};

/// x_c + 1, or +inf without a censoring covariate.
inline double censor_horizon(const Vector& x, int censor_covariate) {
  return censor_covariate >= 1 ? x(censor_covariate) + 1.0 : kInf;
}

/// Observed value h_l(y, x).
inline double apply_link(const LinkSet& links, int l, std::span<const double> y, const Vector& x) {
  const auto& s = links[l];
  switch (s.kind) {
    case LinkKind::Identity:
      return y[l];
    case LinkKind::FloorExpCensored: {
      const double e = std::exp(y[l]);
      return e < censor_horizon(x, s.censor_covariate) ? std::floor(e) : 0.0;
    }
    case LinkKind::SumConstrainedFloorExp: {
      const double e = std::exp(y[s.base_dim]) + std::exp(y[l]);
      return e < censor_horizon(x, s.censor_covariate) ? std::floor(e) : 0.0;
    }
    case LinkKind::SignThreshold:
    case LinkKind::Ordinal: {
      double z = 0.0;
      for (double c : s.cutoffs) z += (y[l] >= c) ? 1.0 : 0.0;
      return z;
    }
  }
  return 0.0;
}

/// Whether h_l(y, x) lands in the censored region.
inline bool link_censored(const LinkSet& links, int l, std::span<const double> y, const Vector& x) {
  const auto& s = links[l];
  if (!s.is_event_age()) return false;
  double e = std::exp(y[l]);
  if (s.kind == LinkKind::SumConstrainedFloorExp) e += std::exp(y[s.base_dim]);
  return !(e < censor_horizon(x, s.censor_covariate));
}

/// Whether the bounds of dimension l read earlier latent coordinates.
inline bool bounds_depend_on_prefix(const LinkSpec& s) { return s.kind == LinkKind::SumConstrainedFloorExp; }

/// Inverse of the link for dimension l: the latent interval mapped to z[l].
/// Reads y_prefix[l'] only for l' < l. Returns an interval with lo >= hi when the
/// record and prefix are inconsistent; callers reject such proposals.
inline Interval bounds_for(const LinkSet& links, int l, std::span<const double> z, const Vector& x,
                           std::span<const double> y_prefix) {
  const auto& s = links[l];
  switch (s.kind) {
    case LinkKind::Identity:
      return {z[l], z[l]};  // degenerate: identity responses are not latent
    case LinkKind::FloorExpCensored: {
      if (z[l] == 0.0 && s.has_horizon()) return {std::log(censor_horizon(x, s.censor_covariate)), kInf};
      return {z[l] > 0.0 ? std::log(z[l]) : -kInf, std::log(z[l] + 1.0)};
    }
    case LinkKind::SumConstrainedFloorExp: {
      const double e1 = std::exp(y_prefix[s.base_dim]);
      if (z[l] == 0.0 && s.has_horizon()) {
        const double gap = censor_horizon(x, s.censor_covariate) - e1;
        return {gap > 0.0 ? std::log(gap) : -kInf, kInf};
      }
      const double gap = z[l] - e1;
      const double upper = gap + 1.0;
      if (!(upper > 0.0)) return {0.0, 0.0};
      return {gap > 0.0 ? std::log(gap) : -kInf, std::log(upper)};
    }
    case LinkKind::SignThreshold:
    case LinkKind::Ordinal: {
      const int k = static_cast<int>(z[l]);
      const int a = static_cast<int>(s.cutoffs.size());
      if (k < 0 || k > a) return {0.0, 0.0};
      return {k == 0 ? -kInf : s.cutoffs[k - 1], k == a ? kInf : s.cutoffs[k]};
    }
  }
  return {};
}

/// True iff lo < y_l < hi for all l, bounds recomputed from y itself.
inline bool log_in_bounds(const LinkSet& links, std::span<const double> y, std::span<const double> z, const Vector& x) {
  for (int l = 0; l < static_cast<int>(links.size()); ++l) {
    if (links[l].kind == LinkKind::Identity) continue;
    if (!bounds_for(links, l, z, x, y).contains(y[l])) return false;
  }
  return true;
}

inline bool log_in_bounds(std::span<const double> y, std::span<const Interval> bounds) {
  for (std::size_t l = 0; l < y.size(); ++l) {
    if (!bounds[l].contains(y[l])) return false;
  }
  return true;
}

/// Checks one observed record against the link semantics. Returns a message on failure.
inline std::optional<std::string> check_record(const LinkSet& links, std::span<const double> z, const Vector& x) {
  auto is_int = [](double v) { return std::isfinite(v) && v == std::floor(v); };
  for (int l = 0; l < static_cast<int>(links.size()); ++l) {
    const auto& s = links[l];
    const std::string tag = "z_" + std::to_string(l + 1);
    switch (s.kind) {
      case LinkKind::Identity:
        if (!std::isfinite(z[l])) return tag + " must be finite";
        break;
      case LinkKind::FloorExpCensored:
      case LinkKind::SumConstrainedFloorExp: {
        if (!is_int(z[l]) || z[l] < 0.0) return tag + " must be a nonnegative integer age";
        if (s.has_horizon() && z[l] > x(s.censor_covariate)) return tag + " exceeds the censoring covariate";
        if (s.kind == LinkKind::SumConstrainedFloorExp && z[l] != 0.0) {
          const double base = z[s.base_dim];
          if (base == 0.0) return tag + " observed while z_" + std::to_string(s.base_dim + 1) + " is censored";
          if (z[l] < base) return tag + " precedes z_" + std::to_string(s.base_dim + 1);
        }
        break;
      }
      case LinkKind::SignThreshold:
      case LinkKind::Ordinal:
        if (!is_int(z[l]) || z[l] < 0.0 || z[l] > static_cast<double>(s.cutoffs.size())) {
          return tag + " outside the category range";
        }
        break;
    }
  }
  return std::nullopt;
}

/// Censor flags implied by the observed values.
inline std::vector<bool> derive_censor_flags(const LinkSet& links, std::span<const double> z) {
  std::vector<bool> c(links.size(), false);
  for (std::size_t l = 0; l < links.size(); ++l) c[l] = links[l].is_event_age() && links[l].has_horizon() && z[l] == 0.0;
  return c;
}

}  // namespace densreg

#endif  // DENSREG_LINKS_HPP
