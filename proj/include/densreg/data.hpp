#ifndef DENSREG_DATA_HPP
#define DENSREG_DATA_HPP

#include "densreg/links.hpp"
#include "densreg/types.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace densreg {

/// p numeric covariates followed by categorical covariates with R_k levels each.
struct CovariateSchema {
  int p = 0;
  std::vector<int> categorical_levels;

  int q() const {
    int q = p;
    for (int r : categorical_levels) q += r - 1;
    return q;
  }
  /// Length of an expanded row including the intercept.
  int width() const { return q() + 1; }
  int num_categorical() const { return static_cast<int>(categorical_levels.size()); }

  void validate() const {
    if (p < 0) throw SchemaError("negative numeric covariate count");
    for (int r : categorical_levels) {
      if (r < 2) throw SchemaError("categorical covariates need at least two levels");
    }
  }

  bool operator==(const CovariateSchema&) const = default;
};

/// A covariate vector before dummy expansion. Category indices are 1-based.
struct RawCovariates {
  std::vector<double> numeric;
  std::vector<int> categories;

  bool operator==(const RawCovariates&) const = default;
};

/// Intercept-prepended row (1, x_1..x_p, dummies). Level 1 of every categorical
/// covariate is the reference and maps to all-zero dummies.
inline Vector expand_dummies(const RawCovariates& raw, const CovariateSchema& schema) {
  if (static_cast<int>(raw.numeric.size()) != schema.p ||
      static_cast<int>(raw.categories.size()) != schema.num_categorical()) {
    throw SchemaError("covariate row does not match the schema width");
  }
  Vector row = Vector::Zero(schema.width());
  row(0) = 1.0;
  for (int k = 0; k < schema.p; ++k) row(1 + k) = raw.numeric[k];
  int offset = 1 + schema.p;
  for (int c = 0; c < schema.num_categorical(); ++c) {
    const int levels = schema.categorical_levels[c];
    const int level = raw.categories[c];
    if (level < 1 || level > levels) {
      throw SchemaError("category index " + std::to_string(level) + " out of range 1.." + std::to_string(levels));
    }
    if (level > 1) row(offset + level - 2) = 1.0;
    offset += levels - 1;
  }
  return row;
}

struct Dataset {
  CovariateSchema schema;
  LinkSet links;
  std::vector<RawCovariates> raw;
  Matrix X;  ///< n x (q+1), intercept in column 0
  std::vector<ResponseRecord> Z;

  int n() const { return static_cast<int>(Z.size()); }
  int d() const { return static_cast<int>(links.size()); }
  int q() const { return schema.q(); }
  Vector x(int i) const { return X.row(i).transpose(); }
  std::span<const double> z(int i) const { return Z[i].z; }
};

/// Builds and validates a dataset. `flags` may be empty; otherwise it must agree
/// with the censoring implied by the observed values.
inline Dataset make_dataset(const CovariateSchema& schema, const LinkSet& links, std::vector<RawCovariates> raw,
                            const std::vector<std::vector<double>>& z,
                            const std::vector<std::vector<bool>>& flags = {}) {
  schema.validate();
  validate_links(links);
  if (raw.size() != z.size()) throw ValidationError("covariate and response row counts differ");
  if (!flags.empty() && flags.size() != z.size()) throw ValidationError("censor flag row count differs");
  for (const auto& s : links) {
    if (s.is_event_age() && s.censor_covariate > schema.p) {
      throw SchemaError("censoring covariate must be numeric");
    }
  }
  Dataset ds;
  ds.schema = schema;
  ds.links = links;
  const int n = static_cast<int>(raw.size());
  const int d = static_cast<int>(links.size());
  ds.X.resize(n, schema.width());
  ds.Z.resize(n);
  for (int i = 0; i < n; ++i) {
    ds.X.row(i) = expand_dummies(raw[i], schema).transpose();
    if (static_cast<int>(z[i].size()) != d) {
      throw ValidationError("row " + std::to_string(i + 1) + ": expected " + std::to_string(d) + " responses");
    }
    const Vector xi = ds.X.row(i).transpose();
    if (auto msg = check_record(links, z[i], xi)) {
      throw ValidationError("row " + std::to_string(i + 1) + ": " + *msg);
    }
    ds.Z[i].z = z[i];
    ds.Z[i].censored = derive_censor_flags(links, z[i]);
    if (!flags.empty()) {
      if (flags[i].size() != static_cast<std::size_t>(d)) throw ValidationError("censor flag width mismatch");
      for (int l = 0; l < d; ++l) {
        if (flags[i][l] != ds.Z[i].censored[l]) {
          throw ValidationError("row " + std::to_string(i + 1) + ": censor flag disagrees with z_" +
                                std::to_string(l + 1));
        }
      }
    }
  }
  ds.raw = std::move(raw);
  return ds;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    out.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, int row, const std::string& column) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("row " + std::to_string(row) + ", column " + column + ": cannot parse '" + s + "'");
  }
  return v;
}

}  // namespace detail

/// Reads the CSV layout x_1..x_p, cat_1..cat_k, z_1..z_d [, cens_1..cens_d].
/// Lines starting with '#' are provenance comments and are skipped.
inline Dataset load_dataset(const std::string& path, const CovariateSchema& schema, const LinkSet& links) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file " + path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  const int p = schema.p;
  const int k = schema.num_categorical();
  const int d = static_cast<int>(links.size());
  const bool with_flags = static_cast<int>(header.size()) == p + k + 2 * d;
  if (static_cast<int>(header.size()) != p + k + d && !with_flags) {
    throw ValidationError("header has " + std::to_string(header.size()) + " columns, expected " +
                          std::to_string(p + k + d) + " or " + std::to_string(p + k + 2 * d));
  }
  std::vector<RawCovariates> raw;
  std::vector<std::vector<double>> z;
  std::vector<std::vector<bool>> flags;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    ++row;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " columns, expected " + std::to_string(header.size()));
    }
    RawCovariates rc;
    int col = 0;
    for (int a = 0; a < p; ++a, ++col) rc.numeric.push_back(detail::parse_double(cells[col], row, header[col]));
    for (int a = 0; a < k; ++a, ++col) {
      const double v = detail::parse_double(cells[col], row, header[col]);
      if (v != std::floor(v)) throw ValidationError("row " + std::to_string(row) + ": category must be an integer");
      rc.categories.push_back(static_cast<int>(v));
    }
    std::vector<double> zr;
    for (int a = 0; a < d; ++a, ++col) zr.push_back(detail::parse_double(cells[col], row, header[col]));
    if (with_flags) {
      std::vector<bool> fr;
      for (int a = 0; a < d; ++a, ++col) {
        const double v = detail::parse_double(cells[col], row, header[col]);
        if (v != 0.0 && v != 1.0) throw ValidationError("row " + std::to_string(row) + ": censor flag must be 0/1");
        fr.push_back(v == 1.0);
      }
      flags.push_back(std::move(fr));
    }
    raw.push_back(std::move(rc));
    z.push_back(std::move(zr));
  }
  return make_dataset(schema, links, std::move(raw), z, flags);
}

inline std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(v);
    return os.str();
  }
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void save_dataset(const std::string& path, const Dataset& ds, const std::string& comment = {},
                         bool with_flags = true) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  if (!comment.empty()) out << "# " << comment << "\n";
  std::vector<std::string> cols;
  for (int a = 0; a < ds.schema.p; ++a) cols.push_back("x_" + std::to_string(a + 1));
  for (int a = 0; a < ds.schema.num_categorical(); ++a) cols.push_back("cat_" + std::to_string(a + 1));
  for (int a = 0; a < ds.d(); ++a) cols.push_back("z_" + std::to_string(a + 1));
  if (with_flags) {
    for (int a = 0; a < ds.d(); ++a) cols.push_back("cens_" + std::to_string(a + 1));
  }
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << "\n";
  for (int i = 0; i < ds.n(); ++i) {
    bool first = true;
    auto put = [&](const std::string& s) {
      out << (first ? "" : ",") << s;
      first = false;
    };
    for (double v : ds.raw[i].numeric) put(format_number(v));
    for (int v : ds.raw[i].categories) put(std::to_string(v));
    for (double v : ds.Z[i].z) put(format_number(v));
    if (with_flags) {
      for (bool c : ds.Z[i].censored) put(c ? "1" : "0");
    }
    out << "\n";
  }
}

}  // namespace densreg

#endif  // DENSREG_DATA_HPP
