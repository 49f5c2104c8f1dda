#ifndef DENSREG_TYPES_HPP
#define DENSREG_TYPES_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace densreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, schema violations, inconsistent records.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical breakdown (non-SPD matrices, underflowing densities, dead particle sets).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Observed response vector of one individual. `censored[l]` is true when only a
/// lower bound on the event age is known (encoded as z[l] == 0 for event ages).
struct ResponseRecord {
  std::vector<double> z;
  std::vector<bool> censored;
};

}  // namespace densreg

#endif  // DENSREG_TYPES_HPP
