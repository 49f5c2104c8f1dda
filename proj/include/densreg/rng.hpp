#ifndef DENSREG_RNG_HPP
#define DENSREG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace densreg {

/// splitmix64 finalizer; used to derive independent stream seeds from a master seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the stream identified by `path` under `master`. Streams are stable
/// regardless of how work is scheduled across threads.
inline std::uint64_t stream_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632BE59BD9B4E019ULL));
  return s;
}

/// Stream tags under the master seed.
enum StreamTag : std::uint64_t {
  kStreamInit = 1,
  kStreamChain = 2,
  kStreamParticle = 3,
  kStreamSmc = 4,
  kStreamPredict = 5,
  kStreamReplicate = 6,
  kStreamPrior = 7,
  kStreamSimulate = 8,
};

/// Random source used throughout the library. Wraps a 64-bit Mersenne twister with
/// the handful of distributions the samplers need.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  void seed(std::uint64_t s) {
    engine_.seed(s);
    normal_.reset();
  }

  std::mt19937_64& engine() { return engine_; }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Gamma with shape/rate parameterization.
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(engine_);
  }

  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

  double chi_squared(double dof) { return gamma(0.5 * dof, 0.5); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Index drawn from unnormalized nonnegative weights.
  template <class Range>
  std::size_t categorical(const Range& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    std::size_t k = 0;
    for (double w : weights) {
      if (u < w) return k;
      u -= w;
      ++k;
    }
    return k == 0 ? 0 : k - 1;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace densreg

#endif  // DENSREG_RNG_HPP
