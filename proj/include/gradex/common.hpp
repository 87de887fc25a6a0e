// Shared aliases, error types and the deterministic RNG used everywhere.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gradex {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class SingularMetricError : public Error {
 public:
  using Error::Error;
};

class DegenerateCloudError : public Error {
 public:
  using Error::Error;
};

class EmbeddingFailureError : public Error {
 public:
  using Error::Error;
};

class FitFailureError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class IntegrationBlowupError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MaxIterationsError : public Error {
 public:
  using Error::Error;
};

class ChartFailureError : public Error {
 public:
  using Error::Error;
};

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string("non-finite value in ") + what);
}

inline void require_finite(const Eigen::Ref<const Mat>& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string("non-finite value in ") + what);
}

// Counter-free deterministic RNG.  All randomness in the project flows
// through this class so that a fixed seed reproduces every artifact
// bit-for-bit across platforms; distributions from <random> are avoided
// because their outputs are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t bits() { return next(); }

  // uniform in [0, 1) with 53 random mantissa bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the spare cosine partner is deliberately discarded to keep
  // the stream position independent of call parity.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vec normal_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Fisher-Yates; used for index shuffles in subsampling.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next() % i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  // splitmix64: tiny, well-mixed, and identical on every platform.
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

// Derive an independent stream for sub-task `salt` of a run seeded by `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  Rng r(seed ^ (0x632be59bd9b4e019ull * (salt + 1)));
  return r.bits();
}

// Shortest round-trippable decimal form of a double (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double sq(double x) { return x * x; }

}  // namespace gradex
