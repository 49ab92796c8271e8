#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpmil {

// Raised for malformed or inconsistent input data (CSV, config, shapes).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a numerical routine fails beyond recovery (factorization,
// divergence, invalid state).
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// logistic(x) = 1 / (1 + exp(-x)), evaluated without overflow for any x.
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(cosh(x)) = |x| + log1p(exp(-2|x|)) - log 2; exact for large |x| where
// cosh overflows.
inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

// Bernoulli entropy in nats; p must already lie in (0, 1).
inline double bernoulli_entropy(double p) {
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

// log(mean(exp(v))) shifted by the max for stability.
inline double log_mean_exp(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("log_mean_exp: empty input");
  double mx = v[0];
  for (double x : v)
    if (x > mx) mx = x;
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s / static_cast<double>(v.size()));
}

// SplitMix64 finalizer; used to derive independent RNG seeds from a base
// seed plus a purpose tag, so every stochastic stage owns its own stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
  return splitmix64(base ^ splitmix64(tag));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(base, tag) ^ splitmix64(index + 1));
}

}  // namespace gpmil
