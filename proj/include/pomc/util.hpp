#ifndef POMC_UTIL_HPP
#define POMC_UTIL_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pomc {

// All engine arithmetic is carried out on natural-log values. kLogZero is
// the additive identity of the (+) operation below.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// x (+) y: log(exp(x) + exp(y)) without leaving the log domain.
inline double log_add(double x, double y) {
  if (x == kLogZero) return y;
  if (y == kLogZero) return x;
  const double hi = x > y ? x : y;
  const double lo = x > y ? y : x;
  return hi + std::log1p(std::exp(lo - hi));
}

inline void log_accum(double& acc, double x) { acc = log_add(acc, x); }

// log(n choose k) via lgamma; exact to double rounding for the sizes used here.
inline double log_binomial(int n, int k) {
  if (k < 0 || k > n) return kLogZero;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// |a - b| scaled by the larger magnitude (floored at 1), used for log-domain
// exactness assertions.
inline double rel_diff(double a, double b) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

// Errors map to CLI exit codes: config 2, resource 3, io 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG. The engine is std::mt19937_64 (bit-exact by the
// standard); the double and bounded-int draws are hand-rolled so results do
// not depend on library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ConfigError("Rng::below: empty range");
    const std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x > limit);
    return x % n;
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  // Stream seed for an indexed worker (chain), independent per index.
  static std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(splitmix64(base) ^ splitmix64(index + 0x51ed270b0f4deULL));
  }

 private:
  std::mt19937_64 eng_;
};

// Node sets are bitmasks; the supported range is n <= 64.
inline int popcount64(std::uint64_t m) { return std::popcount(m); }
inline int lowest_bit(std::uint64_t m) { return std::countr_zero(m); }

template <class F>
inline void for_each_bit(std::uint64_t mask, F&& f) {
  while (mask) {
    const int b = std::countr_zero(mask);
    f(b);
    mask &= mask - 1;
  }
}

// FNV-1a, used for dataset digests in score cache headers.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pomc

#endif  // POMC_UTIL_HPP
