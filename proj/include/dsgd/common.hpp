// common.hpp — error taxonomy, keyed counter-based RNG, thread helpers.
//
// The RNG is deliberately not std::mt19937: every random decision in the
// lab is addressed by a key (seed, stream, node, step), so two coupled
// trajectories share randomness by construction and parallel execution
// cannot reorder draws.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dsgd {

// ── Errors ────────────────────────────────────────────────────────────────

class Error : public std::runtime_error {
 public:
  Error(const std::string& kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(kind) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define DSGD_ERROR_TYPE(NAME)                                       \
  class NAME : public Error {                                       \
   public:                                                          \
    explicit NAME(const std::string& what) : Error(#NAME, what) {}  \
  }

DSGD_ERROR_TYPE(ValidationError);    // structural invariant violated
DSGD_ERROR_TYPE(ConnectivityError);  // gossip matrix does not mix (lambda >= 1 - 1e-12)
DSGD_ERROR_TYPE(RangeError);         // index outside [1, horizon] or [0, m)
DSGD_ERROR_TYPE(ShiftError);         // stepsize too large for the shifted matrix
DSGD_ERROR_TYPE(ShapeError);         // dimension mismatch
DSGD_ERROR_TYPE(ConfigError);        // bad or incomplete configuration
DSGD_ERROR_TYPE(UnsupportedError);   // operation refused for this family/kind
DSGD_ERROR_TYPE(ConvergenceError);   // iteration cap exceeded
DSGD_ERROR_TYPE(DomainExitError);    // unprojected weight left the W_max ball
DSGD_ERROR_TYPE(NumericsError);      // non-finite value produced
DSGD_ERROR_TYPE(InsufficientTraceError);  // analysis needs stride 1
DSGD_ERROR_TYPE(IngestError);        // dataset file failed to parse
DSGD_ERROR_TYPE(DomainError);        // math function called outside its domain

#undef DSGD_ERROR_TYPE

// ── Keyed counter RNG ─────────────────────────────────────────────────────

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fold one component into a key. Chaining splitmix64 keeps distinct
// (seed, stream, node, step) tuples on distinct streams.
inline std::uint64_t mix(std::uint64_t key, std::uint64_t part) {
  return splitmix64(key ^ (part + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2)));
}

inline std::uint64_t key_of(std::uint64_t seed, std::uint64_t stream) {
  return mix(mix(0x6c62272e07bb0142ULL, seed), stream);
}
inline std::uint64_t key_of(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t a) {
  return mix(key_of(seed, stream), a);
}
inline std::uint64_t key_of(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t a, std::uint64_t b) {
  return mix(mix(key_of(seed, stream), a), b);
}

// Counter-based stream: the i-th output is a pure function of (key, i).
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(++counter_)); }

  // Uniform in [0, 1) with 53 significant bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Exact uniform integer in [0, n) (Lemire's multiply-with-rejection).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw DomainError("next_below: n must be positive");
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<__uint128_t>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller; the pair partner is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do { u1 = next_double(); } while (u1 <= 0.0);
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rng

// ── FNV-1a content hash (report/file naming) ─────────────────────────────

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

// ── Deterministic parallel map ────────────────────────────────────────────
//
// Results are written to caller-owned slots, so the reduction order (and
// hence every floating-point bit) is independent of the thread count.

template <typename Fn>
void parallel_for(int jobs, std::size_t count, Fn&& fn) {
  if (count == 0) return;
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex guard;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Least-squares slope of y against x.
inline double regression_slope(const std::vector<double>& x,
                               const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ShapeError("regression_slope: need two samples with equal sizes");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw DomainError("regression_slope: degenerate x values");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace dsgd
