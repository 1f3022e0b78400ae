#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace polygas {

/** @brief Base class of all library errors. */
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter combination (divisibility, ranges).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Enumeration or quadrature size above the configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Solver or quadrature failed to reach tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Non-positive quadratic form or unstable integrand.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// A series whose ratio is not below one.
class DivergenceError : public Error {
 public:
  using Error::Error;
  DivergenceError(const std::string& what, std::string stage_name, double ratio)
      : Error(what), stage(std::move(stage_name)), value(ratio) {}
  std::string stage;
  double value = 0.0;
};

/// A named precondition of the bound pipeline does not hold.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::string binding_condition)
      : Error(what), binding(std::move(binding_condition)) {}
  std::string binding;
};

inline std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

/// Worker count, capped by the POLYGAS_THREADS environment variable.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("POLYGAS_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

/**
 * @brief Runs f(i) for i in [0, n) on up to worker_count() threads.
 *
 * Each index writes only its own slot, so callers get deterministic
 * results by reducing the slots in index order afterwards.
 */
template <class F>
void parallel_for(std::size_t n, F&& f) {
  unsigned workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace polygas
