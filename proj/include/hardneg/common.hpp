#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace hardneg {

enum class ErrorCode {
  InvalidConfig,
  DegenerateInput,
  Shape,
  InvalidBatch,
  InvalidDistribution,
  EmptySupport,
  BoundInvalid,
  HypothesisViolation,
  Usage,
  Io,
  CheckFailed,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

uint64_t splitmix64(uint64_t x);

// Deterministic RNG. mt19937_64 is pinned bit-for-bit by the standard; the
// transforms below are hand-rolled because std::normal_distribution and
// friends are implementation-defined, and run manifests promise bitwise
// replay of every numeric output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

  uint64_t seed() const { return seed_; }
  uint64_t raw() { return gen_(); }

  // [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; two uniforms per draw, no cached state.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased integer in [0, n) via rejection.
  uint64_t uniform_int(uint64_t n);

  // Index draw from a nonnegative weight vector (need not be normalized).
  size_t categorical(std::span<const double> weights);

  // Independent stream derived from (seed, key); generation state of the
  // parent does not leak into the child.
  Rng child(uint64_t key) const {
    return Rng(splitmix64(seed_ ^ splitmix64(key + 0x9e3779b97f4a7c15ull)));
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

// Full-precision, locale-independent decimal rendering ("%.17g").
std::string format_double(double v);

}  // namespace hardneg
