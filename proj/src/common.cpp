#include "hardneg/common.hpp"

#include <cstdio>

namespace hardneg {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::InvalidBatch: return "invalid-batch";
    case ErrorCode::InvalidDistribution: return "invalid-distribution";
    case ErrorCode::EmptySupport: return "empty-support";
    case ErrorCode::BoundInvalid: return "bound-invalid";
    case ErrorCode::HypothesisViolation: return "hypothesis-violation";
    case ErrorCode::Usage: return "usage";
    case ErrorCode::Io: return "io";
    case ErrorCode::CheckFailed: return "check-failed";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(error_code_name(code)) + ": " + what);
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t Rng::uniform_int(uint64_t n) {
  require(n > 0, ErrorCode::Usage, "uniform_int: n must be positive");
  // Accept x <= UINT64_MAX - r where r = 2^64 mod n; then x % n is unbiased.
  uint64_t r = (std::numeric_limits<uint64_t>::max() % n + 1) % n;
  uint64_t lim = std::numeric_limits<uint64_t>::max() - r;
  uint64_t x;
  do {
    x = gen_();
  } while (x > lim);
  return x % n;
}

size_t Rng::categorical(std::span<const double> weights) {
  require(!weights.empty(), ErrorCode::Usage, "categorical: empty weights");
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidDistribution,
            "categorical: weights must be finite and nonnegative");
    total += w;
  }
  require(total > 0.0, ErrorCode::InvalidDistribution, "categorical: zero total weight");
  double u = uniform() * total;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // u landed on accumulated round-off past the last positive weight.
  for (size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // snprintf honors the process locale; the emitted formats pin '.'.
  for (char* p = buf; *p; ++p)
    if (*p == ',') *p = '.';
  return buf;
}

}  // namespace hardneg
