#pragma once

#include <string>
#include <vector>

#include "hardneg/oracle.hpp"
#include "hardneg/synthdata.hpp"
#include "hardneg/theory.hpp"
#include "hardneg/trainer.hpp"

namespace hardneg {

// Self-contained numerical check suites shared by the command-line verifier
// and the acceptance gate. Every suite is fully seeded: equal options produce
// byte-identical evidence.
struct VerifyOptions {
  uint64_t seed = 7;
  std::vector<double> beta_grid = {0.0, 1.0, 10.0, 100.0};
  int pop_size = 60;
  int classes = 4;
};

struct SuiteReport {
  std::string suite;
  bool pass = false;
  double worst = 0.0;      // headline number, suite-specific (error or ratio)
  double tolerance = 0.0;  // threshold `worst` is compared against
  std::string evidence_csv;
};

const std::vector<std::string>& suite_names();

// Suites: equivalence (hardness-weighted loss collapses to the plain
// contrastive loss at beta 0, tau_plus 0), decomposition (alignment +
// uniformity - 1/t^2 identity), prop1 (worst-case gap shrinks along a beta
// grid), pu-mixture (class-conditional split residual vanishes at beta 0),
// variance (tilted second-moment bound), gradcheck (analytic vs central
// differences), sampler (rejection sampler matches the tilted law in total
// variation). Unknown names raise Usage.
SuiteReport run_suite(const std::string& name, const VerifyOptions& opt);

// Seeded near-optimal packing perturbations with valid bound denominators;
// used by the bound command and the acceptance gate.
std::vector<BoundReport> bound_experiment(int configs, uint64_t seed);

// One explicit bound configuration: an optimal packing for (classes, dim) is
// perturbed into per-class clusters of spread sigma. Empty rho means uniform;
// a non-uniform rho propagates the bound's hypothesis-violation error.
struct BoundConfig {
  int classes = 2;
  int dim = 3;
  double sigma = 0.05;
  std::vector<double> rho;
};

BoundReport bound_single(const BoundConfig& cfg, uint64_t seed);

// Pair-score histogram of an embedded population over uniform bins spanning
// the attainable score range [-1/t^2, 1/t^2]; unordered pairs, no self pairs.
struct ScoreHistogram {
  double t = 1.0;
  std::vector<double> bin_lo, bin_hi;
  std::vector<long long> same_count, diff_count;
};

ScoreHistogram score_histogram(const FinitePopulation& pop, int bins);

// Overlap between the normalized same-class and different-class histograms
// (1 = indistinguishable, 0 = disjoint).
double histogram_intersection(const ScoreHistogram& h);

}  // namespace hardneg
