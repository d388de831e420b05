#pragma once

#include <span>
#include <vector>

#include "hardneg/common.hpp"
#include "hardneg/oracle.hpp"
#include "hardneg/sphere.hpp"

namespace hardneg {

// One prototype per class on the radius-1/t sphere, with a class prior.
struct SpherePacking {
  std::vector<Eigen::VectorXd> prototypes;
  double t = 1.0;
  std::vector<double> rho;

  int num_classes() const { return static_cast<int>(prototypes.size()); }
};

// Invariants: >= 2 prototypes of shared dimension, each of norm 1/t within
// 1e-9; rho strictly positive, summing to 1.
void validate(const SpherePacking& packing);

// Prior-weighted minimum squared separation sum_c rho_c min_{c' != c}
// ||v_c - v_c'||^2; the packing quality being maximized.
double tammes_objective(const SpherePacking& packing);

// Maximize tammes_objective by projected gradient ascent on a soft-min
// smoothing with a geometric sharpening schedule; the last 10% of iterations
// step on the exact subgradient. Best exact objective over `restarts`
// independent seeded starts wins.
SpherePacking tammes_solve(int num_classes, int d, double t, std::span<const double> rho,
                           int restarts, int iters, Rng& rng);

// Nearest-prototype rule argmin_c ||x - v_c||; ties go to the smallest class.
int prototype_classifier(const SpherePacking& packing, const Embedding& x);

struct BoundInputs {
  double epsilon = 0.0;  // excess limit risk
  double xi = 0.0;       // minimum prototype separation (distance, not squared)
  int num_classes = 2;
  double t = 1.0;
};

// xi^2 - 2 |C| (1 + 1/t) sqrt(epsilon); the bound is only meaningful while
// this is positive.
double bound_validity_margin(const BoundInputs& b);

// 8 epsilon / margin^2. Raises bound-invalid when the margin is not positive.
double generalization_bound(const BoundInputs& b);

struct BoundReport {
  double epsilon = 0.0;
  double xi = 0.0;
  double bound = 0.0;  // meaningful only when valid
  double empirical_risk = 0.0;
  bool valid = false;  // validity margin positive
  bool holds = false;  // empirical_risk <= bound, when valid
};

// End-to-end check of the misclassification bound on an embedded population:
// epsilon is the excess of the population's limiting worst-case objective
// over the packing optimum, prototypes are the per-class points minimizing
// expected within-class squared distance, and the risk is the prototype
// classifier's weighted error rate. Requires uniform rho and epsilon <= 1.
BoundReport bound_check_experiment(const FinitePopulation& pop, std::span<const int> positives,
                                   const SpherePacking& packing_star);

struct VarianceReport {
  double variance = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// Exact variance of e^s under the same-class tilted distribution versus the
// chain bound (e^{2/t^2} / (2 t^2)) * E ||f(v) - f(v')||^2.
VarianceReport variance_lemma_check(const FinitePopulation& pop, int anchor_index, double beta,
                                    double t);

}  // namespace hardneg
