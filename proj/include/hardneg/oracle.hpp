#pragma once

#include <span>
#include <vector>

#include "hardneg/common.hpp"
#include "hardneg/sphere.hpp"

namespace hardneg {

// Enumerable labeled population with an explicit base distribution. Points
// may be raw inputs (normalized = false) or sphere embeddings; operations
// that take inner products as scores expect the latter.
struct FinitePopulation {
  std::vector<Embedding> points;
  std::vector<int> labels;
  std::vector<double> base_weights;

  int size() const { return static_cast<int>(points.size()); }
  int dim() const { return points.empty() ? 0 : points.front().dim(); }
  double t() const { return points.empty() ? 0.0 : points.front().t; }
};

// Invariants: aligned non-empty fields; shared d and t; finite coordinates;
// base_weights >= 0 summing to 1 within 1e-12; at least 2 distinct classes.
void validate(const FinitePopulation& pop);

// Total base mass of one class.
double class_prior(const FinitePopulation& pop, int label);

// Inner products of one point against every point (itself included).
std::vector<double> scores_from_anchor(const FinitePopulation& pop, int anchor_index);

// For each point, the next point of the same class in circular index order;
// a class singleton pairs with itself.
std::vector<int> cyclic_positives(const FinitePopulation& pop);

// Per-point sphere projection of a raw population at temperature t.
FinitePopulation normalize_population(const FinitePopulation& raw, double t);

// Support restriction for the conditional distributions: everything, the
// anchor's class, or its complement.
struct Restriction {
  enum class Kind { All, SameClass, DiffClass };
  Kind kind = Kind::All;
  int label = -1;

  static Restriction all() { return {Kind::All, -1}; }
  static Restriction same_class(int c) { return {Kind::SameClass, c}; }
  static Restriction diff_class(int c) { return {Kind::DiffClass, c}; }
  bool admits(int l) const {
    switch (kind) {
      case Kind::All: return true;
      case Kind::SameClass: return l == label;
      case Kind::DiffClass: return l != label;
    }
    return false;
  }
};

enum class ConditionalSide { Neg, Pos };

// Exponentially tilted distribution w_i e^{beta s_i} restricted and
// renormalized. Zero outside the restriction; sums to 1.
std::vector<double> tilted_distribution(const FinitePopulation& pop,
                                        std::span<const double> anchor_scores, double beta,
                                        const Restriction& restrict);

// Exact E[e^s] under the tilted distribution conditioned on the anchor's
// class (Pos, anchor included) or its complement (Neg), by full enumeration.
double exact_conditional_expectation(const FinitePopulation& pop, int anchor_index, double beta,
                                     ConditionalSide side);

// Max-norm gap between the tilted marginal and the two-component mixture
// tau_minus * tilted_neg + tau_plus * tilted_pos, with tau_plus the anchor
// class's true base mass. Exactly decomposes at beta = 0.
double pu_mixture_residual(const FinitePopulation& pop, int anchor_index, double beta);

// Largest score among different-class points with positive mass.
double worst_case_sup(const FinitePopulation& pop, int anchor_index);

// Mean over anchors of -log( e^{s+} / (e^{s+} + Q e^{M(anchor)}) ) where
// M is worst_case_sup; the limiting value of the tilted objective.
double worst_case_loss(const FinitePopulation& pop, std::span<const int> positives, double Q);

// Mean over anchors of the contrastive loss against the exact beta-tilted
// different-class expectation; converges to worst_case_loss as beta grows.
double hard_limit_loss(const FinitePopulation& pop, std::span<const int> positives, double beta,
                       double Q);

struct Prop1Row {
  double beta = 0.0;
  double gap = 0.0;  // worst_case_loss - hard_limit_loss(beta)
};

// Convergence table over a strictly increasing beta grid (>= 2 entries).
// Gaps below 1e-12 in magnitude are reported as 0.
std::vector<Prop1Row> prop1_report(const FinitePopulation& pop, std::span<const int> positives,
                                   double Q, std::span<const double> beta_grid);

// n draws from the tilted distribution via rejection: propose from the
// restricted base distribution, accept with probability e^{beta s - max beta s}.
std::vector<int> rejection_sample_tilted(const FinitePopulation& pop,
                                         std::span<const double> anchor_scores, double beta,
                                         const Restriction& restrict, Rng& rng, int n);

}  // namespace hardneg
