#pragma once

#include <vector>

#include "hardneg/common.hpp"
#include "hardneg/oracle.hpp"

namespace hardneg {

// Latent-class generative model: class c ~ rho, input x ~ N(mean_c,
// within_std^2 I), positive = noisy transform of the anchor (or a fresh
// same-class draw when true_positives is set).
struct LatentClassSpec {
  int num_classes = 2;
  int input_dim = 2;
  std::vector<Eigen::VectorXd> class_means;
  double within_std = 0.1;
  double aug_std = 0.1;
  std::vector<double> rho;
  double t = 1.0;  // target sphere temperature for downstream embeddings
  bool true_positives = false;
};

void validate(const LatentClassSpec& spec);

// Means on a regular simplex (pairwise equidistant, radius `separation`),
// realized in the first num_classes-1 coordinates. Uniform prior.
LatentClassSpec default_latent_spec(int num_classes, int input_dim, double separation,
                                    double within_std, double aug_std, double t);

struct Batch {
  Eigen::MatrixXd anchors;    // one row per item
  Eigen::MatrixXd positives;  // aligned rows
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
};

// batch_size >= 2 items drawn independently from the model. Within the
// in-batch negative convention every other item and its positive later serve
// as negatives, so N = 2 (batch_size - 1).
Batch sample_batch(const LatentClassSpec& spec, int batch_size, Rng& rng);

// Additive Gaussian perturbation of scale aug_std; label-preserving by
// construction.
Eigen::VectorXd augment_positive(const Eigen::VectorXd& x, const LatentClassSpec& spec, Rng& rng);

// Enumerable population of raw input vectors with uniform base weights;
// redraws until every class is represented (needs size >= num_classes).
FinitePopulation make_finite_population(const LatentClassSpec& spec, int size, Rng& rng);

}  // namespace hardneg
