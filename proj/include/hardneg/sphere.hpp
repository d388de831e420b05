#pragma once

#include <Eigen/Core>
#include <vector>

#include "hardneg/common.hpp"

namespace hardneg {

// A point intended to live on the radius-1/t hypersphere. `normalized` is set
// by normalize(); raw (pre-embedding) coordinates carry the flag unset.
struct Embedding {
  Eigen::VectorXd coords;
  double t = 1.0;
  bool normalized = false;

  int dim() const { return static_cast<int>(coords.size()); }
};

// Scale v onto the sphere of radius 1/t. Near-zero vectors are rejected, not
// perturbed: a degenerate pre-normalization vector signals an upstream bug.
Embedding normalize(const Eigen::VectorXd& v, double t);

// Enforces the Embedding invariants (finite entries; norm 1/t within 1e-9
// relative when flagged normalized).
void check_embedding(const Embedding& e);

struct ScoreMatrix {
  Eigen::MatrixXd values;  // rows = anchors, cols = candidates
  double lo = 0.0;         // admissible range of entries
  double hi = 0.0;
};

// Pairwise inner products; bound [-1/t^2, 1/t^2].
ScoreMatrix score_matrix(const std::vector<Embedding>& anchors,
                         const std::vector<Embedding>& candidates);

// ||f(x) - f(x')||^2 expressed through the inner product: 2/t^2 - 2s.
inline double inner_to_sqdist(double s, double t) { return 2.0 / (t * t) - 2.0 * s; }

ScoreMatrix clip_scores(const ScoreMatrix& S, double lo, double hi);

}  // namespace hardneg
