#include "hardneg/synthdata.hpp"

#include <cmath>

namespace hardneg {

void validate(const LatentClassSpec& spec) {
  require(spec.num_classes >= 2, ErrorCode::InvalidConfig, "latent spec: need >= 2 classes");
  require(spec.input_dim >= 1, ErrorCode::InvalidConfig, "latent spec: need input_dim >= 1");
  require(static_cast<int>(spec.class_means.size()) == spec.num_classes, ErrorCode::Shape,
          "latent spec: one mean per class");
  for (const Eigen::VectorXd& m : spec.class_means) {
    require(m.size() == spec.input_dim, ErrorCode::Shape,
            "latent spec: mean dimension mismatch");
    require(m.allFinite(), ErrorCode::DegenerateInput, "latent spec: non-finite mean");
  }
  require(std::isfinite(spec.within_std) && spec.within_std >= 0.0, ErrorCode::InvalidConfig,
          "latent spec: within_std must be >= 0");
  require(std::isfinite(spec.aug_std) && spec.aug_std >= 0.0, ErrorCode::InvalidConfig,
          "latent spec: aug_std must be >= 0");
  require(std::isfinite(spec.t) && spec.t > 0.0, ErrorCode::InvalidConfig,
          "latent spec: temperature must be positive");
  require(static_cast<int>(spec.rho.size()) == spec.num_classes, ErrorCode::Shape,
          "latent spec: one prior entry per class");
  double sum = 0.0;
  for (double r : spec.rho) {
    require(std::isfinite(r) && r > 0.0, ErrorCode::InvalidDistribution,
            "latent spec: prior entries must be positive");
    sum += r;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::InvalidDistribution,
          "latent spec: prior must sum to 1");
  if (spec.within_std == 0.0) {
    for (int a = 0; a < spec.num_classes; ++a)
      for (int b = a + 1; b < spec.num_classes; ++b)
        require((spec.class_means[a] - spec.class_means[b]).norm() > 0.0,
                ErrorCode::DegenerateInput,
                "latent spec: coincident means with zero spread");
  }
}

LatentClassSpec default_latent_spec(int num_classes, int input_dim, double separation,
                                    double within_std, double aug_std, double t) {
  require(num_classes >= 2, ErrorCode::InvalidConfig, "latent spec: need >= 2 classes");
  require(input_dim >= num_classes - 1, ErrorCode::InvalidConfig,
          "latent spec: a regular simplex of C classes needs input_dim >= C-1");
  require(std::isfinite(separation) && separation > 0.0, ErrorCode::InvalidConfig,
          "latent spec: separation must be positive");

  // Columns of the Helmert submatrix give C unit-norm points with pairwise
  // inner product -1/(C-1): a regular simplex centered at the origin.
  int c = num_classes;
  Eigen::MatrixXd helmert = Eigen::MatrixXd::Zero(c - 1, c);
  for (int k = 1; k < c; ++k) {
    double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int j = 0; j < k; ++j) helmert(k - 1, j) = 1.0 / norm;
    helmert(k - 1, k) = -static_cast<double>(k) / norm;
  }
  double column_norm = std::sqrt(1.0 - 1.0 / c);

  LatentClassSpec spec;
  spec.num_classes = c;
  spec.input_dim = input_dim;
  spec.within_std = within_std;
  spec.aug_std = aug_std;
  spec.t = t;
  spec.rho.assign(c, 1.0 / c);
  for (int j = 0; j < c; ++j) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(input_dim);
    m.head(c - 1) = separation / column_norm * helmert.col(j);
    spec.class_means.push_back(m);
  }
  validate(spec);
  return spec;
}

Batch sample_batch(const LatentClassSpec& spec, int batch_size, Rng& rng) {
  validate(spec);
  require(batch_size >= 2, ErrorCode::Usage, "sample_batch: need batch_size >= 2");
  Batch batch;
  batch.anchors.resize(batch_size, spec.input_dim);
  batch.positives.resize(batch_size, spec.input_dim);
  batch.labels.resize(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    int c = static_cast<int>(rng.categorical(spec.rho));
    batch.labels[i] = c;
    Eigen::VectorXd x = spec.class_means[c];
    for (int k = 0; k < spec.input_dim; ++k) x(k) += spec.within_std * rng.normal();
    batch.anchors.row(i) = x;
    if (spec.true_positives) {
      Eigen::VectorXd y = spec.class_means[c];
      for (int k = 0; k < spec.input_dim; ++k) y(k) += spec.within_std * rng.normal();
      batch.positives.row(i) = y;
    } else {
      batch.positives.row(i) = augment_positive(x, spec, rng);
    }
  }
  return batch;
}

Eigen::VectorXd augment_positive(const Eigen::VectorXd& x, const LatentClassSpec& spec,
                                 Rng& rng) {
  validate(spec);
  require(x.size() == spec.input_dim, ErrorCode::Shape,
          "augment_positive: input dimension mismatch");
  Eigen::VectorXd y = x;
  for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += spec.aug_std * rng.normal();
  return y;
}

FinitePopulation make_finite_population(const LatentClassSpec& spec, int size, Rng& rng) {
  validate(spec);
  require(size >= spec.num_classes, ErrorCode::Usage,
          "make_finite_population: size must cover every class");
  FinitePopulation pop;
  while (true) {
    pop.points.clear();
    pop.labels.clear();
    std::vector<bool> seen(spec.num_classes, false);
    for (int i = 0; i < size; ++i) {
      int c = static_cast<int>(rng.categorical(spec.rho));
      seen[c] = true;
      Eigen::VectorXd x = spec.class_means[c];
      for (int k = 0; k < spec.input_dim; ++k) x(k) += spec.within_std * rng.normal();
      Embedding e;
      e.coords = x;
      e.t = spec.t;
      e.normalized = false;
      pop.points.push_back(e);
      pop.labels.push_back(c);
    }
    bool all = true;
    for (bool s : seen) all = all && s;
    if (all) break;
  }
  pop.base_weights.assign(size, 1.0 / size);
  validate(pop);
  return pop;
}

}  // namespace hardneg
