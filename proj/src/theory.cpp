#include "hardneg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hardneg {

namespace {

// Squared distances from prototype c to every other prototype.
std::vector<double> sqdists_from(const SpherePacking& p, int c) {
  std::vector<double> d;
  d.reserve(p.prototypes.size());
  for (int k = 0; k < p.num_classes(); ++k)
    d.push_back(k == c ? std::numeric_limits<double>::infinity()
                       : (p.prototypes[c] - p.prototypes[k]).squaredNorm());
  return d;
}

// Index of the nearest other prototype, smallest index on ties.
int nearest_other(const std::vector<double>& sqd) {
  int best = -1;
  double bv = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(sqd.size()); ++k)
    if (sqd[k] < bv) {
      bv = sqd[k];
      best = k;
    }
  return best;
}

void require_on_sphere(const FinitePopulation& pop, const char* what) {
  for (const Embedding& e : pop.points)
    require(e.normalized, ErrorCode::DegenerateInput,
            std::string(what) + ": population points must be sphere embeddings");
}

}  // namespace

void validate(const SpherePacking& packing) {
  int c = packing.num_classes();
  require(c >= 2, ErrorCode::InvalidConfig, "packing: need at least 2 prototypes");
  require(std::isfinite(packing.t) && packing.t > 0.0, ErrorCode::InvalidConfig,
          "packing: temperature must be positive");
  require(static_cast<int>(packing.rho.size()) == c, ErrorCode::Shape,
          "packing: rho must align with prototypes");
  Eigen::Index d = packing.prototypes.front().size();
  require(d >= 1, ErrorCode::Shape, "packing: empty prototype");
  for (const Eigen::VectorXd& v : packing.prototypes) {
    require(v.size() == d, ErrorCode::Shape, "packing: prototypes must share dimension");
    require(v.allFinite(), ErrorCode::DegenerateInput, "packing: non-finite prototype");
    require(std::abs(v.norm() * packing.t - 1.0) <= 1e-9, ErrorCode::InvalidConfig,
            "packing: prototypes must have norm 1/t");
  }
  double sum = 0.0;
  for (double r : packing.rho) {
    require(std::isfinite(r) && r > 0.0, ErrorCode::InvalidDistribution,
            "packing: rho entries must be positive");
    sum += r;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::InvalidDistribution,
          "packing: rho must sum to 1");
}

double tammes_objective(const SpherePacking& packing) {
  validate(packing);
  double acc = 0.0;
  for (int c = 0; c < packing.num_classes(); ++c) {
    std::vector<double> sqd = sqdists_from(packing, c);
    acc += packing.rho[c] * sqd[nearest_other(sqd)];
  }
  return acc;
}

SpherePacking tammes_solve(int num_classes, int d, double t, std::span<const double> rho,
                           int restarts, int iters, Rng& rng) {
  require(num_classes >= 2, ErrorCode::InvalidConfig, "tammes_solve: need >= 2 classes");
  require(d >= 2, ErrorCode::InvalidConfig, "tammes_solve: need dimension >= 2");
  require(std::isfinite(t) && t > 0.0, ErrorCode::InvalidConfig,
          "tammes_solve: temperature must be positive");
  require(restarts >= 1, ErrorCode::InvalidConfig, "tammes_solve: need >= 1 restart");
  require(iters >= 1, ErrorCode::InvalidConfig, "tammes_solve: need >= 1 iteration");
  require(static_cast<int>(rho.size()) == num_classes, ErrorCode::Shape,
          "tammes_solve: rho must have one entry per class");

  SpherePacking best;
  double best_value = -1.0;

  // Smoothing gamma sharpens geometrically; the step size decays. The final
  // tenth of the iterations uses the exact min (subgradient toward the
  // lexicographically smallest nearest neighbor).
  const double gamma_lo = 0.5 * t * t;
  const double gamma_hi = 1000.0 * t * t;
  const double eta_lo = 1e-4;
  const double eta_hi = 0.25;
  const int smooth_iters = std::max(1, iters - iters / 10);

  for (int r = 0; r < restarts; ++r) {
    Rng local = rng.child(static_cast<uint64_t>(r));
    SpherePacking p;
    p.t = t;
    p.rho.assign(rho.begin(), rho.end());
    for (int c = 0; c < num_classes; ++c) {
      Eigen::VectorXd v(d);
      for (int k = 0; k < d; ++k) v(k) = local.normal();
      p.prototypes.push_back(normalize(v, t).coords);
    }

    SpherePacking restart_best = p;
    double restart_value = tammes_objective(p);

    for (int it = 0; it < iters; ++it) {
      double frac = iters == 1 ? 1.0 : static_cast<double>(it) / (iters - 1);
      double eta = eta_hi * std::pow(eta_lo / eta_hi, frac);
      bool exact_phase = it >= smooth_iters;
      double gamma = gamma_lo * std::pow(gamma_hi / gamma_lo, frac);

      // Per-class soft-min (or exact) weights over the other prototypes.
      std::vector<std::vector<double>> weights(num_classes);
      for (int c = 0; c < num_classes; ++c) {
        std::vector<double> sqd = sqdists_from(p, c);
        std::vector<double>& w = weights[c];
        w.assign(num_classes, 0.0);
        if (exact_phase) {
          w[nearest_other(sqd)] = 1.0;
        } else {
          double lo = *std::min_element(sqd.begin(), sqd.end());
          double z = 0.0;
          for (int k = 0; k < num_classes; ++k) {
            if (k == c) continue;
            w[k] = std::exp(-gamma * (sqd[k] - lo));
            z += w[k];
          }
          for (double& x : w) x /= z;
        }
      }

      std::vector<Eigen::VectorXd> grad(num_classes, Eigen::VectorXd::Zero(d));
      for (int c = 0; c < num_classes; ++c)
        for (int k = 0; k < num_classes; ++k) {
          if (k == c || weights[c][k] == 0.0) continue;
          Eigen::VectorXd diff = 2.0 * (p.prototypes[c] - p.prototypes[k]);
          grad[c] += p.rho[c] * weights[c][k] * diff;
          grad[k] -= p.rho[c] * weights[c][k] * diff;
        }

      for (int c = 0; c < num_classes; ++c) {
        double g = grad[c].norm();
        if (g == 0.0) continue;
        p.prototypes[c] =
            normalize(p.prototypes[c] + (eta / (t * g)) * grad[c], t).coords;
      }

      double value = tammes_objective(p);
      if (value > restart_value) {
        restart_value = value;
        restart_best = p;
      }
    }

    if (restart_value > best_value) {
      best_value = restart_value;
      best = restart_best;
    }
  }
  return best;
}

int prototype_classifier(const SpherePacking& packing, const Embedding& x) {
  validate(packing);
  require(x.coords.size() == packing.prototypes.front().size(), ErrorCode::Shape,
          "prototype_classifier: dimension mismatch");
  require(x.t == packing.t, ErrorCode::Shape, "prototype_classifier: temperature mismatch");
  int best = 0;
  double bv = std::numeric_limits<double>::infinity();
  for (int c = 0; c < packing.num_classes(); ++c) {
    double dist = (x.coords - packing.prototypes[c]).squaredNorm();
    if (dist < bv) {
      bv = dist;
      best = c;
    }
  }
  return best;
}

double bound_validity_margin(const BoundInputs& b) {
  require(std::isfinite(b.epsilon) && b.epsilon >= 0.0, ErrorCode::InvalidConfig,
          "bound: epsilon must be >= 0");
  require(std::isfinite(b.xi) && b.xi > 0.0, ErrorCode::InvalidConfig,
          "bound: xi must be positive");
  require(b.num_classes >= 2, ErrorCode::InvalidConfig, "bound: need >= 2 classes");
  require(std::isfinite(b.t) && b.t > 0.0, ErrorCode::InvalidConfig,
          "bound: temperature must be positive");
  return b.xi * b.xi -
         2.0 * b.num_classes * (1.0 + 1.0 / b.t) * std::sqrt(b.epsilon);
}

double generalization_bound(const BoundInputs& b) {
  double margin = bound_validity_margin(b);
  require(margin > 0.0, ErrorCode::BoundInvalid,
          "bound: separation too small for this excess risk");
  return 8.0 * b.epsilon / (margin * margin);
}

BoundReport bound_check_experiment(const FinitePopulation& pop, std::span<const int> positives,
                                   const SpherePacking& packing_star) {
  validate(pop);
  validate(packing_star);
  require_on_sphere(pop, "bound_check_experiment");
  require(pop.t() == packing_star.t, ErrorCode::Shape,
          "bound_check_experiment: population and packing temperatures differ");
  require(pop.dim() == packing_star.prototypes.front().size(), ErrorCode::Shape,
          "bound_check_experiment: population and packing dimensions differ");
  int num_classes = packing_star.num_classes();
  for (double r : packing_star.rho)
    require(std::abs(r - 1.0 / num_classes) <= 1e-12, ErrorCode::HypothesisViolation,
            "bound_check_experiment: rho must be uniform");
  for (int l : pop.labels)
    require(l >= 0 && l < num_classes, ErrorCode::Shape,
            "bound_check_experiment: label outside the packing's classes");
  for (int c = 0; c < num_classes; ++c)
    require(std::count(pop.labels.begin(), pop.labels.end(), c) > 0, ErrorCode::Shape,
            "bound_check_experiment: every packing class needs population points");

  // Excess limiting risk: (alignment + mean worst-case score) of the
  // population minus the same quantity at the packing optimum, where
  // alignment vanishes and the worst-case score is the max prototype inner
  // product. The shared -1/t^2 offsets cancel.
  double align = 0.0, mean_sup = 0.0;
  for (int i = 0; i < pop.size(); ++i) {
    int j = positives.size() == static_cast<size_t>(pop.size()) ? positives[i] : -1;
    require(j >= 0 && j < pop.size() && pop.labels[j] == pop.labels[i], ErrorCode::InvalidBatch,
            "bound_check_experiment: positives must pair within class");
    align += (pop.points[i].coords - pop.points[j].coords).squaredNorm() / 2.0;
    mean_sup += worst_case_sup(pop, i);
  }
  align /= pop.size();
  mean_sup /= pop.size();
  double optimum_sup = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    double m = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_classes; ++k)
      if (k != c) m = std::max(m, packing_star.prototypes[c].dot(packing_star.prototypes[k]));
    optimum_sup += m / num_classes;
  }
  double epsilon = std::max(align + mean_sup - optimum_sup, 0.0);
  require(epsilon <= 1.0, ErrorCode::HypothesisViolation,
          "bound_check_experiment: excess risk above 1");

  double xi = std::numeric_limits<double>::infinity();
  for (int c = 0; c < num_classes; ++c)
    for (int k = c + 1; k < num_classes; ++k)
      xi = std::min(xi, (packing_star.prototypes[c] - packing_star.prototypes[k]).norm());

  // Prototypes built from the population: per class, the point minimizing
  // the expected within-class squared distance (smallest index on ties).
  SpherePacking hat;
  hat.t = pop.t();
  hat.rho.assign(num_classes, 1.0 / num_classes);
  for (int c = 0; c < num_classes; ++c) {
    int best = -1;
    double bv = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pop.size(); ++i) {
      if (pop.labels[i] != c) continue;
      double cost = 0.0, mass = 0.0;
      for (int j = 0; j < pop.size(); ++j) {
        if (pop.labels[j] != c) continue;
        cost += pop.base_weights[j] *
                (pop.points[i].coords - pop.points[j].coords).squaredNorm();
        mass += pop.base_weights[j];
      }
      require(mass > 0.0, ErrorCode::EmptySupport,
              "bound_check_experiment: class carries no mass");
      cost /= mass;
      if (cost < bv) {
        bv = cost;
        best = i;
      }
    }
    hat.prototypes.push_back(pop.points[best].coords);
  }

  double risk = 0.0;
  for (int i = 0; i < pop.size(); ++i)
    if (prototype_classifier(hat, pop.points[i]) != pop.labels[i]) risk += pop.base_weights[i];

  BoundReport report;
  report.epsilon = epsilon;
  report.xi = xi;
  report.empirical_risk = risk;
  BoundInputs b{epsilon, xi, num_classes, pop.t()};
  report.valid = bound_validity_margin(b) > 0.0;
  if (report.valid) {
    report.bound = generalization_bound(b);
    report.holds = risk <= report.bound;
  } else {
    report.bound = std::numeric_limits<double>::quiet_NaN();
    report.holds = false;
  }
  return report;
}

VarianceReport variance_lemma_check(const FinitePopulation& pop, int anchor_index, double beta,
                                    double t) {
  validate(pop);
  require(anchor_index >= 0 && anchor_index < pop.size(), ErrorCode::Usage,
          "variance_lemma_check: anchor index out of range");
  require(std::isfinite(beta), ErrorCode::InvalidConfig,
          "variance_lemma_check: non-finite beta");
  require(std::isfinite(t) && t > 0.0, ErrorCode::InvalidConfig,
          "variance_lemma_check: temperature must be positive");
  require(pop.t() == t, ErrorCode::Shape,
          "variance_lemma_check: temperature does not match the population");
  require_on_sphere(pop, "variance_lemma_check");

  std::vector<double> s = scores_from_anchor(pop, anchor_index);
  Restriction same = Restriction::same_class(pop.labels[anchor_index]);
  std::vector<double> q = tilted_distribution(pop, s, beta, same);

  double mean = 0.0;
  for (int i = 0; i < pop.size(); ++i) mean += q[i] * std::exp(s[i]);
  double variance = 0.0;
  for (int i = 0; i < pop.size(); ++i) {
    double dev = std::exp(s[i]) - mean;
    variance += q[i] * dev * dev;
  }

  double spread = 0.0;
  for (int i = 0; i < pop.size(); ++i) {
    if (q[i] == 0.0) continue;
    for (int j = 0; j < pop.size(); ++j) {
      if (q[j] == 0.0) continue;
      spread += q[i] * q[j] * (pop.points[i].coords - pop.points[j].coords).squaredNorm();
    }
  }
  double bound = std::exp(2.0 / (t * t)) / (2.0 * t * t) * spread;

  VarianceReport report;
  report.variance = variance;
  report.bound = bound;
  report.holds = variance <= bound + 1e-12;
  return report;
}

}  // namespace hardneg
