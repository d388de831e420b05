#include "hardneg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hardneg/objectives.hpp"

namespace hardneg {

namespace {

void check_anchor(const FinitePopulation& pop, int anchor_index) {
  require(anchor_index >= 0 && anchor_index < pop.size(), ErrorCode::Usage,
          "oracle: anchor index out of range");
}

// Indices inside the restriction that carry positive base mass.
std::vector<int> support_indices(const FinitePopulation& pop, const Restriction& r) {
  std::vector<int> idx;
  for (int i = 0; i < pop.size(); ++i)
    if (r.admits(pop.labels[i]) && pop.base_weights[i] > 0.0) idx.push_back(i);
  return idx;
}

void check_scores(const FinitePopulation& pop, std::span<const double> scores) {
  require(static_cast<int>(scores.size()) == pop.size(), ErrorCode::Shape,
          "oracle: anchor scores not aligned with population");
  for (double s : scores)
    require(std::isfinite(s), ErrorCode::InvalidBatch, "oracle: non-finite anchor score");
}

// The anchor needs a same-class companion besides itself and a
// different-class point, both with positive mass.
void check_companions(const FinitePopulation& pop, int anchor_index) {
  bool same = false, diff = false;
  int c = pop.labels[anchor_index];
  for (int i = 0; i < pop.size(); ++i) {
    if (pop.base_weights[i] <= 0.0) continue;
    if (pop.labels[i] == c && i != anchor_index) same = true;
    if (pop.labels[i] != c) diff = true;
  }
  require(same, ErrorCode::EmptySupport, "oracle: anchor has no same-class companion");
  require(diff, ErrorCode::EmptySupport, "oracle: anchor has no different-class companion");
}

// E[e^s] under the tilted distribution restricted to `r`:
// sum w e^{(beta+1)s} / sum w e^{beta s}, max-shifted.
double restricted_expectation(const FinitePopulation& pop, std::span<const double> scores,
                              double beta, const Restriction& r) {
  std::vector<int> idx = support_indices(pop, r);
  require(!idx.empty(), ErrorCode::EmptySupport, "oracle: empty restricted support");
  double m = -std::numeric_limits<double>::infinity();
  for (int i : idx) m = std::max(m, scores[i]);
  double num = 0.0, den = 0.0;
  for (int i : idx) {
    double w = pop.base_weights[i];
    num += w * std::exp((beta + 1.0) * (scores[i] - m));
    den += w * std::exp(beta * (scores[i] - m));
  }
  return std::exp(m) * (num / den);
}

void check_positives(const FinitePopulation& pop, std::span<const int> positives) {
  require(static_cast<int>(positives.size()) == pop.size(), ErrorCode::Shape,
          "oracle: positives not aligned with population");
  for (int i = 0; i < pop.size(); ++i) {
    int j = positives[i];
    require(j >= 0 && j < pop.size(), ErrorCode::InvalidBatch,
            "oracle: positive index out of range");
    require(pop.labels[j] == pop.labels[i], ErrorCode::InvalidBatch,
            "oracle: positive pair crosses classes");
  }
}

}  // namespace

void validate(const FinitePopulation& pop) {
  size_t n = pop.points.size();
  require(n >= 2, ErrorCode::Shape, "population: need at least 2 points");
  require(pop.labels.size() == n && pop.base_weights.size() == n, ErrorCode::Shape,
          "population: points, labels, and base_weights must align");
  int d = pop.points.front().dim();
  double t = pop.points.front().t;
  for (const Embedding& e : pop.points) {
    require(e.dim() == d, ErrorCode::Shape, "population: points must share dimension");
    require(e.t == t, ErrorCode::Shape, "population: points must share temperature");
    require(std::isfinite(e.t) && e.t > 0.0, ErrorCode::InvalidConfig,
            "population: temperature must be positive");
    require(e.coords.allFinite(), ErrorCode::DegenerateInput,
            "population: non-finite coordinates");
  }
  double sum = 0.0;
  for (double w : pop.base_weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidDistribution,
            "population: base weights must be finite and nonnegative");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::InvalidDistribution,
          "population: base weights must sum to 1");
  int first = pop.labels.front();
  bool two_classes = false;
  for (int l : pop.labels)
    if (l != first) two_classes = true;
  require(two_classes, ErrorCode::DegenerateInput,
          "population: need at least 2 distinct classes");
}

double class_prior(const FinitePopulation& pop, int label) {
  double mass = 0.0;
  for (int i = 0; i < pop.size(); ++i)
    if (pop.labels[i] == label) mass += pop.base_weights[i];
  return mass;
}

std::vector<double> scores_from_anchor(const FinitePopulation& pop, int anchor_index) {
  validate(pop);
  check_anchor(pop, anchor_index);
  std::vector<double> s(pop.points.size());
  const Eigen::VectorXd& a = pop.points[anchor_index].coords;
  for (int i = 0; i < pop.size(); ++i) s[i] = a.dot(pop.points[i].coords);
  return s;
}

std::vector<int> cyclic_positives(const FinitePopulation& pop) {
  validate(pop);
  int n = pop.size();
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = i;
    for (int step = 1; step < n; ++step) {
      int j = (i + step) % n;
      if (pop.labels[j] == pop.labels[i]) {
        out[i] = j;
        break;
      }
    }
  }
  return out;
}

FinitePopulation normalize_population(const FinitePopulation& raw, double t) {
  validate(raw);
  FinitePopulation out = raw;
  for (size_t i = 0; i < raw.points.size(); ++i)
    out.points[i] = normalize(raw.points[i].coords, t);
  return out;
}

std::vector<double> tilted_distribution(const FinitePopulation& pop,
                                        std::span<const double> anchor_scores, double beta,
                                        const Restriction& restrict) {
  validate(pop);
  check_scores(pop, anchor_scores);
  require(std::isfinite(beta), ErrorCode::InvalidConfig, "tilted_distribution: non-finite beta");
  std::vector<int> idx = support_indices(pop, restrict);
  require(!idx.empty(), ErrorCode::EmptySupport, "tilted_distribution: empty restricted support");
  double m = -std::numeric_limits<double>::infinity();
  for (int i : idx) m = std::max(m, beta * anchor_scores[i]);
  std::vector<double> q(pop.points.size(), 0.0);
  double z = 0.0;
  for (int i : idx) {
    q[i] = pop.base_weights[i] * std::exp(beta * anchor_scores[i] - m);
    z += q[i];
  }
  for (int i : idx) q[i] /= z;
  return q;
}

double exact_conditional_expectation(const FinitePopulation& pop, int anchor_index, double beta,
                                     ConditionalSide side) {
  validate(pop);
  check_anchor(pop, anchor_index);
  require(std::isfinite(beta), ErrorCode::InvalidConfig,
          "exact_conditional_expectation: non-finite beta");
  check_companions(pop, anchor_index);
  std::vector<double> s = scores_from_anchor(pop, anchor_index);
  int c = pop.labels[anchor_index];
  Restriction r = side == ConditionalSide::Neg ? Restriction::diff_class(c)
                                               : Restriction::same_class(c);
  return restricted_expectation(pop, s, beta, r);
}

double pu_mixture_residual(const FinitePopulation& pop, int anchor_index, double beta) {
  validate(pop);
  check_anchor(pop, anchor_index);
  require(std::isfinite(beta), ErrorCode::InvalidConfig, "pu_mixture_residual: non-finite beta");
  check_companions(pop, anchor_index);
  std::vector<double> s = scores_from_anchor(pop, anchor_index);
  int c = pop.labels[anchor_index];
  std::vector<double> q = tilted_distribution(pop, s, beta, Restriction::all());
  std::vector<double> qn = tilted_distribution(pop, s, beta, Restriction::diff_class(c));
  std::vector<double> qp = tilted_distribution(pop, s, beta, Restriction::same_class(c));
  double tau_plus = class_prior(pop, c);
  double tau_minus = 1.0 - tau_plus;
  double residual = 0.0;
  for (int i = 0; i < pop.size(); ++i)
    residual = std::max(residual, std::abs(q[i] - (tau_minus * qn[i] + tau_plus * qp[i])));
  return residual;
}

double worst_case_sup(const FinitePopulation& pop, int anchor_index) {
  validate(pop);
  check_anchor(pop, anchor_index);
  std::vector<double> s = scores_from_anchor(pop, anchor_index);
  int c = pop.labels[anchor_index];
  double m = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (int i = 0; i < pop.size(); ++i) {
    if (pop.labels[i] == c || pop.base_weights[i] <= 0.0) continue;
    m = std::max(m, s[i]);
    found = true;
  }
  require(found, ErrorCode::EmptySupport, "worst_case_sup: no different-class mass");
  return m;
}

double worst_case_loss(const FinitePopulation& pop, std::span<const int> positives, double Q) {
  validate(pop);
  check_positives(pop, positives);
  require(std::isfinite(Q) && Q > 0.0, ErrorCode::InvalidConfig,
          "worst_case_loss: Q must be positive");
  double log_q = std::log(Q);
  double acc = 0.0;
  for (int i = 0; i < pop.size(); ++i) {
    double s_pos = pop.points[i].coords.dot(pop.points[positives[i]].coords);
    acc += contrast_loss_logq(s_pos, log_q + worst_case_sup(pop, i));
  }
  return acc / pop.size();
}

double hard_limit_loss(const FinitePopulation& pop, std::span<const int> positives, double beta,
                       double Q) {
  validate(pop);
  check_positives(pop, positives);
  require(std::isfinite(beta), ErrorCode::InvalidConfig, "hard_limit_loss: non-finite beta");
  require(std::isfinite(Q) && Q > 0.0, ErrorCode::InvalidConfig,
          "hard_limit_loss: Q must be positive");
  double acc = 0.0;
  for (int i = 0; i < pop.size(); ++i) {
    std::vector<double> s = scores_from_anchor(pop, i);
    Restriction r = Restriction::diff_class(pop.labels[i]);
    double expectation = restricted_expectation(pop, s, beta, r);
    double s_pos = s[positives[i]];
    acc += contrast_loss(s_pos, Q * expectation);
  }
  return acc / pop.size();
}

std::vector<Prop1Row> prop1_report(const FinitePopulation& pop, std::span<const int> positives,
                                   double Q, std::span<const double> beta_grid) {
  require(beta_grid.size() >= 2, ErrorCode::Usage,
          "prop1_report: beta grid needs at least 2 entries");
  for (size_t k = 0; k + 1 < beta_grid.size(); ++k)
    require(beta_grid[k] < beta_grid[k + 1], ErrorCode::Usage,
            "prop1_report: beta grid must be strictly increasing");
  double limit = worst_case_loss(pop, positives, Q);
  std::vector<Prop1Row> rows;
  rows.reserve(beta_grid.size());
  for (double beta : beta_grid) {
    double gap = limit - hard_limit_loss(pop, positives, beta, Q);
    if (std::abs(gap) < 1e-12) gap = 0.0;  // below the enumeration noise floor
    rows.push_back({beta, gap});
  }
  return rows;
}

std::vector<int> rejection_sample_tilted(const FinitePopulation& pop,
                                         std::span<const double> anchor_scores, double beta,
                                         const Restriction& restrict, Rng& rng, int n) {
  validate(pop);
  check_scores(pop, anchor_scores);
  require(std::isfinite(beta), ErrorCode::InvalidConfig,
          "rejection_sample_tilted: non-finite beta");
  require(n >= 1, ErrorCode::Usage, "rejection_sample_tilted: need n >= 1");
  std::vector<int> idx = support_indices(pop, restrict);
  require(!idx.empty(), ErrorCode::EmptySupport,
          "rejection_sample_tilted: empty restricted support");
  std::vector<double> proposal(pop.points.size(), 0.0);
  double m = -std::numeric_limits<double>::infinity();
  for (int i : idx) {
    proposal[i] = pop.base_weights[i];
    m = std::max(m, beta * anchor_scores[i]);
  }
  std::vector<int> out;
  out.reserve(n);
  while (static_cast<int>(out.size()) < n) {
    int i = static_cast<int>(rng.categorical(proposal));
    double accept = std::exp(beta * anchor_scores[i] - m);
    if (rng.uniform() < accept) out.push_back(i);
  }
  return out;
}

}  // namespace hardneg
