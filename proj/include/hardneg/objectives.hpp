#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hardneg/sphere.hpp"

namespace hardneg {

struct AnnealSpec {
  double beta0 = 0.0;
  int ell = 1;
};

struct LossConfig {
  double beta = 0.0;      // concentration of the tilted negative distribution
  double tau_plus = 0.0;  // class prior of false negatives
  int N = 1;              // negative count; must match the batch
  int M = 1;              // positive-sample count for the tau_plus correction
  std::optional<double> Q;  // loss weighting; defaults to N
  double t = 1.0;
  std::optional<std::pair<double, double>> clip;
  std::optional<double> estimator_floor;  // defaults to exp(-1/t^2)
  std::optional<AnnealSpec> anneal;

  double q_weight() const { return Q ? *Q : static_cast<double>(N); }
  double tau_minus() const { return 1.0 - tau_plus; }
  // exp(-1/t^2) is the minimum of E[e^s] over score distributions on the
  // sphere, so the clamped estimator always stays in the admissible range.
  double floor_value() const {
    return estimator_floor ? *estimator_floor : std::exp(-1.0 / (t * t));
  }
};

void validate(const LossConfig& cfg);

// -log( e^{s_pos} / (e^{s_pos} + qe) ) for an aggregated negative mass
// qe > 0, stable around the larger exponent. Every contrastive value in the
// library funnels through this so reductions agree bitwise.
double contrast_loss(double s_pos, double qe);
// Same with the mass given in log space (avoids overflow for huge masses).
double contrast_loss_logq(double s_pos, double log_qe);

// -log( e^{s_pos} / (e^{s_pos} + (Q/N) * sum_i e^{s_i}) )
double nce_loss(double s_pos, std::span<const double> s_negs, const LossConfig& cfg);

// Self-normalized estimator sum_i e^{(beta+1) s_i} / sum_i e^{beta s_i} of
// E[e^s] under the beta-tilted distribution; computed with a max shift.
double importance_weighted_expectation(std::span<const double> scores, double beta);

// Hardness-biased debiased loss: the negative expectation is estimated as
// (iwe(negs) - tau_plus * iwe(pos_samples)) / tau_minus, clamped from below
// at estimator_floor.
double hard_loss(double s_pos, std::span<const double> s_pos_samples,
                 std::span<const double> s_negs, const LossConfig& cfg);

// hard_loss with beta forced to 0.
double debiased_loss(double s_pos, std::span<const double> s_pos_samples,
                     std::span<const double> s_negs, const LossConfig& cfg);

// Mean of ||a - b||^2 / 2 over positive pairs.
double alignment_loss(const std::vector<std::pair<Embedding, Embedding>>& pairs);

// Mean over anchors of log( sum_j w_j e^{s_j} ); each weight vector must sum
// to 1 within 1e-9.
double uniformity_loss(const std::vector<std::vector<double>>& anchor_scores,
                       const std::vector<std::vector<double>>& weights);

// Softplus variant: mean_i sp(-t_pos_i) + sum_j w_j sp(t_neg_j) with
// w = softmax(beta * t_neg).
double js_hard_loss(std::span<const double> t_pos, std::span<const double> t_neg, double beta);

// Per-anchor positive + negatives score layout. Rows of negs align with pos.
struct ScoreBatch {
  Eigen::VectorXd pos;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> negs;
};

// Mean of per-anchor hard_loss; applies the clip range to every score first
// when config.clip is set. Requires M = 1: the anchor's positive score is
// reused as the single positive sample.
double batch_hard_loss(const ScoreBatch& batch, const LossConfig& cfg);

}  // namespace hardneg
