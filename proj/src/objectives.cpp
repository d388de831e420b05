#include "hardneg/objectives.hpp"

#include <algorithm>

namespace hardneg {

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs)
    require(std::isfinite(x), ErrorCode::InvalidBatch, std::string(what) + ": non-finite score");
}

}  // namespace

double contrast_loss_logq(double s_pos, double log_qe) {
  require(std::isfinite(s_pos) && std::isfinite(log_qe), ErrorCode::InvalidBatch,
          "contrast_loss: non-finite input");
  double m = std::max(s_pos, log_qe);
  return std::log(std::exp(s_pos - m) + std::exp(log_qe - m)) + (m - s_pos);
}

double contrast_loss(double s_pos, double qe) {
  require(std::isfinite(qe) && qe > 0.0, ErrorCode::InvalidBatch,
          "contrast_loss: negative mass must be positive");
  return contrast_loss_logq(s_pos, std::log(qe));
}

void validate(const LossConfig& cfg) {
  require(std::isfinite(cfg.beta) && cfg.beta >= 0.0, ErrorCode::InvalidConfig,
          "loss config: beta must be >= 0");
  require(std::isfinite(cfg.tau_plus) && cfg.tau_plus >= 0.0 && cfg.tau_plus < 1.0,
          ErrorCode::InvalidConfig, "loss config: tau_plus must be in [0, 1)");
  require(cfg.N >= 1, ErrorCode::InvalidConfig, "loss config: N must be >= 1");
  require(cfg.M >= 1, ErrorCode::InvalidConfig, "loss config: M must be >= 1");
  if (cfg.Q)
    require(std::isfinite(*cfg.Q) && *cfg.Q > 0.0, ErrorCode::InvalidConfig,
            "loss config: Q must be positive");
  require(std::isfinite(cfg.t) && cfg.t > 0.0, ErrorCode::InvalidConfig,
          "loss config: t must be positive");
  if (cfg.clip)
    require(std::isfinite(cfg.clip->first) && std::isfinite(cfg.clip->second) &&
                cfg.clip->first < cfg.clip->second,
            ErrorCode::InvalidConfig, "loss config: clip range needs lo < hi");
  if (cfg.estimator_floor)
    require(std::isfinite(*cfg.estimator_floor) && *cfg.estimator_floor > 0.0,
            ErrorCode::InvalidConfig, "loss config: estimator_floor must be positive");
  if (cfg.anneal) {
    require(std::isfinite(cfg.anneal->beta0) && cfg.anneal->beta0 >= 0.0,
            ErrorCode::InvalidConfig, "loss config: anneal beta0 must be >= 0");
    require(cfg.anneal->ell >= 1, ErrorCode::InvalidConfig, "loss config: anneal ell must be >= 1");
  }
}

double importance_weighted_expectation(std::span<const double> scores, double beta) {
  require(!scores.empty(), ErrorCode::InvalidBatch, "importance_weighted_expectation: empty scores");
  require(std::isfinite(beta), ErrorCode::InvalidConfig,
          "importance_weighted_expectation: non-finite beta");
  require_finite(scores, "importance_weighted_expectation");
  double m = *std::max_element(scores.begin(), scores.end());
  double num = 0.0, den = 0.0;  // fixed left-to-right reduction
  for (double s : scores) {
    num += std::exp((beta + 1.0) * (s - m));
    den += std::exp(beta * (s - m));
  }
  return std::exp(m) * (num / den);
}

double nce_loss(double s_pos, std::span<const double> s_negs, const LossConfig& cfg) {
  validate(cfg);
  require(!s_negs.empty(), ErrorCode::InvalidBatch, "nce_loss: empty negatives");
  require(static_cast<int>(s_negs.size()) == cfg.N, ErrorCode::InvalidBatch,
          "nce_loss: N does not match negatives length");
  require(std::isfinite(s_pos), ErrorCode::InvalidBatch, "nce_loss: non-finite positive score");
  require_finite(s_negs, "nce_loss");
  // (Q/N) * sum e^{s_i} == Q * mean e^{s_i}; the mean is iwe at beta = 0 so
  // hard_loss(beta=0, tau_plus=0) follows the identical code path.
  double mean_exp = importance_weighted_expectation(s_negs, 0.0);
  return contrast_loss(s_pos, cfg.q_weight() * mean_exp);
}

double hard_loss(double s_pos, std::span<const double> s_pos_samples,
                 std::span<const double> s_negs, const LossConfig& cfg) {
  validate(cfg);
  require(static_cast<int>(s_pos_samples.size()) == cfg.M, ErrorCode::InvalidBatch,
          "hard_loss: M does not match positive-sample count");
  require(static_cast<int>(s_negs.size()) == cfg.N, ErrorCode::InvalidBatch,
          "hard_loss: N does not match negatives length");
  require(std::isfinite(s_pos), ErrorCode::InvalidBatch, "hard_loss: non-finite positive score");
  require_finite(s_pos_samples, "hard_loss");
  require_finite(s_negs, "hard_loss");
  double est_neg = importance_weighted_expectation(s_negs, cfg.beta);
  double est_pos = importance_weighted_expectation(s_pos_samples, cfg.beta);
  double est = (est_neg - cfg.tau_plus * est_pos) / cfg.tau_minus();
  est = std::max(est, cfg.floor_value());
  return contrast_loss(s_pos, cfg.q_weight() * est);
}

double debiased_loss(double s_pos, std::span<const double> s_pos_samples,
                     std::span<const double> s_negs, const LossConfig& cfg) {
  LossConfig c = cfg;
  c.beta = 0.0;
  return hard_loss(s_pos, s_pos_samples, s_negs, c);
}

double alignment_loss(const std::vector<std::pair<Embedding, Embedding>>& pairs) {
  require(!pairs.empty(), ErrorCode::InvalidBatch, "alignment_loss: empty pair list");
  int d = pairs.front().first.dim();
  double t = pairs.front().first.t;
  double acc = 0.0;
  for (const auto& [a, b] : pairs) {
    require(a.dim() == d && b.dim() == d, ErrorCode::Shape, "alignment_loss: dimension mismatch");
    require(a.t == t && b.t == t, ErrorCode::InvalidConfig, "alignment_loss: temperature mismatch");
    acc += (a.coords - b.coords).squaredNorm() / 2.0;
  }
  return acc / static_cast<double>(pairs.size());
}

double uniformity_loss(const std::vector<std::vector<double>>& anchor_scores,
                       const std::vector<std::vector<double>>& weights) {
  require(!anchor_scores.empty(), ErrorCode::InvalidBatch, "uniformity_loss: no anchors");
  require(anchor_scores.size() == weights.size(), ErrorCode::Shape,
          "uniformity_loss: anchors/weights count mismatch");
  double acc = 0.0;
  for (size_t a = 0; a < anchor_scores.size(); ++a) {
    const auto& s = anchor_scores[a];
    const auto& w = weights[a];
    require(!s.empty() && s.size() == w.size(), ErrorCode::Shape,
            "uniformity_loss: per-anchor score/weight length mismatch");
    double wsum = 0.0;
    for (double wi : w) {
      require(std::isfinite(wi) && wi >= 0.0, ErrorCode::InvalidDistribution,
              "uniformity_loss: weights must be finite and nonnegative");
      wsum += wi;
    }
    require(std::abs(wsum - 1.0) <= 1e-9, ErrorCode::InvalidDistribution,
            "uniformity_loss: weights must sum to 1");
    // Shift by the max score carrying positive weight.
    double m = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < s.size(); ++j) {
      require(std::isfinite(s[j]), ErrorCode::InvalidBatch, "uniformity_loss: non-finite score");
      if (w[j] > 0.0) m = std::max(m, s[j]);
    }
    double inner = 0.0;
    for (size_t j = 0; j < s.size(); ++j)
      if (w[j] > 0.0) inner += w[j] * std::exp(s[j] - m);
    acc += std::log(inner) + m;
  }
  return acc / static_cast<double>(anchor_scores.size());
}

double js_hard_loss(std::span<const double> t_pos, std::span<const double> t_neg, double beta) {
  require(!t_pos.empty() && !t_neg.empty(), ErrorCode::InvalidBatch,
          "js_hard_loss: empty score vector");
  require(std::isfinite(beta), ErrorCode::InvalidConfig, "js_hard_loss: non-finite beta");
  require_finite(t_pos, "js_hard_loss");
  require_finite(t_neg, "js_hard_loss");
  auto softplus = [](double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  };
  double pos = 0.0;
  for (double v : t_pos) pos += softplus(-v);
  pos /= static_cast<double>(t_pos.size());

  double m = *std::max_element(t_neg.begin(), t_neg.end());
  double z = 0.0;
  for (double v : t_neg) z += std::exp(beta * (v - m));
  double neg = 0.0;
  for (double v : t_neg) neg += std::exp(beta * (v - m)) / z * softplus(v);
  return pos + neg;
}

double batch_hard_loss(const ScoreBatch& batch, const LossConfig& cfg) {
  validate(cfg);
  require(cfg.M == 1, ErrorCode::InvalidConfig,
          "batch_hard_loss: layout carries one positive per anchor, so M must be 1");
  Eigen::Index B = batch.pos.size();
  require(B >= 1, ErrorCode::Shape, "batch_hard_loss: empty batch");
  require(batch.negs.rows() == B, ErrorCode::Shape,
          "batch_hard_loss: negs rows do not match anchor count");
  require(static_cast<int>(batch.negs.cols()) == cfg.N, ErrorCode::InvalidBatch,
          "batch_hard_loss: N does not match negatives per anchor");

  Eigen::VectorXd pos = batch.pos;
  auto negs = batch.negs;
  if (cfg.clip) {
    auto [lo, hi] = *cfg.clip;
    pos = pos.cwiseMax(lo).cwiseMin(hi);
    negs = negs.cwiseMax(lo).cwiseMin(hi);
  }

  double acc = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    double p = pos(i);
    std::span<const double> row(negs.row(i).data(), static_cast<size_t>(negs.cols()));
    acc += hard_loss(p, std::span<const double>(&p, 1), row, cfg);
  }
  return acc / static_cast<double>(B);
}

}  // namespace hardneg
