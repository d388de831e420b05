#include "hardneg/sphere.hpp"

namespace hardneg {

Embedding normalize(const Eigen::VectorXd& v, double t) {
  require(std::isfinite(t) && t > 0.0, ErrorCode::InvalidConfig, "normalize: t must be positive");
  require(v.size() >= 1, ErrorCode::Shape, "normalize: empty vector");
  require(v.allFinite(), ErrorCode::DegenerateInput, "normalize: non-finite entries");
  double norm = v.norm();
  require(norm > 1e-12, ErrorCode::DegenerateInput, "normalize: near-zero vector");
  Embedding e;
  e.coords = v / (t * norm);
  e.t = t;
  e.normalized = true;
  return e;
}

void check_embedding(const Embedding& e) {
  require(e.dim() >= 1, ErrorCode::Shape, "embedding: empty coords");
  require(std::isfinite(e.t) && e.t > 0.0, ErrorCode::InvalidConfig, "embedding: t must be positive");
  require(e.coords.allFinite(), ErrorCode::DegenerateInput, "embedding: non-finite entries");
  if (e.normalized) {
    double target = 1.0 / e.t;
    require(std::abs(e.coords.norm() - target) <= 1e-9 * target, ErrorCode::DegenerateInput,
            "embedding: norm differs from 1/t beyond tolerance");
  }
}

ScoreMatrix score_matrix(const std::vector<Embedding>& anchors,
                         const std::vector<Embedding>& candidates) {
  require(!anchors.empty() && !candidates.empty(), ErrorCode::Shape,
          "score_matrix: empty embedding list");
  int d = anchors.front().dim();
  double t = anchors.front().t;
  auto check = [&](const Embedding& e) {
    require(e.dim() == d, ErrorCode::Shape, "score_matrix: dimension mismatch");
    require(e.t == t, ErrorCode::Shape, "score_matrix: temperature mismatch");
  };
  for (const auto& a : anchors) check(a);
  for (const auto& c : candidates) check(c);

  ScoreMatrix S;
  S.values.resize(static_cast<Eigen::Index>(anchors.size()),
                  static_cast<Eigen::Index>(candidates.size()));
  for (size_t i = 0; i < anchors.size(); ++i)
    for (size_t j = 0; j < candidates.size(); ++j)
      S.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          anchors[i].coords.dot(candidates[j].coords);
  S.lo = -1.0 / (t * t);
  S.hi = 1.0 / (t * t);
  return S;
}

ScoreMatrix clip_scores(const ScoreMatrix& S, double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorCode::InvalidConfig,
          "clip_scores: need lo < hi");
  ScoreMatrix out;
  out.values = S.values.cwiseMax(lo).cwiseMin(hi);
  out.lo = lo;
  out.hi = hi;
  return out;
}

}  // namespace hardneg
