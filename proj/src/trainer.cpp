#include "hardneg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hardneg {

namespace {

void check_batch(const Batch& batch, const MlpParams& params) {
  require(batch.size() >= 2, ErrorCode::InvalidBatch, "batch needs at least 2 items");
  require(batch.anchors.rows() == batch.size() && batch.positives.rows() == batch.size(),
          ErrorCode::Shape, "batch rows must align with labels");
  require(batch.anchors.cols() == batch.positives.cols(), ErrorCode::Shape,
          "anchor/positive width mismatch");
  require(batch.anchors.cols() == params.layer_dims.front(), ErrorCode::Shape,
          "batch width must match the encoder input dimension");
}

// Activations kept around for the reverse pass. acts[0] is the input row,
// acts[L] the pre-normalization output; pre[l] is the affine value feeding
// activation l+1.
struct ForwardCache {
  std::vector<Eigen::VectorXd> acts;
  std::vector<Eigen::VectorXd> pre;
  Eigen::VectorXd u;  // on the radius-1/t sphere
  double r = 0.0;     // pre-normalization norm
};

ForwardCache forward_one(const MlpParams& p, const Eigen::VectorXd& x, double t) {
  ForwardCache c;
  const int L = p.num_layers();
  c.acts.resize(L + 1);
  c.pre.resize(L);
  c.acts[0] = x;
  for (int l = 0; l < L; ++l) {
    c.pre[l] = p.weights[l] * c.acts[l] + p.biases[l];
    c.acts[l + 1] = (l + 1 < L) ? c.pre[l].cwiseMax(0.0).eval() : c.pre[l];
  }
  Embedding e = normalize(c.acts[L], t);
  c.u = e.coords;
  c.r = c.acts[L].norm();
  return c;
}

// Reverse pass for one row: g_u is dLoss/d(normalized embedding); gradients
// are accumulated into `grads`.
void backward_one(const MlpParams& p, const ForwardCache& c, const Eigen::VectorXd& g_u,
                  double t, MlpParams& grads) {
  const int L = p.num_layers();
  // u = y / (t r) => dL/dy = (g - (g.uhat) uhat) / (t r) with uhat = y / r.
  Eigen::VectorXd uhat = t * c.u;
  Eigen::VectorXd g = (g_u - (g_u.dot(uhat)) * uhat) / (t * c.r);
  for (int l = L - 1; l >= 0; --l) {
    if (l + 1 < L) g = (c.pre[l].array() > 0.0).select(g, 0.0);
    grads.weights[l].noalias() += g * c.acts[l].transpose();
    grads.biases[l] += g;
    if (l > 0) g = (p.weights[l].transpose() * g).eval();
  }
}

// Derivatives of the per-anchor hardness-biased loss with respect to the
// (already clipped) positive and negative scores. The estimator expectation
// mirrors importance_weighted_expectation's max-shifted form; when the floor
// clamps, the estimator contributes no gradient and only the direct
// -log-softmax path through s_pos survives.
struct AnchorGrad {
  double d_pos = 0.0;
  Eigen::VectorXd d_negs;
};

AnchorGrad anchor_grad(double s_pos, const Eigen::Ref<const Eigen::VectorXd>& negs,
                       const LossConfig& lc) {
  const double beta = lc.beta;
  const double tau_plus = lc.tau_plus;
  const double tau_minus = lc.tau_minus();
  const double q = lc.q_weight();
  const double m = negs.maxCoeff();
  double num = 0.0, den = 0.0;
  for (Eigen::Index j = 0; j < negs.size(); ++j) {
    num += std::exp((beta + 1.0) * (negs[j] - m));
    den += std::exp(beta * (negs[j] - m));
  }
  const double e_neg = std::exp(m) * (num / den);
  const double e_pos = std::exp(s_pos);
  const double raw_est = (e_neg - tau_plus * e_pos) / tau_minus;
  const double fl = lc.floor_value();
  const bool floored = !(raw_est > fl);
  const double qe = q * std::max(raw_est, fl);

  const double d = e_pos + qe;
  AnchorGrad ag;
  ag.d_pos = e_pos / d - 1.0;
  ag.d_negs = Eigen::VectorXd::Zero(negs.size());
  if (!floored) {
    ag.d_pos += (q / d) * (-tau_plus / tau_minus) * e_pos;
    const double ratio = num / den;  // e^{-m} E_neg
    for (Eigen::Index j = 0; j < negs.size(); ++j) {
      const double dnum = (beta + 1.0) * std::exp((beta + 1.0) * (negs[j] - m));
      const double dden = beta * std::exp(beta * (negs[j] - m));
      ag.d_negs[j] = (q / d) / tau_minus * std::exp(m) * (dnum - ratio * dden) / den;
    }
  }
  return ag;
}

int total_coords(const MlpParams& p) {
  int n = 0;
  for (int l = 0; l < p.num_layers(); ++l)
    n += static_cast<int>(p.weights[l].size() + p.biases[l].size());
  return n;
}

double* coord_ptr(MlpParams& p, int idx) {
  for (int l = 0; l < p.num_layers(); ++l) {
    int wn = static_cast<int>(p.weights[l].size());
    if (idx < wn) return p.weights[l].data() + idx;
    idx -= wn;
    int bn = static_cast<int>(p.biases[l].size());
    if (idx < bn) return p.biases[l].data() + idx;
    idx -= bn;
  }
  fail(ErrorCode::Usage, "parameter coordinate out of range");
}

}  // namespace

void validate(const MlpParams& params) {
  const int L = params.num_layers();
  require(L >= 1, ErrorCode::InvalidConfig, "encoder needs at least one layer");
  require(params.biases.size() == params.weights.size(), ErrorCode::Shape,
          "weight/bias layer count mismatch");
  require(static_cast<int>(params.layer_dims.size()) == L + 1, ErrorCode::Shape,
          "layer_dims must list input plus every layer output");
  for (int l = 0; l <= L; ++l)
    require(params.layer_dims[l] >= 1, ErrorCode::InvalidConfig, "layer dimensions must be >= 1");
  for (int l = 0; l < L; ++l) {
    require(params.weights[l].rows() == params.layer_dims[l + 1] &&
                params.weights[l].cols() == params.layer_dims[l],
            ErrorCode::Shape, "weight matrix shape disagrees with layer_dims");
    require(params.biases[l].size() == params.layer_dims[l + 1], ErrorCode::Shape,
            "bias length disagrees with layer_dims");
    require(params.weights[l].allFinite() && params.biases[l].allFinite(),
            ErrorCode::DegenerateInput, "non-finite encoder parameters");
  }
}

MlpParams init_mlp(std::span<const int> layer_dims, Rng& rng) {
  require(layer_dims.size() >= 2, ErrorCode::InvalidConfig,
          "need an input and at least one output dimension");
  MlpParams p;
  p.layer_dims.assign(layer_dims.begin(), layer_dims.end());
  const int L = static_cast<int>(layer_dims.size()) - 1;
  p.weights.resize(L);
  p.biases.resize(L);
  for (int l = 0; l < L; ++l) {
    const int rows = layer_dims[l + 1], cols = layer_dims[l];
    require(rows >= 1 && cols >= 1, ErrorCode::InvalidConfig, "layer dimensions must be >= 1");
    const double scale = std::sqrt(2.0 / static_cast<double>(cols));
    p.weights[l].resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) p.weights[l](r, c) = scale * rng.normal();
    p.biases[l] = Eigen::VectorXd::Zero(rows);
  }
  validate(p);
  return p;
}

AdamState init_adam(const MlpParams& params) {
  validate(params);
  AdamState s;
  const int L = params.num_layers();
  s.m_w.resize(L);
  s.v_w.resize(L);
  s.m_b.resize(L);
  s.v_b.resize(L);
  for (int l = 0; l < L; ++l) {
    s.m_w[l] = Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols());
    s.v_w[l] = s.m_w[l];
    s.m_b[l] = Eigen::VectorXd::Zero(params.biases[l].size());
    s.v_b[l] = s.m_b[l];
  }
  return s;
}

void validate(const TrainConfig& cfg) {
  require(cfg.epochs >= 1, ErrorCode::InvalidConfig, "epochs must be >= 1");
  require(cfg.batch_size >= 2, ErrorCode::InvalidConfig, "batch_size must be >= 2");
  require(cfg.batches_per_epoch >= 1, ErrorCode::InvalidConfig, "batches_per_epoch must be >= 1");
  require(std::isfinite(cfg.lr) && cfg.lr > 0.0, ErrorCode::InvalidConfig, "lr must be positive");
  require(std::isfinite(cfg.weight_decay) && cfg.weight_decay >= 0.0, ErrorCode::InvalidConfig,
          "weight_decay must be >= 0");
  require(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0, ErrorCode::InvalidConfig,
          "adam_beta1 must lie in [0, 1)");
  require(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0, ErrorCode::InvalidConfig,
          "adam_beta2 must lie in [0, 1)");
  require(std::isfinite(cfg.adam_eps) && cfg.adam_eps > 0.0, ErrorCode::InvalidConfig,
          "adam_eps must be positive");
  require(cfg.eval_every >= 1, ErrorCode::InvalidConfig, "eval_every must be >= 1");
  require(cfg.eval_size >= 2, ErrorCode::InvalidConfig, "eval_size must be >= 2");
  require(cfg.knn_k >= 1, ErrorCode::InvalidConfig, "knn_k must be >= 1");
  require(cfg.knn_k <= cfg.eval_size, ErrorCode::InvalidConfig,
          "knn_k cannot exceed the evaluation reference size");
  for (int h : cfg.hidden_dims)
    require(h >= 1, ErrorCode::InvalidConfig, "hidden dimensions must be >= 1");
  require(cfg.embed_dim >= 1, ErrorCode::InvalidConfig, "embed_dim must be >= 1");
  if (cfg.anneal_ell)
    require(*cfg.anneal_ell >= 1 && *cfg.anneal_ell <= cfg.epochs, ErrorCode::InvalidConfig,
            "anneal_ell must lie in [1, epochs]");
  LossConfig lc = cfg.loss;
  lc.N = 2 * (cfg.batch_size - 1);  // in-batch convention; N is derived
  lc.M = 1;
  validate(lc);
}

std::vector<Embedding> forward_embed(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                     double t) {
  validate(params);
  require(inputs.rows() >= 1, ErrorCode::Shape, "need at least one input row");
  require(inputs.cols() == params.layer_dims.front(), ErrorCode::Shape,
          "input width must match the encoder input dimension");
  require(inputs.allFinite(), ErrorCode::DegenerateInput, "non-finite encoder input");
  std::vector<Embedding> out;
  out.reserve(inputs.rows());
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    ForwardCache c = forward_one(params, inputs.row(i).transpose(), t);
    out.push_back(Embedding{c.u, t, true});
  }
  return out;
}

std::pair<double, MlpParams> loss_and_grad(const MlpParams& params, const Batch& batch,
                                           const TrainConfig& cfg) {
  validate(params);
  validate(cfg);
  check_batch(batch, params);
  require(params.layer_dims.back() >= 2, ErrorCode::InvalidConfig,
          "contrastive training needs an embedding dimension >= 2");

  const int b = batch.size();
  const double t = cfg.loss.t;
  LossConfig lc = cfg.loss;
  lc.N = 2 * (b - 1);
  lc.M = 1;

  std::vector<ForwardCache> ca(b), cp(b);
  for (int i = 0; i < b; ++i) {
    ca[i] = forward_one(params, batch.anchors.row(i).transpose(), t);
    cp[i] = forward_one(params, batch.positives.row(i).transpose(), t);
  }

  // Raw scores; the loss itself reapplies the clip inside batch_hard_loss so
  // the value here is bitwise the scalar objective.
  ScoreBatch sb;
  sb.pos.resize(b);
  sb.negs.resize(b, lc.N);
  for (int i = 0; i < b; ++i) {
    sb.pos[i] = ca[i].u.dot(cp[i].u);
    int col = 0;
    for (int j = 0; j < b; ++j)
      if (j != i) sb.negs(i, col++) = ca[i].u.dot(ca[j].u);
    for (int j = 0; j < b; ++j)
      if (j != i) sb.negs(i, col++) = ca[i].u.dot(cp[j].u);
  }
  const double loss = batch_hard_loss(sb, lc);

  const bool has_clip = lc.clip.has_value();
  const double lo = has_clip ? lc.clip->first : 0.0;
  const double hi = has_clip ? lc.clip->second : 0.0;
  auto clipv = [&](double s) { return has_clip ? std::clamp(s, lo, hi) : s; };
  auto gate = [&](double s) { return (!has_clip || (s > lo && s < hi)) ? 1.0 : 0.0; };

  std::vector<Eigen::VectorXd> gu(b, Eigen::VectorXd::Zero(ca[0].u.size()));
  std::vector<Eigen::VectorXd> gv(b, Eigen::VectorXd::Zero(ca[0].u.size()));
  const double inv_b = 1.0 / static_cast<double>(b);
  Eigen::VectorXd negs_clipped(lc.N);
  for (int i = 0; i < b; ++i) {
    for (int jj = 0; jj < lc.N; ++jj) negs_clipped[jj] = clipv(sb.negs(i, jj));
    AnchorGrad ag = anchor_grad(clipv(sb.pos[i]), negs_clipped, lc);
    const double dp = inv_b * gate(sb.pos[i]) * ag.d_pos;
    gu[i] += dp * cp[i].u;
    gv[i] += dp * ca[i].u;
    int col = 0;
    for (int j = 0; j < b; ++j) {
      if (j == i) continue;
      const double dn = inv_b * gate(sb.negs(i, col)) * ag.d_negs[col];
      gu[i] += dn * ca[j].u;
      gu[j] += dn * ca[i].u;
      ++col;
    }
    for (int j = 0; j < b; ++j) {
      if (j == i) continue;
      const double dn = inv_b * gate(sb.negs(i, col)) * ag.d_negs[col];
      gu[i] += dn * cp[j].u;
      gv[j] += dn * ca[i].u;
      ++col;
    }
  }

  MlpParams grads;
  grads.layer_dims = params.layer_dims;
  grads.weights.resize(params.num_layers());
  grads.biases.resize(params.num_layers());
  for (int l = 0; l < params.num_layers(); ++l) {
    grads.weights[l] = Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols());
    grads.biases[l] = Eigen::VectorXd::Zero(params.biases[l].size());
  }
  for (int i = 0; i < b; ++i) {
    backward_one(params, ca[i], gu[i], t, grads);
    backward_one(params, cp[i], gv[i], t, grads);
  }
  return {loss, std::move(grads)};
}

double finite_diff_check(const MlpParams& params, const Batch& batch, const TrainConfig& cfg,
                         double h) {
  require(std::isfinite(h) && h >= 1e-7 && h <= 1e-3, ErrorCode::Usage,
          "step size must lie in [1e-7, 1e-3]");
  auto [base, grads] = loss_and_grad(params, batch, cfg);
  const int total = total_coords(params);
  const int target = std::min(total, 200);
  // Central differences carry additive noise of order ulp(loss)/2h, so a
  // coordinate whose slope sits near that floor (a nearly-dead rectifier
  // path) cannot be resolved by a relative comparison at any step size in
  // the admissible range; sampling passes over such coordinates.
  const double signal_floor = 1e5 * std::numeric_limits<double>::epsilon() *
                              std::max(1.0, std::abs(base)) / h;
  MlpParams probe = params;
  auto eval_at = [&](int idx, double delta) {
    double* x = coord_ptr(probe, idx);
    const double saved = *x;
    *x = saved + delta;
    const double v = loss_and_grad(probe, batch, cfg).first;
    *x = saved;
    return v;
  };
  // Deterministic scrambled walk touching every coordinate at most once.
  int step = std::max(1, static_cast<int>(0.618 * total));
  while (total > 1 && std::gcd(step, total) != 1) ++step;
  double worst = 0.0;
  int checked = 0;
  int idx = 0;
  for (int j = 0; j < total && checked < target; ++j, idx = (idx + step) % total) {
    const double c_full = (eval_at(idx, h) - eval_at(idx, -h)) / (2.0 * h);
    const double c_half = (eval_at(idx, h / 2) - eval_at(idx, -h / 2)) / h;
    // A rectifier or clip kink inside the step window makes the central
    // estimate step-size dependent; such coordinates are excluded — the
    // check targets smooth neighborhoods only.
    if (std::abs(c_full - c_half) / (std::abs(c_full) + std::abs(c_half) + 1e-12) > 1e-6)
      continue;
    const double analytic = *coord_ptr(grads, idx);
    if (std::abs(analytic) + std::abs(c_full) < signal_floor) continue;
    const double rel =
        std::abs(analytic - c_full) / (std::abs(analytic) + std::abs(c_full) + 1e-12);
    worst = std::max(worst, rel);
    ++checked;
  }
  return worst;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state,
               const TrainConfig& cfg) {
  validate(params);
  validate(cfg);
  require(grads.num_layers() == params.num_layers() &&
              state.m_w.size() == params.weights.size(),
          ErrorCode::Shape, "gradient/state layer count mismatch");
  for (int l = 0; l < params.num_layers(); ++l) {
    require(grads.weights[l].rows() == params.weights[l].rows() &&
                grads.weights[l].cols() == params.weights[l].cols() &&
                grads.biases[l].size() == params.biases[l].size(),
            ErrorCode::Shape, "gradient shape mismatch");
    require(state.m_w[l].rows() == params.weights[l].rows() &&
                state.m_w[l].cols() == params.weights[l].cols() &&
                state.m_b[l].size() == params.biases[l].size(),
            ErrorCode::Shape, "optimizer state shape mismatch");
  }
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, state.step);
  const double bc2 = 1.0 - std::pow(b2, state.step);
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    p *= decay;  // decoupled decay applied before the Adam delta
    m = b1 * m + (1.0 - b1) * g;
    v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
    p.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);
  };
  for (int l = 0; l < params.num_layers(); ++l) {
    update(params.weights[l], grads.weights[l], state.m_w[l], state.v_w[l]);
    update(params.biases[l], grads.biases[l], state.m_b[l], state.v_b[l]);
  }
}

double anneal_beta(double beta0, int ell, int epochs, int epoch) {
  require(std::isfinite(beta0) && beta0 >= 0.0, ErrorCode::Usage, "beta0 must be >= 0");
  require(epochs >= 1, ErrorCode::Usage, "epochs must be >= 1");
  require(epoch >= 0 && epoch < epochs, ErrorCode::Usage, "epoch must lie in [0, epochs)");
  require(ell >= 1 && ell <= epochs, ErrorCode::Usage, "ell must lie in [1, epochs]");
  const long long k = (static_cast<long long>(epoch) * ell) / epochs;
  return std::max(beta0 - static_cast<double>(k) * beta0 / ell, 0.0);
}

TrainResult train_run(const TrainConfig& cfg, const LatentClassSpec& data_spec, Rng& rng) {
  validate(cfg);
  validate(data_spec);
  require(std::abs(data_spec.t - cfg.loss.t) < 1e-12, ErrorCode::InvalidConfig,
          "data spec and loss temperature disagree");

  std::vector<int> dims;
  dims.push_back(data_spec.input_dim);
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.embed_dim);

  Rng init_rng = rng.child(1);
  Rng data_rng = rng.child(2);
  Rng eval_rng = rng.child(3);

  TrainResult result;
  result.params = init_mlp(dims, init_rng);
  AdamState adam = init_adam(result.params);

  const Batch ref = sample_batch(data_spec, cfg.eval_size, eval_rng);
  const Batch query = sample_batch(data_spec, cfg.eval_size, eval_rng);

  double accuracy = 0.0;
  result.history.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    TrainConfig ecfg = cfg;
    if (cfg.anneal_ell)
      ecfg.loss.beta = anneal_beta(cfg.loss.beta, *cfg.anneal_ell, cfg.epochs, epoch);
    double sum = 0.0;
    for (int bidx = 0; bidx < cfg.batches_per_epoch; ++bidx) {
      Batch bt = sample_batch(data_spec, cfg.batch_size, data_rng);
      auto [l, g] = loss_and_grad(result.params, bt, ecfg);
      adam_step(result.params, g, adam, cfg);
      sum += l;
    }
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs - 1) {
      auto re = forward_embed(result.params, ref.anchors, cfg.loss.t);
      auto qe = forward_embed(result.params, query.anchors, cfg.loss.t);
      accuracy = knn_eval(re, ref.labels, qe, query.labels, cfg.knn_k, cfg.knn_weighted);
    }
    result.history.push_back(
        {epoch, sum / static_cast<double>(cfg.batches_per_epoch), accuracy});
  }
  return result;
}

double knn_eval(const std::vector<Embedding>& ref_embs, const std::vector<int>& ref_labels,
                const std::vector<Embedding>& query_embs, const std::vector<int>& query_labels,
                int k, bool weighted) {
  require(!ref_embs.empty() && !query_embs.empty(), ErrorCode::InvalidBatch,
          "reference and query sets must be non-empty");
  require(ref_embs.size() == ref_labels.size() && query_embs.size() == query_labels.size(),
          ErrorCode::Shape, "embedding/label count mismatch");
  require(k >= 1 && k <= static_cast<int>(ref_embs.size()), ErrorCode::Usage,
          "k must lie in [1, reference size]");
  const int d = ref_embs.front().dim();
  int num_classes = 0;
  for (const auto& e : ref_embs)
    require(e.dim() == d, ErrorCode::Shape, "embedding dimension mismatch");
  for (const auto& e : query_embs)
    require(e.dim() == d, ErrorCode::Shape, "embedding dimension mismatch");
  for (int c : ref_labels) {
    require(c >= 0, ErrorCode::InvalidBatch, "labels must be >= 0");
    num_classes = std::max(num_classes, c + 1);
  }
  for (int c : query_labels) {
    require(c >= 0, ErrorCode::InvalidBatch, "labels must be >= 0");
    num_classes = std::max(num_classes, c + 1);
  }

  int correct = 0;
  std::vector<int> order(ref_embs.size());
  std::vector<double> scores(ref_embs.size());
  std::vector<double> votes(num_classes);
  std::vector<char> present(num_classes);
  for (size_t qi = 0; qi < query_embs.size(); ++qi) {
    for (size_t j = 0; j < ref_embs.size(); ++j)
      scores[j] = query_embs[qi].coords.dot(ref_embs[j].coords);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int bb) {
      if (scores[a] != scores[bb]) return scores[a] > scores[bb];
      return a < bb;  // deterministic neighbor choice on score ties
    });
    std::fill(votes.begin(), votes.end(), 0.0);
    std::fill(present.begin(), present.end(), 0);
    for (int n = 0; n < k; ++n) {
      const int j = order[n];
      votes[ref_labels[j]] += weighted ? scores[j] : 1.0;
      present[ref_labels[j]] = 1;
    }
    int pred = -1;
    for (int c = 0; c < num_classes; ++c) {
      if (!present[c]) continue;
      if (pred < 0 || votes[c] > votes[pred]) pred = c;  // ties keep the smaller class
    }
    if (pred == query_labels[qi]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(query_embs.size());
}

FinitePopulation embed_population(const MlpParams& params, const FinitePopulation& raw,
                                  double t) {
  validate(params);
  // Embedding places no class-structure demands on the input (a one-class
  // population is fine); only shapes and alignment matter here.
  require(raw.size() >= 2, ErrorCode::Shape, "population needs at least 2 points");
  require(raw.labels.size() == raw.points.size() &&
              raw.base_weights.size() == raw.points.size(),
          ErrorCode::Shape, "population fields must align");
  require(raw.dim() == params.layer_dims.front(), ErrorCode::Shape,
          "population width must match the encoder input dimension");
  FinitePopulation out;
  out.labels = raw.labels;
  out.base_weights = raw.base_weights;
  out.points.reserve(raw.size());
  for (const auto& p : raw.points) {
    require(p.dim() == raw.dim(), ErrorCode::Shape, "points must share dimension");
    ForwardCache c = forward_one(params, p.coords, t);
    out.points.push_back(Embedding{c.u, t, true});
  }
  return out;
}

}  // namespace hardneg
