#include "hardneg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hardneg {

namespace {

std::string fmt(double x) { return format_double(x); }

Embedding random_unit(int d, double t, Rng& rng) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return normalize(v, t);
}

// Seeded population on the sphere. The first `classes` labels are forced so
// every class is populated (and with 2 * classes points, twice), the rest
// are drawn uniformly; weights are uniform or strictly positive random.
FinitePopulation random_sphere_pop(int classes, int n, int d, double t, bool uniform_mass,
                                   Rng& rng) {
  require(n >= 2 * classes, ErrorCode::Usage, "population too small for its class count");
  FinitePopulation pop;
  pop.points.reserve(n);
  pop.labels.resize(n);
  pop.base_weights.resize(n);
  for (int i = 0; i < n; ++i) {
    pop.points.push_back(random_unit(d, t, rng));
    pop.labels[i] = i < 2 * classes ? i % classes : static_cast<int>(rng.uniform_int(classes));
  }
  if (uniform_mass) {
    std::fill(pop.base_weights.begin(), pop.base_weights.end(), 1.0 / n);
  } else {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      pop.base_weights[i] = 0.1 + rng.uniform();
      total += pop.base_weights[i];
    }
    for (double& w : pop.base_weights) w /= total;
  }
  validate(pop);
  return pop;
}

SuiteReport suite_equivalence(const VerifyOptions& opt) {
  SuiteReport r{"equivalence", false, 0.0, 1e-12, ""};
  std::ostringstream csv;
  csv << "batch,reduction_diff,forced_beta_diff\n";
  Rng rng(opt.seed);
  const int n_negs = 16;
  for (int b = 0; b < 1000; ++b) {
    double s_pos = 2.0 * rng.uniform() - 1.0;
    std::vector<double> negs(n_negs);
    for (double& s : negs) s = 2.0 * rng.uniform() - 1.0;
    const double tau = 0.3 * rng.uniform();

    LossConfig plain;
    plain.beta = 0.0;
    plain.tau_plus = 0.0;
    plain.N = n_negs;
    plain.t = 1.0;
    std::vector<double> pos_samples{s_pos};
    const double d1 =
        std::abs(hard_loss(s_pos, pos_samples, negs, plain) - nce_loss(s_pos, negs, plain));

    LossConfig tilted = plain;
    tilted.beta = 3.0;
    tilted.tau_plus = tau;
    LossConfig zeroed = tilted;
    zeroed.beta = 0.0;
    const double d2 = std::abs(hard_loss(s_pos, pos_samples, negs, zeroed) -
                               debiased_loss(s_pos, pos_samples, negs, tilted));

    csv << b << ',' << fmt(d1) << ',' << fmt(d2) << '\n';
    r.worst = std::max(r.worst, std::max(d1, d2));
  }
  r.evidence_csv = csv.str();
  r.pass = r.worst < r.tolerance;
  return r;
}

SuiteReport suite_decomposition(const VerifyOptions& opt) {
  SuiteReport r{"decomposition", false, 0.0, 1e-9, ""};
  std::ostringstream csv;
  csv << "pop,t,lhs,rhs,abs_diff\n";
  Rng root(opt.seed);
  const double ts[] = {0.5, 1.0, 2.0};
  for (int p = 0; p < 100; ++p) {
    Rng rng = root.child(p);
    const double t = ts[p % 3];
    auto pop = random_sphere_pop(opt.classes, std::min(opt.pop_size, 40), 6, t, false, rng);
    auto positives = cyclic_positives(pop);
    const int n = pop.size();

    // Direct full-population objective: negatives are the whole base measure
    // (anchor included), one positive per anchor.
    double lhs = 0.0;
    std::vector<std::vector<double>> anchor_scores(n);
    std::vector<std::vector<double>> weights(n, pop.base_weights);
    std::vector<std::pair<Embedding, Embedding>> pairs;
    for (int i = 0; i < n; ++i) {
      anchor_scores[i] = scores_from_anchor(pop, i);
      double mass = 0.0;
      for (int j = 0; j < n; ++j) mass += pop.base_weights[j] * std::exp(anchor_scores[i][j]);
      lhs += -anchor_scores[i][positives[i]] + std::log(mass);
      pairs.emplace_back(pop.points[i], pop.points[positives[i]]);
    }
    lhs /= n;

    const double rhs = alignment_loss(pairs) + uniformity_loss(anchor_scores, weights) -
                       1.0 / (t * t);
    const double diff = std::abs(lhs - rhs);
    csv << p << ',' << fmt(t) << ',' << fmt(lhs) << ',' << fmt(rhs) << ',' << fmt(diff) << '\n';
    r.worst = std::max(r.worst, diff);
  }
  r.evidence_csv = csv.str();
  r.pass = r.worst < r.tolerance;
  return r;
}

SuiteReport suite_prop1(const VerifyOptions& opt) {
  SuiteReport r{"prop1", false, 0.0, 0.05, ""};
  require(opt.beta_grid.size() >= 2, ErrorCode::Usage, "prop1 needs a beta grid of >= 2 points");
  Rng rng(opt.seed);
  auto pop = random_sphere_pop(opt.classes, opt.pop_size, 8, 1.0, true, rng);
  auto positives = cyclic_positives(pop);
  auto rows = prop1_report(pop, positives, static_cast<double>(pop.size()), opt.beta_grid);

  std::ostringstream csv;
  csv << "beta,gap\n";
  bool decreasing = true;
  for (size_t i = 0; i < rows.size(); ++i) {
    csv << fmt(rows[i].beta) << ',' << fmt(rows[i].gap) << '\n';
    if (i > 0 && !(rows[i].gap < rows[i - 1].gap)) decreasing = false;
  }
  r.evidence_csv = csv.str();
  // Depth check mirrors the gate: once the grid spans beta 0 to >= 100 the
  // residual gap must have shrunk to 5% of the initial one.
  const bool deep = opt.beta_grid.front() == 0.0 && opt.beta_grid.back() >= 100.0;
  r.worst = rows.front().gap > 0.0 ? rows.back().gap / rows.front().gap : 0.0;
  r.pass = decreasing && (!deep || r.worst <= r.tolerance);
  return r;
}

SuiteReport suite_pu_mixture(const VerifyOptions& opt) {
  SuiteReport r{"pu-mixture", false, 0.0, 1e-14, ""};
  std::ostringstream csv;
  csv << "pop,anchor,residual_beta0,residual_beta1\n";
  Rng root(opt.seed);
  for (int p = 0; p < 100; ++p) {
    Rng rng = root.child(p);
    auto pop = random_sphere_pop(opt.classes, std::min(opt.pop_size, 32), 5, 1.0, false, rng);
    const int anchor = p % pop.size();
    const double r0 = pu_mixture_residual(pop, anchor, 0.0);
    const double r1 = pu_mixture_residual(pop, anchor, 1.0);
    csv << p << ',' << anchor << ',' << fmt(r0) << ',' << fmt(r1) << '\n';
    r.worst = std::max(r.worst, r0);
  }
  r.evidence_csv = csv.str();
  r.pass = r.worst < r.tolerance;
  return r;
}

SuiteReport suite_variance(const VerifyOptions& opt) {
  SuiteReport r{"variance", false, 0.0, 1e-12, ""};
  std::ostringstream csv;
  csv << "pop,t,beta,worst_margin,holds\n";
  Rng root(opt.seed);
  const double betas[] = {0.0, 1.0, 5.0};
  bool all_hold = true;
  r.worst = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < 100; ++p) {
    Rng rng = root.child(p);
    const double t = (p % 2 == 0) ? 0.5 : 1.0;
    auto pop = random_sphere_pop(opt.classes, std::min(opt.pop_size, 40), 5, t, false, rng);
    for (double beta : betas) {
      double margin = -std::numeric_limits<double>::infinity();
      bool holds = true;
      for (int a = 0; a < pop.size(); ++a) {
        auto rep = variance_lemma_check(pop, a, beta, t);
        margin = std::max(margin, rep.variance - rep.bound);
        holds = holds && rep.holds;
      }
      csv << p << ',' << fmt(t) << ',' << fmt(beta) << ',' << fmt(margin) << ','
          << (holds ? "true" : "false") << '\n';
      all_hold = all_hold && holds;
      r.worst = std::max(r.worst, margin);
    }
  }
  r.evidence_csv = csv.str();
  r.pass = all_hold;
  return r;
}

SuiteReport suite_gradcheck(const VerifyOptions& opt) {
  SuiteReport r{"gradcheck", false, 0.0, 1e-5, ""};
  std::ostringstream csv;
  csv << "case,layers,beta,tau_plus,clip,floor,max_rel_err,tolerance\n";
  Rng root(opt.seed);
  bool all_pass = true;
  for (int k = 0; k < 20; ++k) {
    const int classes = 2 + k % 2;
    const int in_dim = 4 + (k % 2) * 2;
    auto spec = default_latent_spec(classes, in_dim, 3.0, 0.4, 0.1, 1.0);

    TrainConfig cfg;
    cfg.loss.t = 1.0;
    cfg.loss.beta = static_cast<double>(k % 3);
    cfg.loss.tau_plus = (k % 2 == 0) ? 0.0 : 0.1;
    const bool clipped = (k % 5 == 1);
    const bool floored = (k % 5 == 2);
    if (clipped) cfg.loss.clip = {{-0.3, 0.3}};
    if (floored) cfg.loss.estimator_floor = 50.0;  // binds: scores stay within [-1, 1]

    const bool linear = (k % 4 == 0);
    std::vector<int> dims;
    if (linear)
      dims = {in_dim, 3};
    else if (k % 4 == 1)
      dims = {in_dim, 16, 4};
    else
      dims = {in_dim, 16, 8, 4};

    const double tol = linear ? 1e-6 : 1e-5;
    // A freshly drawn deep rectifier stack can zero out an input row, which
    // the sphere projection rejects; redraw the triple until it is usable.
    double err = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 16; ++attempt) {
      Rng rng = root.child(k * 100 + attempt);
      Batch batch = sample_batch(spec, 4, rng);
      auto params = init_mlp(dims, rng);
      // Small positive biases keep hidden layers alive without moving any
      // pre-activation onto its kink.
      for (int l = 0; l + 1 < params.num_layers(); ++l)
        params.biases[l].setConstant(0.05);
      try {
        err = finite_diff_check(params, batch, cfg, 1e-5);
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateInput) throw;
      }
    }
    csv << k << ',' << dims.size() - 1 << ',' << fmt(cfg.loss.beta) << ','
        << fmt(cfg.loss.tau_plus) << ',' << (clipped ? 1 : 0) << ',' << (floored ? 1 : 0) << ','
        << fmt(err) << ',' << fmt(tol) << '\n';
    all_pass = all_pass && err < tol;
    r.worst = std::max(r.worst, err);
  }
  r.evidence_csv = csv.str();
  r.pass = all_pass;
  return r;
}

SuiteReport suite_sampler(const VerifyOptions& opt) {
  SuiteReport r{"sampler", false, 0.0, 0.02, ""};
  std::ostringstream csv;
  csv << "pop,size,beta,restriction,tv\n";
  Rng root(opt.seed);
  const double betas[] = {0.0, 1.0, 2.5, 5.0};
  const int draws = 100000;
  for (int p = 0; p < 10; ++p) {
    Rng rng = root.child(p);
    const int n = 20 + (p % 3) * 15;
    auto pop = random_sphere_pop(opt.classes, n, 5, 1.0, p % 2 == 0, rng);
    const int anchor = p % n;
    const double beta = betas[p % 4];
    Restriction restrict;
    const char* rname = "all";
    if (p % 3 == 1) {
      restrict = Restriction::diff_class(pop.labels[anchor]);
      rname = "diff-class";
    } else if (p % 3 == 2) {
      restrict = Restriction::same_class(pop.labels[anchor]);
      rname = "same-class";
    }
    auto scores = scores_from_anchor(pop, anchor);
    auto q = tilted_distribution(pop, scores, beta, restrict);
    auto samples = rejection_sample_tilted(pop, scores, beta, restrict, rng, draws);
    std::vector<double> counts(pop.size(), 0.0);
    for (int idx : samples) counts[idx] += 1.0;
    double tv = 0.0;
    for (int i = 0; i < pop.size(); ++i) tv += std::abs(counts[i] / draws - q[i]);
    tv *= 0.5;
    csv << p << ',' << n << ',' << fmt(beta) << ',' << rname << ',' << fmt(tv) << '\n';
    r.worst = std::max(r.worst, tv);
  }
  r.evidence_csv = csv.str();
  r.pass = r.worst < r.tolerance;
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "equivalence", "decomposition", "prop1", "pu-mixture", "variance", "gradcheck", "sampler"};
  return names;
}

SuiteReport run_suite(const std::string& name, const VerifyOptions& opt) {
  if (name == "equivalence") return suite_equivalence(opt);
  if (name == "decomposition") return suite_decomposition(opt);
  if (name == "prop1") return suite_prop1(opt);
  if (name == "pu-mixture") return suite_pu_mixture(opt);
  if (name == "variance") return suite_variance(opt);
  if (name == "gradcheck") return suite_gradcheck(opt);
  if (name == "sampler") return suite_sampler(opt);
  fail(ErrorCode::Usage, "unknown verification suite: " + name);
}

namespace {

BoundReport clustered_bound_case(int classes, int dim, double sigma, std::span<const double> rho,
                                 Rng& rng) {
  const double t = 1.0;
  Rng solver_rng = rng.child(1);
  auto packing = tammes_solve(classes, dim, t, rho, 8, 300, solver_rng);

  // Cluster per-class points tightly around each optimal prototype.
  const int per_class = 8;
  FinitePopulation pop;
  const int n = per_class * classes;
  pop.points.reserve(n);
  pop.labels.reserve(n);
  pop.base_weights.assign(n, 1.0 / n);
  Rng noise = rng.child(2);
  for (int cls = 0; cls < classes; ++cls) {
    for (int k = 0; k < per_class; ++k) {
      Eigen::VectorXd v = packing.prototypes[cls];
      for (int j = 0; j < dim; ++j) v[j] += sigma * noise.normal();
      pop.points.push_back(normalize(v, t));
      pop.labels.push_back(cls);
    }
  }
  validate(pop);
  return bound_check_experiment(pop, cyclic_positives(pop), packing);
}

}  // namespace

std::vector<BoundReport> bound_experiment(int configs, uint64_t seed) {
  require(configs >= 1, ErrorCode::Usage, "need at least one configuration");
  std::vector<BoundReport> out;
  out.reserve(configs);
  Rng root(seed);
  // (classes, dim) pairs whose packing optimum is known to be reachable
  // quickly; perturbation scales chosen so the bound denominator stays valid.
  struct Combo {
    int classes, dim;
    double sigma;
  };
  const Combo combos[] = {
      {2, 3, 0.05}, {3, 4, 0.012}, {2, 2, 0.05}, {4, 3, 0.008}, {3, 3, 0.012}};
  for (int c = 0; c < configs; ++c) {
    Rng rng = root.child(c);
    const Combo combo = combos[c % 5];
    std::vector<double> rho(combo.classes, 1.0 / combo.classes);
    out.push_back(clustered_bound_case(combo.classes, combo.dim, combo.sigma, rho, rng));
  }
  return out;
}

BoundReport bound_single(const BoundConfig& cfg, uint64_t seed) {
  require(cfg.classes >= 2, ErrorCode::Usage, "need at least two classes");
  require(cfg.dim >= 2, ErrorCode::Usage, "need dimension at least two");
  require(std::isfinite(cfg.sigma) && cfg.sigma >= 0.0, ErrorCode::Usage,
          "cluster spread must be finite and nonnegative");
  std::vector<double> rho = cfg.rho;
  if (rho.empty()) rho.assign(cfg.classes, 1.0 / cfg.classes);
  require(static_cast<int>(rho.size()) == cfg.classes, ErrorCode::Shape,
          "class prior length must match the class count");
  Rng rng(seed);
  return clustered_bound_case(cfg.classes, cfg.dim, cfg.sigma, rho, rng);
}

ScoreHistogram score_histogram(const FinitePopulation& pop, int bins) {
  // Lighter checks than the oracle's: a single-class population is a valid
  // histogram input (its diff column is simply all zeros).
  require(bins >= 1, ErrorCode::Usage, "need at least one bin");
  require(pop.size() >= 2, ErrorCode::Shape, "histogram needs at least two points");
  require(pop.labels.size() == pop.points.size(), ErrorCode::Shape,
          "label/point count mismatch");
  const double t = pop.t();
  for (const auto& e : pop.points) {
    require(e.dim() == pop.dim() && e.t == t, ErrorCode::Shape,
            "points must share dimension and temperature");
    require(e.normalized, ErrorCode::DegenerateInput,
            "histogram needs sphere-normalized embeddings");
    check_embedding(e);
  }
  const double lo = -1.0 / (t * t), hi = 1.0 / (t * t);
  ScoreHistogram h;
  h.t = t;
  h.bin_lo.resize(bins);
  h.bin_hi.resize(bins);
  h.same_count.assign(bins, 0);
  h.diff_count.assign(bins, 0);
  const double width = (hi - lo) / bins;
  for (int b = 0; b < bins; ++b) {
    h.bin_lo[b] = lo + b * width;
    h.bin_hi[b] = (b + 1 == bins) ? hi : lo + (b + 1) * width;
  }
  for (int i = 0; i < pop.size(); ++i) {
    for (int j = i + 1; j < pop.size(); ++j) {
      const double s = pop.points[i].coords.dot(pop.points[j].coords);
      int b = static_cast<int>((s - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      if (pop.labels[i] == pop.labels[j])
        ++h.same_count[b];
      else
        ++h.diff_count[b];
    }
  }
  return h;
}

double histogram_intersection(const ScoreHistogram& h) {
  long long same_total = 0, diff_total = 0;
  for (size_t b = 0; b < h.same_count.size(); ++b) {
    same_total += h.same_count[b];
    diff_total += h.diff_count[b];
  }
  require(same_total > 0 && diff_total > 0, ErrorCode::EmptySupport,
          "histogram intersection needs both same- and different-class pairs");
  double overlap = 0.0;
  for (size_t b = 0; b < h.same_count.size(); ++b)
    overlap += std::min(static_cast<double>(h.same_count[b]) / same_total,
                        static_cast<double>(h.diff_count[b]) / diff_total);
  return overlap;
}

}  // namespace hardneg
