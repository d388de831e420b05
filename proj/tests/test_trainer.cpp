#include <cmath>

#include "doctest.h"
#include "hardneg/trainer.hpp"

using namespace hardneg;

namespace {

MlpParams identity2() {
  MlpParams p;
  p.layer_dims = {2, 2};
  p.weights = {Eigen::MatrixXd::Identity(2, 2)};
  p.biases = {Eigen::VectorXd::Zero(2)};
  return p;
}

TrainConfig base_cfg() {
  TrainConfig cfg;
  cfg.loss.t = 1.0;
  return cfg;
}

Batch toy_batch(const LatentClassSpec& spec, int n, uint64_t seed) {
  Rng rng(seed);
  return sample_batch(spec, n, rng);
}

}  // namespace

TEST_CASE("forward_embed projects a linear pass onto the sphere") {
  MlpParams p = identity2();
  Eigen::MatrixXd x(1, 2);
  x << 3.0, 4.0;
  auto embs = forward_embed(p, x, 1.0);
  REQUIRE(embs.size() == 1);
  CHECK(embs[0].coords[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(embs[0].coords[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(embs[0].normalized);
  CHECK(embs[0].t == 1.0);
}

TEST_CASE("forward_embed rejects inputs the encoder maps to zero") {
  MlpParams p = identity2();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
  CHECK_THROWS_WITH_AS(forward_embed(p, x, 1.0).front(), doctest::Contains("norm"),
                       Error);
  try {
    forward_embed(p, x, 1.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateInput);
  }
}

TEST_CASE("forward_embed batches rows independently") {
  Rng rng(11);
  MlpParams p = init_mlp(std::vector<int>{3, 8, 4}, rng);
  Eigen::MatrixXd x(5, 3);
  Rng xr(12);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = xr.normal();
  auto all = forward_embed(p, x, 2.0);
  for (int i = 0; i < 5; ++i) {
    auto one = forward_embed(p, x.row(i), 2.0);
    CHECK((all[i].coords.array() == one[0].coords.array()).all());
    CHECK(all[i].coords.norm() == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("forward_embed zeroes negative hidden pre-activations") {
  MlpParams p;
  p.layer_dims = {2, 2, 2};
  p.weights = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
  p.biases = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  Eigen::MatrixXd x(1, 2);
  x << 2.0, -3.0;  // hidden activation (2, 0), output (2, 0)
  auto embs = forward_embed(p, x, 1.0);
  CHECK(embs[0].coords[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(embs[0].coords[1] == 0.0);
}

TEST_CASE("forward_embed validates input width") {
  MlpParams p = identity2();
  Eigen::MatrixXd x(1, 3);
  x << 1.0, 2.0, 3.0;
  try {
    forward_embed(p, x, 1.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Shape);
  }
}

TEST_CASE("init_mlp shapes, zero biases, He scale, determinism") {
  Rng rng(5);
  auto p = init_mlp(std::vector<int>{16, 128, 8}, rng);
  REQUIRE(p.num_layers() == 2);
  CHECK(p.weights[0].rows() == 128);
  CHECK(p.weights[0].cols() == 16);
  CHECK(p.weights[1].rows() == 8);
  CHECK(p.weights[1].cols() == 128);
  CHECK(p.biases[0].isZero(0.0));
  CHECK(p.biases[1].isZero(0.0));
  // Sample std of the wide layer should track sqrt(2 / fan_in).
  const double expect = std::sqrt(2.0 / 16.0);
  const double got = std::sqrt(p.weights[0].array().square().mean());
  CHECK(got == doctest::Approx(expect).epsilon(0.05));

  Rng rng2(5);
  auto q = init_mlp(std::vector<int>{16, 128, 8}, rng2);
  CHECK((p.weights[0].array() == q.weights[0].array()).all());
  CHECK((p.weights[1].array() == q.weights[1].array()).all());
}

TEST_CASE("loss_and_grad value is bitwise the batch objective") {
  auto spec = default_latent_spec(3, 6, 2.0, 0.3, 0.1, 1.0);
  Batch batch = toy_batch(spec, 5, 21);
  Rng rng(22);
  TrainConfig cfg = base_cfg();
  cfg.loss.beta = 1.5;
  cfg.loss.tau_plus = 0.1;
  cfg.loss.clip = {{-0.8, 0.8}};
  auto p = init_mlp(std::vector<int>{6, 16, 4}, rng);

  auto [loss, grads] = loss_and_grad(p, batch, cfg);
  (void)grads;

  auto ua = forward_embed(p, batch.anchors, 1.0);
  auto up = forward_embed(p, batch.positives, 1.0);
  ScoreBatch sb;
  const int b = batch.size();
  sb.pos.resize(b);
  sb.negs.resize(b, 2 * (b - 1));
  for (int i = 0; i < b; ++i) {
    sb.pos[i] = ua[i].coords.dot(up[i].coords);
    int col = 0;
    for (int j = 0; j < b; ++j)
      if (j != i) sb.negs(i, col++) = ua[i].coords.dot(ua[j].coords);
    for (int j = 0; j < b; ++j)
      if (j != i) sb.negs(i, col++) = ua[i].coords.dot(up[j].coords);
  }
  LossConfig lc = cfg.loss;
  lc.N = 2 * (b - 1);
  lc.M = 1;
  CHECK(loss == batch_hard_loss(sb, lc));
}

TEST_CASE("gradients match central differences for a linear encoder") {
  auto spec = default_latent_spec(2, 4, 2.0, 0.4, 0.1, 1.0);
  Batch batch = toy_batch(spec, 4, 31);
  Rng rng(32);
  TrainConfig cfg = base_cfg();
  auto p = init_mlp(std::vector<int>{4, 3}, rng);
  CHECK(finite_diff_check(p, batch, cfg, 1e-5) < 1e-6);
}

TEST_CASE("gradients match central differences for a deep encoder") {
  auto spec = default_latent_spec(3, 6, 2.0, 0.4, 0.1, 1.0);
  Batch batch = toy_batch(spec, 5, 41);
  Rng rng(42);
  TrainConfig cfg = base_cfg();
  cfg.loss.beta = 2.0;
  cfg.loss.tau_plus = 0.1;
  auto p = init_mlp(std::vector<int>{6, 16, 8, 4}, rng);
  CHECK(finite_diff_check(p, batch, cfg, 1e-5) < 1e-5);
}

TEST_CASE("gradients stay correct when the clip range is active") {
  auto spec = default_latent_spec(2, 4, 3.0, 0.2, 0.1, 1.0);
  Batch batch = toy_batch(spec, 4, 51);
  Rng rng(52);
  TrainConfig cfg = base_cfg();
  cfg.loss.beta = 1.0;
  cfg.loss.clip = {{-0.3, 0.3}};
  auto p = init_mlp(std::vector<int>{4, 8, 3}, rng);

  // The range must actually bite for this case to cover the gated branch.
  auto ua = forward_embed(p, batch.anchors, 1.0);
  auto up = forward_embed(p, batch.positives, 1.0);
  bool clipped = false;
  for (size_t i = 0; i < ua.size() && !clipped; ++i)
    for (size_t j = 0; j < up.size() && !clipped; ++j)
      if (std::abs(ua[i].coords.dot(up[j].coords)) > 0.3) clipped = true;
  REQUIRE(clipped);

  CHECK(finite_diff_check(p, batch, cfg, 1e-5) < 1e-5);
}

TEST_CASE("gradients stay correct when the estimator floor is active") {
  auto spec = default_latent_spec(3, 6, 2.0, 0.4, 0.1, 1.0);
  Batch batch = toy_batch(spec, 4, 61);
  Rng rng(62);
  TrainConfig cfg = base_cfg();
  cfg.loss.beta = 1.0;
  cfg.loss.tau_plus = 0.2;
  cfg.loss.estimator_floor = 50.0;  // binds for every anchor: scores stay in [-1, 1]
  auto p = init_mlp(std::vector<int>{6, 8, 4}, rng);
  CHECK(finite_diff_check(p, batch, cfg, 1e-5) < 1e-5);

  // With the floor binding everywhere the negative branch carries no
  // gradient, so perturbing a negative-only direction leaves the loss flat.
  auto [loss, grads] = loss_and_grad(p, batch, cfg);
  (void)loss;
  CHECK(grads.weights[0].allFinite());
}

TEST_CASE("finite_diff_check rejects out-of-range step sizes") {
  auto spec = default_latent_spec(2, 4, 2.0, 0.4, 0.1, 1.0);
  Batch batch = toy_batch(spec, 4, 71);
  Rng rng(72);
  auto p = init_mlp(std::vector<int>{4, 3}, rng);
  TrainConfig cfg = base_cfg();
  for (double h : {1e-8, 1e-2, 0.0}) {
    try {
      finite_diff_check(p, batch, cfg, h);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Usage);
    }
  }
}

TEST_CASE("adam_step leaves parameters fixed for zero gradients without decay") {
  Rng rng(81);
  auto p = init_mlp(std::vector<int>{3, 4, 2}, rng);
  auto keep = p;
  auto g = p;
  for (auto& w : g.weights) w.setZero();
  for (auto& b : g.biases) b.setZero();
  auto st = init_adam(p);
  TrainConfig cfg = base_cfg();
  cfg.weight_decay = 0.0;
  adam_step(p, g, st, cfg);
  CHECK(st.step == 1);
  for (int l = 0; l < p.num_layers(); ++l)
    CHECK((p.weights[l].array() == keep.weights[l].array()).all());
}

TEST_CASE("adam_step applies decoupled decay as a pure rescale under zero gradients") {
  Rng rng(82);
  auto p = init_mlp(std::vector<int>{3, 4, 2}, rng);
  auto keep = p;
  auto g = p;
  for (auto& w : g.weights) w.setZero();
  for (auto& b : g.biases) b.setZero();
  auto st = init_adam(p);
  TrainConfig cfg = base_cfg();
  cfg.lr = 0.001;
  cfg.weight_decay = 1e-6;
  adam_step(p, g, st, cfg);
  const double scale = 1.0 - 1e-9;  // 1 - lr * weight_decay
  for (int l = 0; l < p.num_layers(); ++l)
    CHECK((p.weights[l].array() == (keep.weights[l] * scale).array()).all());
}

TEST_CASE("adam_step first-step delta matches the bias-corrected closed form") {
  MlpParams p;
  p.layer_dims = {1, 1};
  p.weights = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  p.biases = {Eigen::VectorXd::Zero(1)};
  MlpParams g = p;
  g.weights[0](0, 0) = 0.5;
  g.biases[0][0] = 0.0;
  auto st = init_adam(p);
  TrainConfig cfg = base_cfg();
  cfg.lr = 0.001;
  cfg.weight_decay = 0.0;
  adam_step(p, g, st, cfg);
  // First step: m-hat = g, v-hat = g^2, delta = -lr g / (|g| + eps).
  const double expect = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
  CHECK(p.weights[0](0, 0) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(p.weights[0](0, 0) == doctest::Approx(0.999000).epsilon(1e-5));
}

TEST_CASE("adam_step matches a scalar re-derivation across several steps") {
  MlpParams p;
  p.layer_dims = {1, 1};
  p.weights = {Eigen::MatrixXd::Constant(1, 1, 0.3)};
  p.biases = {Eigen::VectorXd::Zero(1)};
  auto st = init_adam(p);
  TrainConfig cfg = base_cfg();
  cfg.weight_decay = 0.01;

  double x = 0.3, m = 0.0, v = 0.0;
  const double gs[] = {0.5, -0.25, 0.125, 1.0};
  for (int k = 0; k < 4; ++k) {
    MlpParams g = p;
    g.weights[0](0, 0) = gs[k];
    g.biases[0][0] = 0.0;
    adam_step(p, g, st, cfg);

    x *= 1.0 - cfg.lr * cfg.weight_decay;
    m = 0.9 * m + 0.1 * gs[k];
    v = 0.999 * v + 0.001 * gs[k] * gs[k];
    const double mh = m / (1.0 - std::pow(0.9, k + 1));
    const double vh = v / (1.0 - std::pow(0.999, k + 1));
    x -= cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps);
    CHECK(p.weights[0](0, 0) == doctest::Approx(x).epsilon(1e-14));
  }
  CHECK(st.step == 4);
}

TEST_CASE("adam_step rejects mismatched gradient shapes") {
  Rng rng(83);
  auto p = init_mlp(std::vector<int>{3, 4, 2}, rng);
  Rng rng2(84);
  auto g = init_mlp(std::vector<int>{3, 5, 2}, rng2);
  auto st = init_adam(p);
  TrainConfig cfg = base_cfg();
  try {
    adam_step(p, g, st, cfg);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Shape);
  }
}

TEST_CASE("anneal_beta follows the stepwise schedule exactly") {
  CHECK(anneal_beta(2.0, 4, 100, 0) == 2.0);
  CHECK(anneal_beta(2.0, 4, 100, 24) == 2.0);
  CHECK(anneal_beta(2.0, 4, 100, 25) == 1.5);
  CHECK(anneal_beta(2.0, 4, 100, 50) == 1.0);
  CHECK(anneal_beta(2.0, 4, 100, 75) == 0.5);
  CHECK(anneal_beta(2.0, 4, 100, 99) == 0.5);
}

TEST_CASE("anneal_beta is nonincreasing and ends at beta0 / ell") {
  for (int ell : {1, 3, 4, 7}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 10; ++e) {
      double b = anneal_beta(2.0, ell, 10, e);
      CHECK(b <= prev);
      CHECK(b >= 0.0);
      prev = b;
    }
    CHECK(anneal_beta(2.0, ell, 10, 9) == doctest::Approx(2.0 / ell).epsilon(1e-15));
  }
  CHECK(anneal_beta(0.0, 4, 10, 3) == 0.0);
}

TEST_CASE("anneal_beta rejects out-of-range arguments") {
  struct Case {
    double beta0;
    int ell, epochs, epoch;
  };
  for (const auto& c : {Case{2.0, 4, 100, -1}, Case{2.0, 4, 100, 100}, Case{2.0, 0, 100, 0},
                        Case{2.0, 101, 100, 0}, Case{-1.0, 4, 100, 0}}) {
    try {
      anneal_beta(c.beta0, c.ell, c.epochs, c.epoch);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Usage);
    }
  }
}

TEST_CASE("knn_eval scores a self-matched reference set perfectly") {
  Rng rng(91);
  auto spec = default_latent_spec(3, 4, 2.0, 0.3, 0.1, 1.0);
  Batch b = sample_batch(spec, 12, rng);
  Rng rng2(92);
  auto p = init_mlp(std::vector<int>{4, 8, 3}, rng2);
  auto embs = forward_embed(p, b.anchors, 1.0);
  CHECK(knn_eval(embs, b.labels, embs, b.labels, 1, true) == 1.0);
}

TEST_CASE("knn_eval votes by inner product and breaks ties toward smaller classes") {
  auto unit = [](double a, double b, double c) {
    Eigen::VectorXd v(3);
    v << a, b, c;
    return Embedding{v / v.norm(), 1.0, true};
  };
  // Equidistant pair with different labels: the tie goes to class 0.
  std::vector<Embedding> refs = {unit(1.0, 0.5, 0.0), unit(1.0, -0.5, 0.0)};
  std::vector<int> ref_labels = {1, 0};
  std::vector<Embedding> q = {unit(1.0, 0.0, 0.0)};
  std::vector<int> ql0 = {0}, ql1 = {1};
  CHECK(knn_eval(refs, ref_labels, q, ql0, 2, true) == 1.0);
  CHECK(knn_eval(refs, ref_labels, q, ql1, 2, true) == 0.0);
}

TEST_CASE("knn_eval weighted and unweighted votes can disagree") {
  auto unit = [](double a, double b, double c) {
    Eigen::VectorXd v(3);
    v << a, b, c;
    return Embedding{v / v.norm(), 1.0, true};
  };
  std::vector<Embedding> refs = {
      unit(0.9, std::sqrt(1.0 - 0.81), 0.0),
      unit(0.1, std::sqrt(1.0 - 0.01), 0.0),
      unit(0.1, 0.0, std::sqrt(1.0 - 0.01)),
  };
  std::vector<int> ref_labels = {1, 0, 0};
  std::vector<Embedding> q = {unit(1.0, 0.0, 0.0)};
  std::vector<int> want1 = {1}, want0 = {0};
  CHECK(knn_eval(refs, ref_labels, q, want1, 3, true) == 1.0);    // 0.9 beats 0.1 + 0.1
  CHECK(knn_eval(refs, ref_labels, q, want0, 3, false) == 1.0);   // two votes beat one
}

TEST_CASE("knn_eval rejects invalid k") {
  auto unit = [](double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return Embedding{v / v.norm(), 1.0, true};
  };
  std::vector<Embedding> refs = {unit(1.0, 0.0), unit(0.0, 1.0)};
  std::vector<int> labels = {0, 1};
  for (int k : {0, 3}) {
    try {
      knn_eval(refs, labels, refs, labels, k, true);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Usage);
    }
  }
}

TEST_CASE("train_run is deterministic for a fixed seed") {
  auto spec = default_latent_spec(3, 6, 3.0, 0.3, 0.1, 1.0);
  TrainConfig cfg = base_cfg();
  cfg.epochs = 6;
  cfg.batch_size = 8;
  cfg.batches_per_epoch = 4;
  cfg.eval_size = 32;
  cfg.eval_every = 2;
  cfg.hidden_dims = {16};
  cfg.embed_dim = 4;
  Rng r1(7), r2(7);
  auto a = train_run(cfg, spec, r1);
  auto b = train_run(cfg, spec, r2);
  REQUIRE(a.history.size() == 6);
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].epoch == static_cast<int>(i));
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].accuracy == b.history[i].accuracy);
  }
  for (int l = 0; l < a.params.num_layers(); ++l)
    CHECK((a.params.weights[l].array() == b.params.weights[l].array()).all());
}

TEST_CASE("train_run re-measures accuracy on the evaluation cadence") {
  auto spec = default_latent_spec(3, 6, 3.0, 0.3, 0.1, 1.0);
  TrainConfig cfg = base_cfg();
  cfg.epochs = 7;
  cfg.batch_size = 8;
  cfg.batches_per_epoch = 2;
  cfg.eval_size = 16;
  cfg.eval_every = 3;
  cfg.hidden_dims = {16};
  cfg.embed_dim = 4;
  Rng rng(9);
  auto r = train_run(cfg, spec, rng);
  // Epochs 0..2 carry the epoch-0 measurement, 3..5 the epoch-3 one, and the
  // final epoch is always re-measured.
  CHECK(r.history[1].accuracy == r.history[0].accuracy);
  CHECK(r.history[2].accuracy == r.history[0].accuracy);
  CHECK(r.history[4].accuracy == r.history[3].accuracy);
  CHECK(r.history[5].accuracy == r.history[3].accuracy);
}

TEST_CASE("train_run separates well-spread latent classes") {
  auto spec = default_latent_spec(3, 6, 4.0, 0.25, 0.1, 1.0);
  TrainConfig cfg = base_cfg();
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.batches_per_epoch = 8;
  cfg.eval_size = 64;
  cfg.eval_every = 5;
  cfg.hidden_dims = {32};
  cfg.embed_dim = 8;
  cfg.loss.beta = 0.0;
  Rng rng(13);
  auto r = train_run(cfg, spec, rng);
  CHECK(r.history.back().accuracy > 0.9);
  CHECK(r.history.back().loss < r.history.front().loss);
}

TEST_CASE("train_run with a flat schedule equals the fixed-beta run bitwise") {
  auto spec = default_latent_spec(2, 4, 3.0, 0.3, 0.1, 1.0);
  TrainConfig cfg = base_cfg();
  cfg.epochs = 4;
  cfg.batch_size = 6;
  cfg.batches_per_epoch = 3;
  cfg.eval_size = 16;
  cfg.hidden_dims = {8};
  cfg.embed_dim = 4;
  cfg.loss.beta = 0.0;
  Rng r1(17), r2(17);
  auto fixed = train_run(cfg, spec, r1);
  cfg.anneal_ell = 2;  // beta0 = 0 anneals to 0 everywhere
  auto annealed = train_run(cfg, spec, r2);
  for (size_t i = 0; i < fixed.history.size(); ++i)
    CHECK(fixed.history[i].loss == annealed.history[i].loss);
}

TEST_CASE("train_run rejects a temperature mismatch with the data spec") {
  auto spec = default_latent_spec(2, 4, 3.0, 0.3, 0.1, 0.5);
  TrainConfig cfg = base_cfg();  // loss.t = 1.0
  Rng rng(19);
  try {
    train_run(cfg, spec, rng);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidConfig);
  }
}

TEST_CASE("embed_population carries labels and weights onto the sphere") {
  auto spec = default_latent_spec(3, 5, 2.0, 0.3, 0.1, 2.0);
  Rng rng(23);
  auto raw = make_finite_population(spec, 20, rng);
  Rng rng2(24);
  auto p = init_mlp(std::vector<int>{5, 8, 4}, rng2);
  auto pop = embed_population(p, raw, 2.0);
  CHECK(pop.size() == 20);
  CHECK(pop.dim() == 4);
  CHECK(pop.labels == raw.labels);
  CHECK(pop.base_weights == raw.base_weights);
  for (const auto& e : pop.points) {
    CHECK(e.normalized);
    CHECK(e.coords.norm() == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("embed_population rejects width mismatches") {
  auto spec = default_latent_spec(3, 5, 2.0, 0.3, 0.1, 1.0);
  Rng rng(25);
  auto raw = make_finite_population(spec, 12, rng);
  Rng rng2(26);
  auto p = init_mlp(std::vector<int>{4, 8, 3}, rng2);
  try {
    embed_population(p, raw, 1.0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Shape);
  }
}
