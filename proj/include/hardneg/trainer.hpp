#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hardneg/common.hpp"
#include "hardneg/objectives.hpp"
#include "hardneg/oracle.hpp"
#include "hardneg/synthdata.hpp"

namespace hardneg {

// Fully connected encoder: rectifier hidden layers, linear output, sphere
// normalization applied downstream. Doubles as the gradient container.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;  // layer l maps dims[l] -> dims[l+1]
  std::vector<Eigen::VectorXd> biases;
  std::vector<int> layer_dims;

  int num_layers() const { return static_cast<int>(weights.size()); }
};

void validate(const MlpParams& params);

// He-scaled normal weights, zero biases.
MlpParams init_mlp(std::span<const int> layer_dims, Rng& rng);

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  int step = 0;
};

AdamState init_adam(const MlpParams& params);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  int batches_per_epoch = 16;
  double lr = 0.001;
  double weight_decay = 1e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  LossConfig loss;
  std::optional<int> anneal_ell;
  int eval_every = 10;
  int eval_size = 256;
  int knn_k = 1;
  bool knn_weighted = true;
  std::vector<int> hidden_dims = {64};
  int embed_dim = 8;
  uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// Row-wise encoder pass ending on the radius-1/t sphere.
std::vector<Embedding> forward_embed(const MlpParams& params, const Eigen::MatrixXd& inputs,
                                     double t);

// Batch objective and its exact reverse-mode gradient. Negatives follow the
// in-batch convention: for each anchor, every other anchor and every other
// positive, so N = 2 (batch_size - 1); the anchor's positive score is the
// single correction sample. Clipped scores gate their gradients; the clamped
// estimator floor zeroes the negative-branch gradient.
std::pair<double, MlpParams> loss_and_grad(const MlpParams& params, const Batch& batch,
                                           const TrainConfig& cfg);

// Max relative error between analytic and central-difference gradients over
// a deterministic sample of at least 200 coordinates (all, if fewer).
double finite_diff_check(const MlpParams& params, const Batch& batch, const TrainConfig& cfg,
                         double h);

// Bias-corrected update with decoupled weight decay applied multiplicatively
// before the Adam delta.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state,
               const TrainConfig& cfg);

// Stepwise schedule beta0 - floor(epoch * ell / epochs) * beta0 / ell,
// never below 0.
double anneal_beta(double beta0, int ell, int epochs, int epoch);

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  MlpParams params;
  std::vector<EpochStats> history;
};

// Seeded epoch loop: child stream 1 initializes parameters, stream 2 drives
// batch sampling, stream 3 draws the fixed evaluation reference/query sets.
// Accuracy is re-measured every eval_every epochs and at the final epoch;
// rows in between carry the latest measurement forward.
TrainResult train_run(const TrainConfig& cfg, const LatentClassSpec& data_spec, Rng& rng);

// Weighted k-nearest-neighbor accuracy; vote weight is the raw inner
// product, vote ties go to the smallest class.
double knn_eval(const std::vector<Embedding>& ref_embs, const std::vector<int>& ref_labels,
                const std::vector<Embedding>& query_embs, const std::vector<int>& query_labels,
                int k, bool weighted);

// Push a raw-input population through the encoder onto the sphere.
FinitePopulation embed_population(const MlpParams& params, const FinitePopulation& raw,
                                  double t);

}  // namespace hardneg
