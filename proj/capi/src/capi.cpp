#include "hardneg.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hardneg/common.hpp"
#include "hardneg/objectives.hpp"
#include "hardneg/oracle.hpp"
#include "hardneg/serialize.hpp"
#include "hardneg/synthdata.hpp"
#include "hardneg/theory.hpp"
#include "hardneg/trainer.hpp"
#include "hardneg/verify.hpp"
#include "json.hpp"

using namespace hardneg;

struct hn_model {
  MlpParams params;
  double t = 1.0;
};

struct hn_population {
  FinitePopulation pop;  // raw input vectors; embedding happens per call
};

namespace {

thread_local std::string tl_last_error;

hn_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return HN_INVALID_CONFIG;
    case ErrorCode::DegenerateInput: return HN_DEGENERATE_INPUT;
    case ErrorCode::Shape: return HN_SHAPE;
    case ErrorCode::InvalidBatch: return HN_INVALID_BATCH;
    case ErrorCode::InvalidDistribution: return HN_INVALID_DISTRIBUTION;
    case ErrorCode::EmptySupport: return HN_EMPTY_SUPPORT;
    case ErrorCode::BoundInvalid: return HN_BOUND_INVALID;
    case ErrorCode::HypothesisViolation: return HN_HYPOTHESIS_VIOLATION;
    case ErrorCode::Usage: return HN_USAGE;
    case ErrorCode::Io: return HN_IO;
    case ErrorCode::CheckFailed: return HN_CHECK_FAILED;
  }
  return HN_INTERNAL;
}

// Run the body, translating exceptions into status codes and the
// per-thread error slot. Output parameters must only be assigned at the
// very end of the body so failures leave them untouched.
template <typename Fn>
hn_status guarded(Fn&& body) {
  tl_last_error.clear();
  try {
    return body();
  } catch (const Error& e) {
    tl_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    tl_last_error = e.what();
    return HN_INTERNAL;
  } catch (...) {
    tl_last_error = "unknown error";
    return HN_INTERNAL;
  }
}

hn_status usage(const char* message) {
  tl_last_error = message;
  return HN_USAGE;
}

// malloc-backed copy so the caller frees memory the library allocated.
char* copy_out(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

LossConfig loss_from_c(const hn_loss_config& c) {
  LossConfig lc;
  lc.beta = c.beta;
  lc.tau_plus = c.tau_plus;
  lc.N = c.n;
  lc.M = c.m;
  if (c.has_q) lc.Q = c.q;
  lc.t = c.t;
  if (c.has_clip) lc.clip = {c.clip_lo, c.clip_hi};
  if (c.has_floor) lc.estimator_floor = c.estimator_floor;
  return lc;
}

}  // namespace

extern "C" {

const char* hn_version(void) { return "1.0.0"; }

const char* hn_status_name(hn_status status) {
  switch (status) {
    case HN_OK: return "ok";
    case HN_INVALID_CONFIG: return "invalid-config";
    case HN_DEGENERATE_INPUT: return "degenerate-input";
    case HN_SHAPE: return "shape";
    case HN_INVALID_BATCH: return "invalid-batch";
    case HN_INVALID_DISTRIBUTION: return "invalid-distribution";
    case HN_EMPTY_SUPPORT: return "empty-support";
    case HN_BOUND_INVALID: return "bound-invalid";
    case HN_HYPOTHESIS_VIOLATION: return "hypothesis-violation";
    case HN_USAGE: return "usage";
    case HN_IO: return "io";
    case HN_CHECK_FAILED: return "check-failed";
    case HN_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* hn_last_error(void) { return tl_last_error.c_str(); }

void hn_string_free(char* s) { std::free(s); }

void hn_loss_config_init(hn_loss_config* cfg) {
  if (cfg == nullptr) return;
  std::memset(cfg, 0, sizeof(*cfg));
  cfg->n = 1;
  cfg->m = 1;
  cfg->t = 1.0;
}

hn_status hn_nce_loss(double s_pos, const double* s_negs, int num_negs,
                      const hn_loss_config* cfg, double* out_loss) {
  if (cfg == nullptr || out_loss == nullptr) return usage("config and output must not be NULL");
  if (s_negs == nullptr && num_negs > 0) return usage("negative scores must not be NULL");
  return guarded([&] {
    const double v =
        nce_loss(s_pos, std::span<const double>(s_negs, static_cast<size_t>(std::max(num_negs, 0))),
                 loss_from_c(*cfg));
    *out_loss = v;
    return HN_OK;
  });
}

hn_status hn_debiased_loss(double s_pos, const double* s_pos_samples, int num_pos_samples,
                           const double* s_negs, int num_negs, const hn_loss_config* cfg,
                           double* out_loss) {
  if (cfg == nullptr || out_loss == nullptr) return usage("config and output must not be NULL");
  if ((s_negs == nullptr && num_negs > 0) || (s_pos_samples == nullptr && num_pos_samples > 0))
    return usage("score arrays must not be NULL");
  return guarded([&] {
    const double v = debiased_loss(
        s_pos,
        std::span<const double>(s_pos_samples, static_cast<size_t>(std::max(num_pos_samples, 0))),
        std::span<const double>(s_negs, static_cast<size_t>(std::max(num_negs, 0))),
        loss_from_c(*cfg));
    *out_loss = v;
    return HN_OK;
  });
}

hn_status hn_hard_loss(double s_pos, const double* s_pos_samples, int num_pos_samples,
                       const double* s_negs, int num_negs, const hn_loss_config* cfg,
                       double* out_loss) {
  if (cfg == nullptr || out_loss == nullptr) return usage("config and output must not be NULL");
  if ((s_negs == nullptr && num_negs > 0) || (s_pos_samples == nullptr && num_pos_samples > 0))
    return usage("score arrays must not be NULL");
  return guarded([&] {
    const double v = hard_loss(
        s_pos,
        std::span<const double>(s_pos_samples, static_cast<size_t>(std::max(num_pos_samples, 0))),
        std::span<const double>(s_negs, static_cast<size_t>(std::max(num_negs, 0))),
        loss_from_c(*cfg));
    *out_loss = v;
    return HN_OK;
  });
}

hn_status hn_anneal_beta(double beta0, int ell, int epochs, int epoch, double* out_beta) {
  if (out_beta == nullptr) return usage("output must not be NULL");
  return guarded([&] {
    *out_beta = anneal_beta(beta0, ell, epochs, epoch);
    return HN_OK;
  });
}

hn_status hn_generalization_bound(double epsilon, double xi, int num_classes, double t,
                                  double* out_bound) {
  if (out_bound == nullptr) return usage("output must not be NULL");
  return guarded([&] {
    BoundInputs b;
    b.epsilon = epsilon;
    b.xi = xi;
    b.num_classes = num_classes;
    b.t = t;
    *out_bound = generalization_bound(b);
    return HN_OK;
  });
}

hn_status hn_default_config(char** out_json) {
  if (out_json == nullptr) return usage("output must not be NULL");
  return guarded([&] {
    *out_json = copy_out(default_config_json());
    return HN_OK;
  });
}

hn_status hn_resolve_config(const char* base_json, const char* const* dotted_sets, int num_sets,
                            char** out_json) {
  if (out_json == nullptr) return usage("output must not be NULL");
  if (dotted_sets == nullptr && num_sets > 0) return usage("assignment array must not be NULL");
  return guarded([&] {
    std::string doc = default_config_json();
    if (base_json != nullptr) doc = merge_config_json(doc, base_json);
    for (int i = 0; i < num_sets; ++i) {
      const char* set = dotted_sets[i];
      require(set != nullptr, ErrorCode::Usage, "assignment must not be NULL");
      const char* eq = std::strchr(set, '=');
      require(eq != nullptr && eq != set, ErrorCode::Usage,
              std::string("assignment must look like section.key=value: ") + set);
      doc = set_config_value(doc, std::string(set, eq), std::string(eq + 1));
    }
    *out_json = copy_out(config_to_json(config_from_json(doc)));
    return HN_OK;
  });
}

hn_status hn_train(const char* config_json, hn_model** out_model, char** out_history_csv) {
  if (config_json == nullptr) return usage("config must not be NULL");
  return guarded([&] {
    ResolvedConfig cfg = config_from_json(config_json);
    LatentClassSpec spec = make_spec(cfg.data);
    Rng rng(cfg.train.seed);
    TrainResult result = train_run(cfg.train, spec, rng);
    if (out_history_csv != nullptr) *out_history_csv = copy_out(history_csv(result.history));
    if (out_model != nullptr)
      *out_model = new hn_model{std::move(result.params), cfg.train.loss.t};
    return HN_OK;
  });
}

hn_status hn_model_from_json(const char* text, hn_model** out_model) {
  if (text == nullptr || out_model == nullptr) return usage("text and output must not be NULL");
  return guarded([&] {
    auto [params, t] = params_from_json(text);
    *out_model = new hn_model{std::move(params), t};
    return HN_OK;
  });
}

hn_status hn_model_to_json(const hn_model* model, char** out_json) {
  if (model == nullptr || out_json == nullptr) return usage("model and output must not be NULL");
  return guarded([&] {
    *out_json = copy_out(params_json(model->params, model->t));
    return HN_OK;
  });
}

double hn_model_temperature(const hn_model* model) { return model == nullptr ? 0.0 : model->t; }

int hn_model_input_dim(const hn_model* model) {
  if (model == nullptr || model->params.layer_dims.empty()) return 0;
  return model->params.layer_dims.front();
}

int hn_model_embed_dim(const hn_model* model) {
  if (model == nullptr || model->params.layer_dims.empty()) return 0;
  return model->params.layer_dims.back();
}

void hn_model_free(hn_model* model) { delete model; }

hn_status hn_population_generate(const char* config_json, int size, uint64_t seed,
                                 hn_population** out_pop) {
  if (config_json == nullptr || out_pop == nullptr)
    return usage("config and output must not be NULL");
  return guarded([&] {
    ResolvedConfig cfg = config_from_json(config_json);
    LatentClassSpec spec = make_spec(cfg.data);
    Rng rng(seed);
    *out_pop = new hn_population{make_finite_population(spec, size, rng)};
    return HN_OK;
  });
}

hn_status hn_population_from_csv(const char* csv_text, double t, hn_population** out_pop) {
  if (csv_text == nullptr || out_pop == nullptr) return usage("text and output must not be NULL");
  return guarded([&] {
    *out_pop = new hn_population{population_from_csv(csv_text, t)};
    return HN_OK;
  });
}

hn_status hn_population_to_csv(const hn_population* pop, char** out_csv) {
  if (pop == nullptr || out_csv == nullptr) return usage("population and output must not be NULL");
  return guarded([&] {
    *out_csv = copy_out(population_csv(pop->pop));
    return HN_OK;
  });
}

int hn_population_size(const hn_population* pop) { return pop == nullptr ? 0 : pop->pop.size(); }

int hn_population_dim(const hn_population* pop) { return pop == nullptr ? 0 : pop->pop.dim(); }

void hn_population_free(hn_population* pop) { delete pop; }

hn_status hn_histogram(const hn_model* model, const hn_population* pop, int bins, char** out_csv,
                       double* out_intersection) {
  if (model == nullptr || pop == nullptr) return usage("model and population must not be NULL");
  return guarded([&] {
    FinitePopulation embedded = embed_population(model->params, pop->pop, model->t);
    ScoreHistogram h = score_histogram(embedded, bins);
    double intersection = std::numeric_limits<double>::quiet_NaN();
    try {
      intersection = histogram_intersection(h);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySupport) throw;  // one-sided histogram: report NaN
    }
    if (out_csv != nullptr) *out_csv = copy_out(histogram_csv(h));
    if (out_intersection != nullptr) *out_intersection = intersection;
    return HN_OK;
  });
}

hn_status hn_suite_names(char** out_json) {
  if (out_json == nullptr) return usage("output must not be NULL");
  return guarded([&] {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& name : suite_names()) arr.push_back(name);
    *out_json = copy_out(arr.dump() + "\n");
    return HN_OK;
  });
}

hn_status hn_verify_suite(const char* suite, uint64_t seed, const double* beta_grid, int grid_len,
                          int pop_size, int classes, int* out_pass, char** out_evidence_csv,
                          char** out_summary_json) {
  if (suite == nullptr) return usage("suite name must not be NULL");
  if (beta_grid == nullptr && grid_len > 0) return usage("beta grid must not be NULL");
  return guarded([&] {
    VerifyOptions opt;
    opt.seed = seed;
    if (beta_grid != nullptr)
      opt.beta_grid.assign(beta_grid, beta_grid + static_cast<size_t>(std::max(grid_len, 0)));
    if (pop_size > 0) opt.pop_size = pop_size;
    if (classes > 0) opt.classes = classes;
    SuiteReport report = run_suite(suite, opt);
    if (out_pass != nullptr) *out_pass = report.pass ? 1 : 0;
    if (out_evidence_csv != nullptr) *out_evidence_csv = copy_out(report.evidence_csv);
    if (out_summary_json != nullptr) *out_summary_json = copy_out(suite_summary_json(report));
    return HN_OK;
  });
}

hn_status hn_tammes(int num_classes, int dim, double t, const double* rho, int restarts,
                    int iters, uint64_t seed, char** out_json) {
  if (out_json == nullptr) return usage("output must not be NULL");
  return guarded([&] {
    std::vector<double> prior;
    if (rho == nullptr) {
      require(num_classes >= 2, ErrorCode::Usage, "need at least two classes");
      prior.assign(num_classes, 1.0 / num_classes);
    } else {
      prior.assign(rho, rho + static_cast<size_t>(std::max(num_classes, 0)));
    }
    Rng rng(seed);
    SpherePacking packing = tammes_solve(num_classes, dim, t, prior, restarts, iters, rng);
    *out_json = copy_out(tammes_json(packing, tammes_objective(packing), seed));
    return HN_OK;
  });
}

hn_status hn_bound_run(int configs, uint64_t seed, const char* explicit_configs_json,
                       char** out_reports_json, char** out_warnings_json, int* out_all_hold) {
  return guarded([&] {
    std::vector<BoundReport> reports;
    nlohmann::json warnings = nlohmann::json::array();
    if (explicit_configs_json == nullptr) {
      reports = bound_experiment(configs, seed);
    } else {
      std::vector<BoundConfig> entries = bound_configs_from_json(explicit_configs_json);
      for (size_t i = 0; i < entries.size(); ++i) {
        const uint64_t entry_seed =
            splitmix64(seed ^ splitmix64(static_cast<uint64_t>(i) + 0x9e3779b97f4a7c15ull));
        try {
          reports.push_back(bound_single(entries[i], entry_seed));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::HypothesisViolation) throw;
          warnings.push_back("configuration " + std::to_string(i) + " skipped: " +
                             std::string(e.what()));
        }
      }
    }
    bool all_hold = true;
    for (const auto& r : reports) all_hold = all_hold && (!r.valid || r.holds);
    if (out_reports_json != nullptr) *out_reports_json = copy_out(bound_reports_json(reports));
    if (out_warnings_json != nullptr) *out_warnings_json = copy_out(warnings.dump() + "\n");
    if (out_all_hold != nullptr) *out_all_hold = all_hold ? 1 : 0;
    return HN_OK;
  });
}

hn_status hn_manifest(const char* command, const char* config_json, uint64_t seed,
                      const char* const* outputs, int num_outputs, const char* outcome,
                      char** out_json) {
  if (command == nullptr || config_json == nullptr || outcome == nullptr || out_json == nullptr)
    return usage("command, config, outcome, and output must not be NULL");
  if (outputs == nullptr && num_outputs > 0) return usage("outputs array must not be NULL");
  return guarded([&] {
    RunManifest m;
    m.command = command;
    m.config_json = config_json;
    m.seed = seed;
    for (int i = 0; i < num_outputs; ++i) {
      require(outputs[i] != nullptr, ErrorCode::Usage, "output path must not be NULL");
      m.outputs.emplace_back(outputs[i]);
    }
    m.outcome = outcome;
    *out_json = copy_out(manifest_json(m));
    return HN_OK;
  });
}

}  // extern "C"
