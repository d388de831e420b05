#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hardneg/oracle.hpp"
#include "hardneg/synthdata.hpp"
#include "hardneg/theory.hpp"
#include "hardneg/trainer.hpp"
#include "hardneg/verify.hpp"

namespace hardneg {

// Synthetic-data section of the run configuration; expands to a simplex
// latent spec.
// Default geometry: four simplex classes whose separation clears the noise
// along the class axes while the distractor dimensions keep a random
// projection from solving the task outright.
struct DataConfig {
  int num_classes = 4;
  int input_dim = 24;
  double separation = 3.0;
  double within_std = 0.5;
  double aug_std = 0.3;
  double t = 1.0;
  bool true_positives = false;
};

LatentClassSpec make_spec(const DataConfig& cfg);

// Full run configuration: the `loss` JSON section populates train.loss.
struct ResolvedConfig {
  TrainConfig train;
  DataConfig data;
};

// Canonical configuration document with every field at its default.
std::string default_config_json();

// Strict parse: unknown sections, unknown keys, or mistyped values raise
// InvalidConfig. Absent fields keep their defaults.
ResolvedConfig config_from_json(const std::string& text);

// Canonical re-emission; config_from_json(config_to_json(c)) is lossless.
std::string config_to_json(const ResolvedConfig& cfg);

// Overlay a partial document (same schema) over a base document.
std::string merge_config_json(const std::string& base_json, const std::string& overlay_json);

// Set one field by dotted path, e.g. "train.epochs" = "50" or
// "loss.clip" = "[-2, 2]"; the value is parsed as a JSON literal. Paths
// outside the schema raise InvalidConfig.
std::string set_config_value(const std::string& config_json, const std::string& dotted_path,
                             const std::string& value);

// CSV/JSON emitters. All floating-point text is full-precision with a '.'
// separator regardless of locale.
std::string history_csv(const std::vector<EpochStats>& history);
std::string params_json(const MlpParams& params, double t);
std::pair<MlpParams, double> params_from_json(const std::string& text);
std::string population_csv(const FinitePopulation& pop);
// Raw coordinates from CSV; uniform weights, normalized flag unset, the
// given temperature attached.
FinitePopulation population_from_csv(const std::string& text, double t);
std::string prop1_csv(const std::vector<Prop1Row>& rows);
std::string tammes_json(const SpherePacking& packing, double objective, uint64_t seed);
std::string bound_reports_json(const std::vector<BoundReport>& reports);
// Explicit bound configurations: a JSON array of objects with optional keys
// classes, dim, sigma, rho. Unknown keys or mistyped values raise
// InvalidConfig.
std::vector<BoundConfig> bound_configs_from_json(const std::string& text);
std::string histogram_csv(const ScoreHistogram& h);
std::string suite_summary_json(const SuiteReport& report);

struct SweepRow {
  double beta = 0.0;
  std::string mode;  // "standard" | "true-positives" | "anneal"
  uint64_t seed = 0;
  double final_accuracy = 0.0;
};

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct RunManifest {
  std::string command;
  std::string config_json;  // embedded as an object in the emitted document
  uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::string outcome;  // pass | fail | usage-error
};

std::string manifest_json(const RunManifest& m);

// Whole-file text IO; failures raise Io.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace hardneg
