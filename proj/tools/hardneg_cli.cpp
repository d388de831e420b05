// Command-line front end. Everything numerical goes through the C API of
// the shared library; this translation unit only parses flags, moves file
// contents around, and assembles manifests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hardneg.h"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& message) { throw CliError{code, message}; }

// Every C-API failure surfaces as a usage/config error except explicit
// check failures; the library's message already names the failure class.
[[noreturn]] void die_status(hn_status status) {
  const int code = status == HN_CHECK_FAILED ? kExitCheckFailed : kExitUsage;
  die(code, hn_last_error());
}

void check(hn_status status) {
  if (status != HN_OK) die_status(status);
}

// Owned string bridge: adopt a char* from the library and free it.
std::string adopt(char* s) {
  std::string out = s == nullptr ? std::string() : std::string(s);
  hn_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(kExitUsage, "io: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) die(kExitUsage, "io: failed reading " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) die(kExitUsage, "io: cannot write " + path);
  out << text;
  if (!out.good()) die(kExitUsage, "io: failed writing " + path);
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) die(kExitUsage, "io: cannot create output directory " + dir);
}

// Emit <out>/manifest.json and return the exit code that matches the
// outcome; every command funnels its ending through here.
int finish(const std::string& command, const json& config, uint64_t seed,
           const std::vector<std::string>& outputs, const std::string& outcome,
           const std::string& out_dir) {
  std::vector<const char*> output_ptrs;
  output_ptrs.reserve(outputs.size());
  for (const auto& o : outputs) output_ptrs.push_back(o.c_str());
  char* manifest_raw = nullptr;
  check(hn_manifest(command.c_str(), config.dump().c_str(), seed, output_ptrs.data(),
                    static_cast<int>(output_ptrs.size()), outcome.c_str(), &manifest_raw));
  write_file(join(out_dir, "manifest.json"), adopt(manifest_raw));
  if (outcome == "pass") return kExitPass;
  if (outcome == "fail") return kExitCheckFailed;
  return kExitUsage;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      json v = json::parse(token);
      if (!v.is_number()) throw json::other_error::create(0, "not a number", nullptr);
      grid.push_back(v.get<double>());
    } catch (const json::exception&) {
      die(kExitUsage, "usage: bad beta grid entry '" + token + "'");
    }
  }
  if (grid.empty()) die(kExitUsage, "usage: beta grid must not be empty");
  return grid;
}

// Resolve defaults <- optional config file <- dotted-path assignments.
json resolve_config(const std::optional<std::string>& config_path,
                    const std::vector<std::string>& sets) {
  std::string base;
  if (config_path) base = read_file(*config_path);
  std::vector<const char*> set_ptrs;
  set_ptrs.reserve(sets.size());
  for (const auto& s : sets) set_ptrs.push_back(s.c_str());
  char* resolved_raw = nullptr;
  check(hn_resolve_config(config_path ? base.c_str() : nullptr, set_ptrs.data(),
                          static_cast<int>(set_ptrs.size()), &resolved_raw));
  return json::parse(adopt(resolved_raw));
}

double final_accuracy(const std::string& history_csv) {
  // Last row of "epoch,loss,accuracy".
  size_t end = history_csv.find_last_not_of('\n');
  size_t start = history_csv.rfind('\n', end);
  std::string row = history_csv.substr(start + 1, end - start);
  size_t comma = row.rfind(',');
  return json::parse(row.substr(comma + 1)).get<double>();
}

// ------------------------------------------------------------------ //

int cmd_train(const std::optional<std::string>& config_path, const std::vector<std::string>& sets,
              const std::string& out_dir) {
  json config = resolve_config(config_path, sets);
  ensure_out_dir(out_dir);

  hn_model* model = nullptr;
  char* history_raw = nullptr;
  check(hn_train(config.dump().c_str(), &model, &history_raw));
  char* params_raw = nullptr;
  hn_status status = hn_model_to_json(model, &params_raw);
  hn_model_free(model);
  check(status);

  const std::string history_path = join(out_dir, "history.csv");
  const std::string params_path = join(out_dir, "params.json");
  write_file(history_path, adopt(history_raw));
  write_file(params_path, adopt(params_raw));
  return finish("train", config, config["train"]["seed"].get<uint64_t>(),
                {history_path, params_path}, "pass", out_dir);
}

int cmd_verify(const std::string& suite, uint64_t seed,
               const std::optional<std::string>& beta_grid_text, int pop_size, int classes,
               const std::string& out_dir) {
  json config = {{"suite", suite}, {"seed", seed}, {"pop_size", pop_size}, {"classes", classes}};
  std::vector<double> grid;
  if (beta_grid_text) {
    grid = parse_grid(*beta_grid_text);
    config["beta_grid"] = grid;
  } else {
    config["beta_grid"] = nullptr;
  }
  ensure_out_dir(out_dir);

  int pass = 0;
  char* evidence_raw = nullptr;
  char* summary_raw = nullptr;
  const hn_status status =
      hn_verify_suite(suite.c_str(), seed, grid.empty() ? nullptr : grid.data(),
                      static_cast<int>(grid.size()), pop_size, classes, &pass, &evidence_raw,
                      &summary_raw);
  if (status != HN_OK) {
    // Unknown suite or bad options: record the failed run, then bail.
    const std::string message = hn_last_error();
    finish("verify", config, seed, {}, "usage-error", out_dir);
    die(kExitUsage, message);
  }

  const std::string evidence_path = join(out_dir, "evidence.csv");
  const std::string summary_path = join(out_dir, "summary.json");
  write_file(evidence_path, adopt(evidence_raw));
  write_file(summary_path, adopt(summary_raw));
  return finish("verify", config, seed, {evidence_path, summary_path}, pass ? "pass" : "fail",
                out_dir);
}

int cmd_tammes(int classes, int dim, double t, int restarts, int iters, uint64_t seed,
               const std::string& out_dir) {
  json config = {{"classes", classes}, {"dim", dim},   {"t", t},
                 {"restarts", restarts}, {"iters", iters}, {"seed", seed}};
  ensure_out_dir(out_dir);
  char* packing_raw = nullptr;
  check(hn_tammes(classes, dim, t, nullptr, restarts, iters, seed, &packing_raw));
  const std::string packing_path = join(out_dir, "packing.json");
  write_file(packing_path, adopt(packing_raw));
  return finish("tammes", config, seed, {packing_path}, "pass", out_dir);
}

int cmd_bound(int configs, uint64_t seed, const std::optional<std::string>& config_path,
              const std::string& out_dir) {
  json config = {{"configs", configs}, {"seed", seed}, {"explicit", nullptr}};
  std::string explicit_text;
  if (config_path) {
    explicit_text = read_file(*config_path);
    json parsed;
    try {
      parsed = json::parse(explicit_text);
    } catch (const json::exception& e) {
      die(kExitUsage, std::string("invalid-config: ") + e.what());
    }
    config["explicit"] = parsed;
  }
  ensure_out_dir(out_dir);

  char* reports_raw = nullptr;
  char* warnings_raw = nullptr;
  int all_hold = 0;
  check(hn_bound_run(configs, seed, config_path ? explicit_text.c_str() : nullptr, &reports_raw,
                     &warnings_raw, &all_hold));
  for (const auto& warning : json::parse(adopt(warnings_raw)))
    std::cerr << "warning: " << warning.get<std::string>() << "\n";

  const std::string reports_path = join(out_dir, "bound.json");
  write_file(reports_path, adopt(reports_raw));
  return finish("bound", config, seed, {reports_path}, all_hold ? "pass" : "fail", out_dir);
}

int cmd_histogram(const std::string& params_path, const std::string& data_path, int bins,
                  const std::string& out_dir) {
  json config = {{"params", params_path}, {"data", data_path}, {"bins", bins}};
  const std::string params_text = read_file(params_path);
  const std::string data_text = read_file(data_path);

  hn_model* model = nullptr;
  check(hn_model_from_json(params_text.c_str(), &model));
  hn_population* pop = nullptr;
  hn_status status = hn_population_from_csv(data_text.c_str(), hn_model_temperature(model), &pop);
  if (status != HN_OK) {
    hn_model_free(model);
    die_status(status);
  }

  char* csv_raw = nullptr;
  double intersection = 0.0;
  status = hn_histogram(model, pop, bins, &csv_raw, &intersection);
  hn_population_free(pop);
  hn_model_free(model);
  check(status);

  ensure_out_dir(out_dir);
  const std::string histogram_path = join(out_dir, "histogram.csv");
  const std::string intersection_path = join(out_dir, "intersection.json");
  write_file(histogram_path, adopt(csv_raw));
  write_file(intersection_path, json{{"intersection", intersection}}.dump(2) + "\n");
  return finish("histogram", config, 0, {histogram_path, intersection_path}, "pass", out_dir);
}

int cmd_sweep_beta(const std::string& beta_grid_text, int seeds,
                   const std::optional<std::string>& config_path,
                   const std::vector<std::string>& sets, bool true_positives,
                   std::optional<int> anneal_ell, const std::string& out_dir) {
  if (seeds < 1) die(kExitUsage, "usage: --seeds must be at least 1");
  std::vector<double> grid = parse_grid(beta_grid_text);
  std::vector<double> unique_grid;
  for (double beta : grid) {
    if (std::find(unique_grid.begin(), unique_grid.end(), beta) != unique_grid.end()) {
      std::cerr << "warning: duplicate beta " << json(beta).dump() << " in grid; ignored\n";
      continue;
    }
    unique_grid.push_back(beta);
  }

  json base_config = resolve_config(config_path, sets);
  const uint64_t base_seed = base_config["train"]["seed"].get<uint64_t>();

  std::vector<std::string> modes = {"standard"};
  if (true_positives) modes.push_back("true-positives");
  if (anneal_ell) modes.push_back("anneal");

  json config = {{"config", base_config},
                 {"beta_grid", unique_grid},
                 {"seeds", seeds},
                 {"modes", modes},
                 {"seed", base_seed}};
  ensure_out_dir(out_dir);

  std::ostringstream rows;
  rows << "beta,mode,seed,final_accuracy\n";
  for (const auto& mode : modes) {
    for (double beta : unique_grid) {
      for (int s = 0; s < seeds; ++s) {
        json cell = base_config;
        cell["loss"]["beta"] = beta;
        cell["data"]["true_positives"] = (mode == "true-positives");
        cell["train"]["anneal_ell"] = mode == "anneal" ? json(*anneal_ell) : json(nullptr);
        const uint64_t cell_seed = base_seed + static_cast<uint64_t>(s);
        cell["train"]["seed"] = cell_seed;
        char* history_raw = nullptr;
        check(hn_train(cell.dump().c_str(), nullptr, &history_raw));
        rows << json(beta).dump() << ',' << mode << ',' << cell_seed << ','
             << json(final_accuracy(adopt(history_raw))).dump() << '\n';
      }
    }
  }

  const std::string sweep_path = join(out_dir, "sweep.csv");
  write_file(sweep_path, rows.str());
  return finish("sweep-beta", config, base_seed, {sweep_path}, "pass", out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for hard-negative contrastive objectives"};
  app.require_subcommand(1);

  // train ----------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train an encoder on synthetic data");
  std::string train_config;
  std::string train_out = ".";
  std::vector<std::string> train_sets;
  std::string train_beta, train_tau_plus, train_epochs, train_seed, train_anneal_ell;
  train->add_option("--config", train_config, "JSON configuration file")->required();
  auto* o_beta = train->add_option("--beta", train_beta, "Override loss.beta");
  auto* o_tau = train->add_option("--tau-plus", train_tau_plus, "Override loss.tau_plus");
  auto* o_epochs = train->add_option("--epochs", train_epochs, "Override train.epochs");
  auto* o_seed = train->add_option("--seed", train_seed, "Override train.seed");
  auto* o_ell = train->add_option("--anneal-ell", train_anneal_ell, "Override train.anneal_ell");
  train->add_option("--set", train_sets, "Assignment section.key=value (repeatable)");
  train->add_option("--out", train_out, "Output directory");

  // verify ---------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "Run a numerical verification suite");
  std::string verify_suite, verify_out = ".";
  uint64_t verify_seed = 7;
  std::optional<std::string> verify_grid;
  int verify_pop_size = 0, verify_classes = 0;
  verify->add_option("--suite", verify_suite, "Suite name")->required();
  verify->add_option("--seed", verify_seed, "Suite seed");
  verify->add_option("--beta-grid", verify_grid, "Comma-separated beta grid");
  verify->add_option("--pop-size", verify_pop_size, "Population size override");
  verify->add_option("--classes", verify_classes, "Class count override");
  verify->add_option("--out", verify_out, "Output directory");

  // tammes ---------------------------------------------------------
  auto* tammes = app.add_subcommand("tammes", "Solve the prototype packing problem");
  int tam_classes = 0, tam_dim = 0, tam_restarts = 20, tam_iters = 300;
  double tam_t = 1.0;
  uint64_t tam_seed = 0;
  std::string tam_out = ".";
  tammes->add_option("--classes", tam_classes, "Number of prototypes")->required();
  tammes->add_option("--dim", tam_dim, "Ambient dimension")->required();
  tammes->add_option("--t", tam_t, "Temperature (sphere radius 1/t)");
  tammes->add_option("--restarts", tam_restarts, "Independent solver starts");
  tammes->add_option("--iters", tam_iters, "Iterations per start");
  tammes->add_option("--seed", tam_seed, "Solver seed");
  tammes->add_option("--out", tam_out, "Output directory");

  // bound ----------------------------------------------------------
  auto* bound = app.add_subcommand("bound", "Check the misclassification bound");
  int bound_configs = 20;
  uint64_t bound_seed = 0;
  std::optional<std::string> bound_config;
  std::string bound_out = ".";
  bound->add_option("--configs", bound_configs, "Number of generated configurations");
  bound->add_option("--seed", bound_seed, "Experiment seed");
  bound->add_option("--config", bound_config, "Explicit configuration JSON file");
  bound->add_option("--out", bound_out, "Output directory");

  // histogram ------------------------------------------------------
  auto* histogram = app.add_subcommand("histogram", "Pair-score histogram of an embedding");
  std::string hist_params, hist_data, hist_out = ".";
  int hist_bins = 0;
  histogram->add_option("--params", hist_params, "Model parameters JSON file")->required();
  histogram->add_option("--data", hist_data, "Population CSV file")->required();
  histogram->add_option("--bins", hist_bins, "Number of bins")->required();
  histogram->add_option("--out", hist_out, "Output directory");

  // sweep-beta -----------------------------------------------------
  auto* sweep = app.add_subcommand("sweep-beta", "Accuracy versus concentration sweep");
  std::string sweep_grid, sweep_out = ".";
  int sweep_seeds = 1;
  std::optional<std::string> sweep_config;
  std::vector<std::string> sweep_sets;
  bool sweep_true_positives = false;
  std::optional<int> sweep_anneal;
  sweep->add_option("--beta-grid", sweep_grid, "Comma-separated beta grid")->required();
  sweep->add_option("--seeds", sweep_seeds, "Seeds per grid cell");
  sweep->add_option("--config", sweep_config, "JSON configuration file");
  sweep->add_option("--set", sweep_sets, "Assignment section.key=value (repeatable)");
  sweep->add_flag("--true-positives", sweep_true_positives, "Also sweep with true positive pairs");
  sweep->add_option("--anneal", sweep_anneal, "Also sweep with annealing over this many segments");
  sweep->add_option("--out", sweep_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*train) {
      // Generic assignments first, named overrides last: the dedicated
      // flags always win regardless of argv order.
      std::vector<std::string> sets = train_sets;
      if (*o_beta) sets.push_back("loss.beta=" + train_beta);
      if (*o_tau) sets.push_back("loss.tau_plus=" + train_tau_plus);
      if (*o_epochs) sets.push_back("train.epochs=" + train_epochs);
      if (*o_seed) sets.push_back("train.seed=" + train_seed);
      if (*o_ell) sets.push_back("train.anneal_ell=" + train_anneal_ell);
      return cmd_train(train_config, sets, train_out);
    }
    if (*verify)
      return cmd_verify(verify_suite, verify_seed, verify_grid, verify_pop_size, verify_classes,
                        verify_out);
    if (*tammes)
      return cmd_tammes(tam_classes, tam_dim, tam_t, tam_restarts, tam_iters, tam_seed, tam_out);
    if (*bound) return cmd_bound(bound_configs, bound_seed, bound_config, bound_out);
    if (*histogram) return cmd_histogram(hist_params, hist_data, hist_bins, hist_out);
    if (*sweep)
      return cmd_sweep_beta(sweep_grid, sweep_seeds, sweep_config, sweep_sets,
                            sweep_true_positives, sweep_anneal, sweep_out);
  } catch (const CliError& e) {
    std::cerr << "hardneg: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "hardneg: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
