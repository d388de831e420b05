#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "hardneg.h"
#include "json.hpp"

using nlohmann::json;

namespace {

// Take ownership of an API string and release it eagerly.
std::string grab(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  hn_string_free(s);
  return out;
}

std::string resolve(const std::vector<std::string>& sets) {
  std::vector<const char*> ptrs;
  for (const auto& s : sets) ptrs.push_back(s.c_str());
  char* out = nullptr;
  REQUIRE(hn_resolve_config(nullptr, ptrs.data(), static_cast<int>(ptrs.size()), &out) == HN_OK);
  return grab(out);
}

// Small, fast training setup shared by the model/histogram cases.
std::string tiny_train_config() {
  return resolve({"train.epochs=3", "train.batch_size=4", "train.batches_per_epoch=2",
                  "train.eval_every=1", "train.eval_size=16", "train.hidden_dims=[8]",
                  "train.embed_dim=4", "train.seed=5", "data.num_classes=2",
                  "data.input_dim=4"});
}

}  // namespace

TEST_CASE("version and status names are stable") {
  CHECK(std::string(hn_version()) == "1.0.0");
  CHECK(std::string(hn_status_name(HN_OK)) == "ok");
  CHECK(std::string(hn_status_name(HN_USAGE)) == "usage");
  CHECK(std::string(hn_status_name(HN_HYPOTHESIS_VIOLATION)) == "hypothesis-violation");
  CHECK(std::string(hn_status_name(HN_CHECK_FAILED)) == "check-failed");
}

TEST_CASE("nce loss matches the closed form for equal scores") {
  hn_loss_config cfg;
  hn_loss_config_init(&cfg);
  CHECK(cfg.n == 1);
  CHECK(cfg.m == 1);
  CHECK(cfg.t == 1.0);
  CHECK(cfg.has_clip == 0);

  cfg.n = 3;
  const double negs[3] = {0.0, 0.0, 0.0};
  double loss = 0.0;
  REQUIRE(hn_nce_loss(0.0, negs, 3, &cfg, &loss) == HN_OK);
  CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(std::string(hn_last_error()).empty());
}

TEST_CASE("hard loss collapses to nce at beta 0, tau_plus 0") {
  hn_loss_config cfg;
  hn_loss_config_init(&cfg);
  cfg.n = 4;
  const double negs[4] = {0.3, -0.2, 0.9, -0.7};
  const double pos_samples[1] = {0.5};
  double nce = 0.0, hard = 0.0;
  REQUIRE(hn_nce_loss(0.5, negs, 4, &cfg, &nce) == HN_OK);
  REQUIRE(hn_hard_loss(0.5, pos_samples, 1, negs, 4, &cfg, &hard) == HN_OK);
  CHECK(hard == nce);  // bitwise: both funnel through the same kernel
}

TEST_CASE("loss errors surface as status codes with messages") {
  hn_loss_config cfg;
  hn_loss_config_init(&cfg);
  cfg.n = 2;  // does not match the 3 scores below
  const double negs[3] = {0.1, 0.2, 0.3};
  double loss = -7.0;

  CHECK(hn_nce_loss(0.0, negs, 3, &cfg, &loss) == HN_INVALID_BATCH);
  CHECK(loss == -7.0);  // failure leaves outputs untouched
  CHECK(!std::string(hn_last_error()).empty());

  cfg.n = 3;
  cfg.t = -1.0;
  CHECK(hn_nce_loss(0.0, negs, 3, &cfg, &loss) == HN_INVALID_CONFIG);

  CHECK(hn_nce_loss(0.0, negs, 3, nullptr, &loss) == HN_USAGE);
  CHECK(hn_nce_loss(0.0, nullptr, 3, &cfg, &loss) == HN_USAGE);
}

TEST_CASE("annealing schedule endpoints through the C surface") {
  double beta = -1.0;
  REQUIRE(hn_anneal_beta(2.0, 4, 100, 0, &beta) == HN_OK);
  CHECK(beta == 2.0);
  REQUIRE(hn_anneal_beta(2.0, 4, 100, 99, &beta) == HN_OK);
  CHECK(beta == 0.5);
  CHECK(hn_anneal_beta(2.0, 0, 100, 0, &beta) == HN_USAGE);
  CHECK(hn_anneal_beta(2.0, 4, 100, 100, &beta) == HN_USAGE);
}

TEST_CASE("generalization bound: zero excess risk and invalid margin") {
  double bound = -1.0;
  REQUIRE(hn_generalization_bound(0.0, 1.0, 2, 1.0, &bound) == HN_OK);
  CHECK(bound == 0.0);
  bound = -1.0;
  CHECK(hn_generalization_bound(0.9, 0.5, 4, 1.0, &bound) == HN_BOUND_INVALID);
  CHECK(bound == -1.0);
}

TEST_CASE("config resolution layers defaults, overlay, and assignments") {
  char* raw = nullptr;
  REQUIRE(hn_default_config(&raw) == HN_OK);
  json defaults = json::parse(grab(raw));
  CHECK(defaults["train"]["epochs"] == 100);

  std::string resolved = resolve({"train.epochs=7", "loss.beta=2.5", "loss.clip=[-1, 1]"});
  json doc = json::parse(resolved);
  CHECK(doc["train"]["epochs"] == 7);
  CHECK(doc["loss"]["beta"] == 2.5);
  CHECK(doc["loss"]["clip"][0] == -1.0);
  CHECK(doc["data"]["num_classes"] == 4);  // untouched default

  const char* bad_path[] = {"loss.nosuch=1"};
  char* out = nullptr;
  CHECK(hn_resolve_config(nullptr, bad_path, 1, &out) == HN_INVALID_CONFIG);
  const char* bad_shape[] = {"no-equals-sign"};
  CHECK(hn_resolve_config(nullptr, bad_shape, 1, &out) == HN_USAGE);
  CHECK(hn_resolve_config("{not json", nullptr, 0, &out) == HN_INVALID_CONFIG);
}

TEST_CASE("training produces a model, a history, and is deterministic") {
  const std::string cfg = tiny_train_config();

  hn_model* model = nullptr;
  char* history_raw = nullptr;
  REQUIRE(hn_train(cfg.c_str(), &model, &history_raw) == HN_OK);
  REQUIRE(model != nullptr);
  std::string history = grab(history_raw);
  CHECK(history.rfind("epoch,loss,accuracy\n", 0) == 0);
  // header + one row per epoch
  CHECK(std::count(history.begin(), history.end(), '\n') == 4);

  CHECK(hn_model_temperature(model) == 1.0);
  CHECK(hn_model_input_dim(model) == 4);
  CHECK(hn_model_embed_dim(model) == 4);

  char* again_raw = nullptr;
  REQUIRE(hn_train(cfg.c_str(), nullptr, &again_raw) == HN_OK);
  CHECK(grab(again_raw) == history);

  char* json_raw = nullptr;
  REQUIRE(hn_model_to_json(model, &json_raw) == HN_OK);
  std::string model_json = grab(json_raw);

  hn_model* restored = nullptr;
  REQUIRE(hn_model_from_json(model_json.c_str(), &restored) == HN_OK);
  char* rejson_raw = nullptr;
  REQUIRE(hn_model_to_json(restored, &rejson_raw) == HN_OK);
  CHECK(grab(rejson_raw) == model_json);  // bitwise round trip

  hn_model_free(restored);
  hn_model_free(model);

  hn_model* bad = nullptr;
  CHECK(hn_model_from_json("{\"layer_dims\": [2", &bad) == HN_IO);
  CHECK(bad == nullptr);
}

TEST_CASE("population generation, CSV round trip, and size guards") {
  const std::string cfg = tiny_train_config();

  hn_population* pop = nullptr;
  REQUIRE(hn_population_generate(cfg.c_str(), 12, 3, &pop) == HN_OK);
  CHECK(hn_population_size(pop) == 12);
  CHECK(hn_population_dim(pop) == 4);

  char* csv_raw = nullptr;
  REQUIRE(hn_population_to_csv(pop, &csv_raw) == HN_OK);
  std::string csv = grab(csv_raw);
  CHECK(csv.rfind("label,x_0,x_1,x_2,x_3\n", 0) == 0);

  hn_population* parsed = nullptr;
  REQUIRE(hn_population_from_csv(csv.c_str(), 1.0, &parsed) == HN_OK);
  char* csv2_raw = nullptr;
  REQUIRE(hn_population_to_csv(parsed, &csv2_raw) == HN_OK);
  CHECK(grab(csv2_raw) == csv);

  hn_population_free(parsed);
  hn_population_free(pop);

  hn_population* tiny = nullptr;
  CHECK(hn_population_generate(cfg.c_str(), 1, 3, &tiny) == HN_USAGE);
}

TEST_CASE("histogram conserves pair counts and handles one-sided inputs") {
  const std::string cfg = tiny_train_config();
  hn_model* model = nullptr;
  REQUIRE(hn_train(cfg.c_str(), &model, nullptr) == HN_OK);
  hn_population* pop = nullptr;
  REQUIRE(hn_population_generate(cfg.c_str(), 10, 11, &pop) == HN_OK);

  char* csv_raw = nullptr;
  double intersection = -1.0;
  REQUIRE(hn_histogram(model, pop, 6, &csv_raw, &intersection) == HN_OK);
  std::string csv = grab(csv_raw);
  CHECK(csv.rfind("bin_lo,bin_hi,same_count,diff_count\n", 0) == 0);
  long long total = 0;
  size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    size_t end = csv.find('\n', pos);
    std::string line = csv.substr(pos, end - pos);
    size_t c1 = line.find(','), c2 = line.find(',', c1 + 1), c3 = line.find(',', c2 + 1);
    total += std::stoll(line.substr(c2 + 1, c3 - c2 - 1)) + std::stoll(line.substr(c3 + 1));
    pos = end + 1;
  }
  CHECK(total == 45);  // all unordered pairs of 10 points
  CHECK(intersection >= 0.0);
  CHECK(intersection <= 1.0);

  // One class only: the diff side is empty, so the overlap is undefined.
  // Reuse the generated points (the encoder embeds them without collapse)
  // with every label rewritten to the same class.
  char* pop_csv_raw = nullptr;
  REQUIRE(hn_population_to_csv(pop, &pop_csv_raw) == HN_OK);
  std::string mono_text = grab(pop_csv_raw);
  for (size_t at = mono_text.find('\n') + 1; at < mono_text.size();
       at = mono_text.find('\n', at) + 1)
    mono_text.replace(at, mono_text.find(',', at) - at, "0");
  hn_population* mono = nullptr;
  REQUIRE(hn_population_from_csv(mono_text.c_str(), 1.0, &mono) == HN_OK);
  double mono_intersection = 0.0;
  char* mono_csv = nullptr;
  REQUIRE(hn_histogram(model, mono, 4, &mono_csv, &mono_intersection) == HN_OK);
  CHECK(grab(mono_csv).find(",0\n") != std::string::npos);
  CHECK(std::isnan(mono_intersection));

  hn_population_free(mono);
  hn_population_free(pop);
  hn_model_free(model);
}

TEST_CASE("verification suites run through the C surface") {
  char* names_raw = nullptr;
  REQUIRE(hn_suite_names(&names_raw) == HN_OK);
  json names = json::parse(grab(names_raw));
  CHECK(names.size() == 7);
  CHECK(std::find(names.begin(), names.end(), json("equivalence")) != names.end());

  int pass = 0;
  char* evidence_raw = nullptr;
  char* summary_raw = nullptr;
  REQUIRE(hn_verify_suite("equivalence", 7, nullptr, 0, 0, 0, &pass, &evidence_raw,
                          &summary_raw) == HN_OK);
  CHECK(pass == 1);
  CHECK(grab(evidence_raw).rfind("batch,", 0) == 0);
  json summary = json::parse(grab(summary_raw));
  CHECK(summary["suite"] == "equivalence");
  CHECK(summary["pass"] == true);

  CHECK(hn_verify_suite("nosuch", 7, nullptr, 0, 0, 0, &pass, nullptr, nullptr) == HN_USAGE);
}

TEST_CASE("tammes solver reaches the antipodal optimum through C") {
  char* out_raw = nullptr;
  REQUIRE(hn_tammes(2, 3, 1.0, nullptr, 4, 200, 11, &out_raw) == HN_OK);
  json report = json::parse(grab(out_raw));
  CHECK(report["objective"].get<double>() == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(report["prototypes"].size() == 2);
  CHECK(report["seed"] == 11);

  CHECK(hn_tammes(1, 3, 1.0, nullptr, 4, 200, 11, &out_raw) == HN_USAGE);
}

TEST_CASE("bound experiment reports hold and repeat bitwise") {
  char* reports_raw = nullptr;
  char* warnings_raw = nullptr;
  int all_hold = 0;
  REQUIRE(hn_bound_run(3, 9, nullptr, &reports_raw, &warnings_raw, &all_hold) == HN_OK);
  std::string reports_text = grab(reports_raw);
  json reports = json::parse(reports_text);
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) {
    CHECK(r["valid"] == true);
    CHECK(r["holds"] == true);
  }
  CHECK(json::parse(grab(warnings_raw)).empty());
  CHECK(all_hold == 1);

  char* again_raw = nullptr;
  REQUIRE(hn_bound_run(3, 9, nullptr, &again_raw, nullptr, nullptr) == HN_OK);
  CHECK(grab(again_raw) == reports_text);
}

TEST_CASE("explicit bound configs skip hypothesis violations with a warning") {
  const char* entries =
      "[{\"classes\": 2, \"dim\": 3, \"sigma\": 0.01},"
      " {\"classes\": 2, \"dim\": 2, \"sigma\": 0.01, \"rho\": [0.7, 0.3]}]";
  char* reports_raw = nullptr;
  char* warnings_raw = nullptr;
  int all_hold = 0;
  REQUIRE(hn_bound_run(0, 5, entries, &reports_raw, &warnings_raw, &all_hold) == HN_OK);
  json reports = json::parse(grab(reports_raw));
  CHECK(reports.size() == 1);
  json warnings = json::parse(grab(warnings_raw));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].get<std::string>().find("hypothesis") != std::string::npos);
  CHECK(all_hold == 1);

  char* out = nullptr;
  CHECK(hn_bound_run(0, 5, "{\"not\": \"an array\"}", &out, nullptr, nullptr) ==
        HN_INVALID_CONFIG);
  CHECK(hn_bound_run(0, 5, "[{\"classes\": 2, \"extra\": 1}]", &out, nullptr, nullptr) ==
        HN_INVALID_CONFIG);
}

TEST_CASE("manifest emission enforces the outcome vocabulary") {
  const char* outputs[] = {"history.csv", "params.json"};
  char* out_raw = nullptr;
  REQUIRE(hn_manifest("train", "{\"train\": {\"epochs\": 1}}", 42, outputs, 2, "pass",
                      &out_raw) == HN_OK);
  json doc = json::parse(grab(out_raw));
  CHECK(doc["command"] == "train");
  CHECK(doc["seed"] == 42);
  CHECK(doc["outputs"].size() == 2);
  CHECK(doc["config"]["train"]["epochs"] == 1);
  CHECK(doc["outcome"] == "pass");

  CHECK(hn_manifest("train", "{}", 0, nullptr, 0, "maybe", &out_raw) == HN_USAGE);
}
