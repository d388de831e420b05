#include "hardneg/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hardneg {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, ErrorCode code, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(code, std::string(what) + ": " + e.what());
  }
}

template <typename T>
T get_field(const json& section, const char* section_name, const char* key) {
  try {
    return section.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::InvalidConfig,
         std::string("config field ") + section_name + "." + key + " has the wrong type");
  }
}

json loss_to_json(const LossConfig& lc) {
  json j;
  j["beta"] = lc.beta;
  j["tau_plus"] = lc.tau_plus;
  j["t"] = lc.t;
  j["q"] = lc.Q ? json(*lc.Q) : json(nullptr);
  j["clip"] = lc.clip ? json{lc.clip->first, lc.clip->second} : json(nullptr);
  j["estimator_floor"] = lc.estimator_floor ? json(*lc.estimator_floor) : json(nullptr);
  return j;
}

json train_to_json(const TrainConfig& tc) {
  json j;
  j["epochs"] = tc.epochs;
  j["batch_size"] = tc.batch_size;
  j["batches_per_epoch"] = tc.batches_per_epoch;
  j["lr"] = tc.lr;
  j["weight_decay"] = tc.weight_decay;
  j["adam_beta1"] = tc.adam_beta1;
  j["adam_beta2"] = tc.adam_beta2;
  j["adam_eps"] = tc.adam_eps;
  j["anneal_ell"] = tc.anneal_ell ? json(*tc.anneal_ell) : json(nullptr);
  j["eval_every"] = tc.eval_every;
  j["eval_size"] = tc.eval_size;
  j["knn_k"] = tc.knn_k;
  j["knn_weighted"] = tc.knn_weighted;
  j["hidden_dims"] = tc.hidden_dims;
  j["embed_dim"] = tc.embed_dim;
  j["seed"] = tc.seed;
  return j;
}

json data_to_json(const DataConfig& dc) {
  json j;
  j["num_classes"] = dc.num_classes;
  j["input_dim"] = dc.input_dim;
  j["separation"] = dc.separation;
  j["within_std"] = dc.within_std;
  j["aug_std"] = dc.aug_std;
  j["t"] = dc.t;
  j["true_positives"] = dc.true_positives;
  return j;
}

json config_doc(const ResolvedConfig& cfg) {
  json doc;
  doc["loss"] = loss_to_json(cfg.train.loss);
  doc["train"] = train_to_json(cfg.train);
  doc["data"] = data_to_json(cfg.data);
  return doc;
}

// The default document doubles as the schema: any key absent from it is
// rejected.
void check_schema(const json& doc) {
  const json defaults = config_doc(ResolvedConfig{});
  require(doc.is_object(), ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [section, body] : doc.items()) {
    require(defaults.contains(section), ErrorCode::InvalidConfig,
            "unknown config section: " + section);
    require(body.is_object(), ErrorCode::InvalidConfig,
            "config section " + section + " must be an object");
    for (const auto& [key, value] : body.items()) {
      (void)value;
      require(defaults[section].contains(key), ErrorCode::InvalidConfig,
              "unknown config field: " + section + "." + key);
    }
  }
}

ResolvedConfig config_from_doc(const json& merged) {
  ResolvedConfig cfg;
  const json& l = merged.at("loss");
  cfg.train.loss.beta = get_field<double>(l, "loss", "beta");
  cfg.train.loss.tau_plus = get_field<double>(l, "loss", "tau_plus");
  cfg.train.loss.t = get_field<double>(l, "loss", "t");
  if (!l.at("q").is_null()) cfg.train.loss.Q = get_field<double>(l, "loss", "q");
  if (!l.at("clip").is_null()) {
    auto arr = get_field<std::vector<double>>(l, "loss", "clip");
    require(arr.size() == 2, ErrorCode::InvalidConfig, "loss.clip must be [lo, hi]");
    cfg.train.loss.clip = {arr[0], arr[1]};
  }
  if (!l.at("estimator_floor").is_null())
    cfg.train.loss.estimator_floor = get_field<double>(l, "loss", "estimator_floor");

  const json& t = merged.at("train");
  cfg.train.epochs = get_field<int>(t, "train", "epochs");
  cfg.train.batch_size = get_field<int>(t, "train", "batch_size");
  cfg.train.batches_per_epoch = get_field<int>(t, "train", "batches_per_epoch");
  cfg.train.lr = get_field<double>(t, "train", "lr");
  cfg.train.weight_decay = get_field<double>(t, "train", "weight_decay");
  cfg.train.adam_beta1 = get_field<double>(t, "train", "adam_beta1");
  cfg.train.adam_beta2 = get_field<double>(t, "train", "adam_beta2");
  cfg.train.adam_eps = get_field<double>(t, "train", "adam_eps");
  if (!t.at("anneal_ell").is_null())
    cfg.train.anneal_ell = get_field<int>(t, "train", "anneal_ell");
  cfg.train.eval_every = get_field<int>(t, "train", "eval_every");
  cfg.train.eval_size = get_field<int>(t, "train", "eval_size");
  cfg.train.knn_k = get_field<int>(t, "train", "knn_k");
  cfg.train.knn_weighted = get_field<bool>(t, "train", "knn_weighted");
  cfg.train.hidden_dims = get_field<std::vector<int>>(t, "train", "hidden_dims");
  cfg.train.embed_dim = get_field<int>(t, "train", "embed_dim");
  cfg.train.seed = get_field<uint64_t>(t, "train", "seed");

  const json& d = merged.at("data");
  cfg.data.num_classes = get_field<int>(d, "data", "num_classes");
  cfg.data.input_dim = get_field<int>(d, "data", "input_dim");
  cfg.data.separation = get_field<double>(d, "data", "separation");
  cfg.data.within_std = get_field<double>(d, "data", "within_std");
  cfg.data.aug_std = get_field<double>(d, "data", "aug_std");
  cfg.data.t = get_field<double>(d, "data", "t");
  cfg.data.true_positives = get_field<bool>(d, "data", "true_positives");
  return cfg;
}

json merged_doc(const json& overlay) {
  check_schema(overlay);
  json doc = config_doc(ResolvedConfig{});
  for (const auto& [section, body] : overlay.items())
    for (const auto& [key, value] : body.items()) doc[section][key] = value;
  return doc;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double_strict(const std::string& s, const char* what) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    require(used == s.size(), ErrorCode::Io, std::string("trailing characters in ") + what);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::Io, std::string("malformed number in ") + what + ": '" + s + "'");
  }
}

int parse_int_strict(const std::string& s, const char* what) {
  try {
    size_t used = 0;
    int v = std::stoi(s, &used);
    require(used == s.size(), ErrorCode::Io, std::string("trailing characters in ") + what);
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::Io, std::string("malformed integer in ") + what + ": '" + s + "'");
  }
}

}  // namespace

LatentClassSpec make_spec(const DataConfig& cfg) {
  LatentClassSpec spec = default_latent_spec(cfg.num_classes, cfg.input_dim, cfg.separation,
                                             cfg.within_std, cfg.aug_std, cfg.t);
  spec.true_positives = cfg.true_positives;
  return spec;
}

std::string default_config_json() { return config_doc(ResolvedConfig{}).dump(2) + "\n"; }

ResolvedConfig config_from_json(const std::string& text) {
  json overlay = parse_json(text, ErrorCode::InvalidConfig, "config");
  return config_from_doc(merged_doc(overlay));
}

std::string config_to_json(const ResolvedConfig& cfg) { return config_doc(cfg).dump(2) + "\n"; }

std::string merge_config_json(const std::string& base_json, const std::string& overlay_json) {
  json base = parse_json(base_json, ErrorCode::InvalidConfig, "config");
  json overlay = parse_json(overlay_json, ErrorCode::InvalidConfig, "config overlay");
  check_schema(base);
  check_schema(overlay);
  json doc = merged_doc(base);
  for (const auto& [section, body] : overlay.items())
    for (const auto& [key, value] : body.items()) doc[section][key] = value;
  return config_to_json(config_from_doc(doc));
}

std::string set_config_value(const std::string& config_json, const std::string& dotted_path,
                             const std::string& value) {
  const auto dot = dotted_path.find('.');
  require(dot != std::string::npos && dot > 0 && dot + 1 < dotted_path.size() &&
              dotted_path.find('.', dot + 1) == std::string::npos,
          ErrorCode::InvalidConfig, "expected a section.key path, got: " + dotted_path);
  const std::string section = dotted_path.substr(0, dot);
  const std::string key = dotted_path.substr(dot + 1);
  const json defaults = config_doc(ResolvedConfig{});
  require(defaults.contains(section) && defaults.at(section).contains(key),
          ErrorCode::InvalidConfig, "unknown config field: " + dotted_path);

  json overlay = parse_json(config_json, ErrorCode::InvalidConfig, "config");
  json doc = merged_doc(overlay);
  doc[section][key] = parse_json(value, ErrorCode::InvalidConfig,
                                 ("value for " + dotted_path).c_str());
  // Re-extract so type errors surface at the point of the override.
  return config_to_json(config_from_doc(doc));
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::ostringstream out;
  out << "epoch,loss,accuracy\n";
  for (const auto& row : history)
    out << row.epoch << ',' << format_double(row.loss) << ',' << format_double(row.accuracy)
        << '\n';
  return out.str();
}

std::string params_json(const MlpParams& params, double t) {
  validate(params);
  require(std::isfinite(t) && t > 0.0, ErrorCode::InvalidConfig, "temperature must be positive");
  json j;
  j["layer_dims"] = params.layer_dims;
  j["t"] = t;
  json values = json::array();
  for (int l = 0; l < params.num_layers(); ++l) {
    const auto& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) values.push_back(w(r, c));
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
      values.push_back(params.biases[l][i]);
  }
  j["values"] = std::move(values);
  return j.dump(2) + "\n";
}

std::pair<MlpParams, double> params_from_json(const std::string& text) {
  json j = parse_json(text, ErrorCode::Io, "parameter file");
  require(j.is_object() && j.contains("layer_dims") && j.contains("t") && j.contains("values"),
          ErrorCode::Io, "parameter file needs layer_dims, t, values");
  MlpParams p;
  double t = 0.0;
  try {
    p.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    t = j.at("t").get<double>();
  } catch (const json::exception&) {
    fail(ErrorCode::Io, "parameter file fields have the wrong type");
  }
  require(p.layer_dims.size() >= 2, ErrorCode::Io, "parameter file needs >= 2 layer dims");
  require(std::isfinite(t) && t > 0.0, ErrorCode::Io, "parameter file temperature invalid");
  const json& values = j.at("values");
  require(values.is_array(), ErrorCode::Io, "parameter values must be an array");
  size_t expected = 0;
  const int L = static_cast<int>(p.layer_dims.size()) - 1;
  for (int l = 0; l < L; ++l) {
    require(p.layer_dims[l] >= 1 && p.layer_dims[l + 1] >= 1, ErrorCode::Io,
            "parameter file layer dims must be >= 1");
    expected += static_cast<size_t>(p.layer_dims[l + 1]) * p.layer_dims[l] + p.layer_dims[l + 1];
  }
  require(values.size() == expected, ErrorCode::Io,
          "parameter value count disagrees with layer_dims");
  size_t at = 0;
  p.weights.resize(L);
  p.biases.resize(L);
  for (int l = 0; l < L; ++l) {
    p.weights[l].resize(p.layer_dims[l + 1], p.layer_dims[l]);
    for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c)
        p.weights[l](r, c) = values.at(at++).get<double>();
    p.biases[l].resize(p.layer_dims[l + 1]);
    for (Eigen::Index i = 0; i < p.biases[l].size(); ++i)
      p.biases[l][i] = values.at(at++).get<double>();
  }
  validate(p);
  return {std::move(p), t};
}

std::string population_csv(const FinitePopulation& pop) {
  require(pop.size() >= 1, ErrorCode::Shape, "cannot serialize an empty population");
  require(pop.labels.size() == pop.points.size(), ErrorCode::Shape,
          "label/point count mismatch");
  const int d = pop.dim();
  std::ostringstream out;
  out << "label";
  for (int j = 0; j < d; ++j) out << ",x_" << j;
  out << '\n';
  for (int i = 0; i < pop.size(); ++i) {
    require(pop.points[i].dim() == d, ErrorCode::Shape, "points must share dimension");
    out << pop.labels[i];
    for (int j = 0; j < d; ++j) out << ',' << format_double(pop.points[i].coords[j]);
    out << '\n';
  }
  return out.str();
}

FinitePopulation population_from_csv(const std::string& text, double t) {
  require(std::isfinite(t) && t > 0.0, ErrorCode::InvalidConfig, "temperature must be positive");
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Io, "population file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  require(header.size() >= 2 && header[0] == "label", ErrorCode::Io,
          "population header must be label,x_0,...");
  const int d = static_cast<int>(header.size()) - 1;
  for (int j = 0; j < d; ++j)
    require(header[j + 1] == "x_" + std::to_string(j), ErrorCode::Io,
            "population header must be label,x_0,...");

  FinitePopulation pop;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    require(static_cast<int>(fields.size()) == d + 1, ErrorCode::Io,
            "population row has the wrong field count");
    const int label = parse_int_strict(fields[0], "population label");
    require(label >= 0, ErrorCode::Io, "population labels must be >= 0");
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = parse_double_strict(fields[j + 1], "population coord");
    pop.points.push_back(Embedding{std::move(v), t, false});
    pop.labels.push_back(label);
  }
  require(!pop.points.empty(), ErrorCode::Io, "population file has no data rows");
  pop.base_weights.assign(pop.points.size(), 1.0 / pop.points.size());
  return pop;
}

std::string prop1_csv(const std::vector<Prop1Row>& rows) {
  std::ostringstream out;
  out << "beta,gap\n";
  for (const auto& row : rows)
    out << format_double(row.beta) << ',' << format_double(row.gap) << '\n';
  return out.str();
}

std::string tammes_json(const SpherePacking& packing, double objective, uint64_t seed) {
  json j;
  j["objective"] = objective;
  json protos = json::array();
  for (const auto& v : packing.prototypes) {
    json row = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v[i]);
    protos.push_back(std::move(row));
  }
  j["prototypes"] = std::move(protos);
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

std::string bound_reports_json(const std::vector<BoundReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json j;
    j["epsilon"] = r.epsilon;
    j["xi"] = r.xi;
    j["bound"] = r.bound;  // NaN serializes as null when the margin is invalid
    j["empirical_risk"] = r.empirical_risk;
    j["valid"] = r.valid;
    j["holds"] = r.holds;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<BoundConfig> bound_configs_from_json(const std::string& text) {
  json doc = parse_json(text, ErrorCode::InvalidConfig, "bound config");
  require(doc.is_array(), ErrorCode::InvalidConfig,
          "bound config must be a JSON array of configuration objects");
  std::vector<BoundConfig> out;
  out.reserve(doc.size());
  for (const auto& entry : doc) {
    require(entry.is_object(), ErrorCode::InvalidConfig,
            "bound configuration entries must be objects");
    for (const auto& [key, value] : entry.items()) {
      (void)value;
      require(key == "classes" || key == "dim" || key == "sigma" || key == "rho",
              ErrorCode::InvalidConfig, "unknown bound configuration key: " + key);
    }
    BoundConfig bc;
    if (entry.contains("classes")) bc.classes = get_field<int>(entry, "bound", "classes");
    if (entry.contains("dim")) bc.dim = get_field<int>(entry, "bound", "dim");
    if (entry.contains("sigma")) bc.sigma = get_field<double>(entry, "bound", "sigma");
    if (entry.contains("rho") && !entry.at("rho").is_null())
      bc.rho = get_field<std::vector<double>>(entry, "bound", "rho");
    out.push_back(std::move(bc));
  }
  return out;
}

std::string histogram_csv(const ScoreHistogram& h) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,same_count,diff_count\n";
  for (size_t b = 0; b < h.bin_lo.size(); ++b)
    out << format_double(h.bin_lo[b]) << ',' << format_double(h.bin_hi[b]) << ','
        << h.same_count[b] << ',' << h.diff_count[b] << '\n';
  return out.str();
}

std::string suite_summary_json(const SuiteReport& report) {
  json j;
  j["suite"] = report.suite;
  j["pass"] = report.pass;
  j["worst"] = report.worst;
  j["tolerance"] = report.tolerance;
  return j.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "beta,mode,seed,final_accuracy\n";
  for (const auto& row : rows)
    out << format_double(row.beta) << ',' << row.mode << ',' << row.seed << ','
        << format_double(row.final_accuracy) << '\n';
  return out.str();
}

std::string manifest_json(const RunManifest& m) {
  require(m.outcome == "pass" || m.outcome == "fail" || m.outcome == "usage-error",
          ErrorCode::Usage, "manifest outcome must be pass, fail, or usage-error");
  require(!m.command.empty(), ErrorCode::Usage, "manifest needs a command name");
  json j;
  j["command"] = m.command;
  j["config"] = m.config_json.empty()
                    ? json::object()
                    : parse_json(m.config_json, ErrorCode::InvalidConfig, "manifest config");
  j["seed"] = m.seed;
  j["outputs"] = m.outputs;
  j["outcome"] = m.outcome;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::Io, "cannot open for writing: " + path);
  out << text;
  out.flush();
  require(out.good(), ErrorCode::Io, "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  require(!in.bad(), ErrorCode::Io, "read failed: " + path);
  return buf.str();
}

}  // namespace hardneg
