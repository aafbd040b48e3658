#include "cogeffort/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cogeffort/error.hpp"

namespace cogeffort {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;
using SectionSchema = std::map<std::string, Setter>;

[[noreturn]] void bad_value(const std::string& v, const char* expected) {
  throw ConfigError(std::string("expected ") + expected + ", got '" + v + "'");
}

long long to_int(const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  bad_value(v, "an integer");
}

std::uint64_t to_u64(const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v.front() != '-') {
      const unsigned long long x = std::stoull(v, &pos);
      if (pos == v.size()) return x;
    }
  } catch (const std::exception&) {
  }
  bad_value(v, "a non-negative integer");
}

double to_double(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  bad_value(v, "a number");
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(v, "a boolean");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> map_list(const std::string& v, F f) {
  std::vector<T> out;
  for (const auto& item : to_list(v)) out.push_back(static_cast<T>(f(item)));
  return out;
}

int to_i(const std::string& v) { return static_cast<int>(to_int(v)); }

const std::map<std::string, SectionSchema>& schema() {
  static const std::map<std::string, SectionSchema> s = {
      {"global",
       {{"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); }},
        {"out_dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }}}},
      {"synth",
       {{"n_participants", [](RunConfig& c, const std::string& v) { c.synth.n_participants = to_i(v); }},
        {"samples_per_trial", [](RunConfig& c, const std::string& v) { c.synth.samples_per_trial = to_i(v); }},
        {"effect_size", [](RunConfig& c, const std::string& v) { c.synth.effect_size = to_double(v); }},
        {"noise_sd", [](RunConfig& c, const std::string& v) { c.synth.noise_sd = to_double(v); }},
        {"drift_slope_sd", [](RunConfig& c, const std::string& v) { c.synth.drift_slope_sd = to_double(v); }},
        {"baseline_sd", [](RunConfig& c, const std::string& v) { c.synth.baseline_sd = to_double(v); }},
        {"effort_mean", [](RunConfig& c, const std::string& v) { c.synth.effort_mean = to_double(v); }},
        {"effort_sd", [](RunConfig& c, const std::string& v) { c.synth.effort_sd = to_double(v); }},
        {"stimulus_duration", [](RunConfig& c, const std::string& v) { c.synth.stimulus_duration = to_double(v); }},
        {"missing_fraction", [](RunConfig& c, const std::string& v) { c.synth.missing_fraction = to_double(v); }},
        {"target_correct_rate", [](RunConfig& c, const std::string& v) { c.synth.target_correct_rate = to_double(v); }},
        {"hrf_peak_delay", [](RunConfig& c, const std::string& v) { c.synth.hrf.peak_delay = to_double(v); }},
        {"hrf_undershoot_delay", [](RunConfig& c, const std::string& v) { c.synth.hrf.undershoot_delay = to_double(v); }},
        {"hrf_peak_dispersion", [](RunConfig& c, const std::string& v) { c.synth.hrf.peak_dispersion = to_double(v); }},
        {"hrf_undershoot_dispersion", [](RunConfig& c, const std::string& v) { c.synth.hrf.undershoot_dispersion = to_double(v); }},
        {"hrf_undershoot_ratio", [](RunConfig& c, const std::string& v) { c.synth.hrf.undershoot_ratio = to_double(v); }}}},
      {"prep",
       {{"pca_components", [](RunConfig& c, const std::string& v) { c.prep.pca_components = to_i(v); }},
        {"smote_k", [](RunConfig& c, const std::string& v) { c.prep.smote_k = to_i(v); }},
        {"ma_window", [](RunConfig& c, const std::string& v) { c.prep.ma_window = to_i(v); }},
        {"test_participants", [](RunConfig& c, const std::string& v) {
           const auto l = to_list(v);
           c.prep.split.test_participants = {l.begin(), l.end()};
         }},
        {"validation_participants", [](RunConfig& c, const std::string& v) {
           const auto l = to_list(v);
           c.prep.split.validation_participants = {l.begin(), l.end()};
         }}}},
      {"train",
       {{"architecture", [](RunConfig& c, const std::string& v) { c.train.architecture = parse_architecture(v); }},
        {"conv_filters", [](RunConfig& c, const std::string& v) { c.train.conv_filters = to_i(v); }},
        {"gru_units", [](RunConfig& c, const std::string& v) { c.train.gru_units = to_i(v); }},
        {"dropout_rate", [](RunConfig& c, const std::string& v) { c.train.dropout_rate = to_double(v); }},
        {"dense_units", [](RunConfig& c, const std::string& v) { c.train.dense_units = to_i(v); }},
        {"learning_rate", [](RunConfig& c, const std::string& v) { c.train.learning_rate = to_double(v); }},
        {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = to_i(v); }},
        {"max_epochs", [](RunConfig& c, const std::string& v) { c.train.max_epochs = to_i(v); }},
        {"patience", [](RunConfig& c, const std::string& v) { c.train.patience = to_i(v); }},
        {"bn_position", [](RunConfig& c, const std::string& v) { c.train.bn_position = parse_bn_position(v); }},
        {"bn_identity_fallback", [](RunConfig& c, const std::string& v) { c.train.bn_identity_fallback = to_bool(v); }}}},
      {"grid",
       {{"enabled", [](RunConfig& c, const std::string& v) { c.grid.enabled = to_bool(v); }},
        {"threads", [](RunConfig& c, const std::string& v) { c.grid.threads = to_i(v); }},
        {"gru_units", [](RunConfig& c, const std::string& v) { c.grid.space.gru_units = map_list<int>(v, to_int); }},
        {"dropout_rates", [](RunConfig& c, const std::string& v) { c.grid.space.dropout_rates = map_list<double>(v, to_double); }},
        {"learning_rates", [](RunConfig& c, const std::string& v) { c.grid.space.learning_rates = map_list<double>(v, to_double); }},
        {"batch_sizes", [](RunConfig& c, const std::string& v) { c.grid.space.batch_sizes = map_list<int>(v, to_int); }}}},
      {"baselines",
       {{"rf_trees", [](RunConfig& c, const std::string& v) { c.baselines.forest.n_trees = to_i(v); }},
        {"rf_max_depth", [](RunConfig& c, const std::string& v) { c.baselines.forest.max_depth = to_i(v); }},
        {"gbt_rounds", [](RunConfig& c, const std::string& v) { c.baselines.gbt.n_rounds = to_i(v); }},
        {"gbt_max_depth", [](RunConfig& c, const std::string& v) { c.baselines.gbt.max_depth = to_i(v); }},
        {"gbt_shrinkage", [](RunConfig& c, const std::string& v) { c.baselines.gbt.shrinkage = to_double(v); }},
        {"networks", [](RunConfig& c, const std::string& v) {
           c.baselines.networks.clear();
           for (const auto& a : to_list(v)) c.baselines.networks.push_back(parse_architecture(a));
         }}}},
      {"explain",
       {{"background_cap", [](RunConfig& c, const std::string& v) {
           c.explain.shapley.background_cap = static_cast<std::size_t>(to_u64(v));
         }},
        {"max_samples", [](RunConfig& c, const std::string& v) {
           c.explain.max_samples = static_cast<std::size_t>(to_u64(v));
         }}}},
      {"effort",
       {{"mode", [](RunConfig& c, const std::string& v) { c.effort.mode = parse_effort_mode(v); }},
        {"predictions", [](RunConfig& c, const std::string& v) {
           c.effort.predictions = parse_prediction_source(v);
         }}}},
  };
  return s;
}

void apply(RunConfig& config, const std::string& section, const std::string& key,
           const std::string& value) {
  const auto& sections = schema();
  const auto sec = sections.find(section);
  if (sec == sections.end()) throw ConfigError("unknown config section [" + section + "]");
  const auto setter = sec->second.find(key);
  if (setter == sec->second.end()) {
    throw ConfigError("unknown config key '" + key + "' in [" + section + "]");
  }
  try {
    setter->second(config, boost::algorithm::trim_copy(value));
  } catch (const ConfigError& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

nlohmann::json string_set(const std::set<std::string>& s) {
  return nlohmann::json(std::vector<std::string>(s.begin(), s.end()));
}

std::vector<std::string> network_names(const std::vector<Architecture>& archs) {
  std::vector<std::string> out;
  for (auto a : archs) out.push_back(to_string(a));
  return out;
}

}  // namespace

std::string to_string(PredictionSource p) { return p == PredictionSource::model ? "model" : "oracle"; }

PredictionSource parse_prediction_source(const std::string& s) {
  if (s == "model") return PredictionSource::model;
  if (s == "oracle") return PredictionSource::oracle;
  throw ConfigError("unknown prediction source '" + s + "' (model|oracle)");
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  synth.seed = s;
  prep.seed = s;
  train.seed = s;
  baselines.forest.seed = s;
  baselines.gbt.seed = s;
  explain.shapley.seed = s;
}

void RunConfig::validate() const {
  synth.validate();
  train.validate();
  if (prep.pca_components < 1 || prep.pca_components > synth.n_optodes) {
    throw ConfigError("prep.pca_components must be in 1.." + std::to_string(synth.n_optodes));
  }
  if (prep.smote_k < 1) throw ConfigError("prep.smote_k must be >= 1");
  if (prep.ma_window < 0 || (prep.ma_window > 0 && prep.ma_window % 2 == 0)) {
    throw ConfigError("prep.ma_window must be 0 (off) or an odd positive count");
  }
  if (train.input_width != prep.pca_components) {
    throw ConfigError("model input width must equal prep.pca_components");
  }
  if (grid.enabled && grid.space.size() == 0) throw ConfigError("grid: empty search space");
  if (grid.threads < 1) throw ConfigError("grid.threads must be >= 1");
  if (baselines.forest.n_trees < 1) throw ConfigError("baselines.rf_trees must be >= 1");
  if (baselines.gbt.n_rounds < 0) throw ConfigError("baselines.gbt_rounds must be >= 0");
  if (!(baselines.gbt.shrinkage > 0)) throw ConfigError("baselines.gbt_shrinkage must be > 0");
  if (explain.shapley.background_cap < 1) throw ConfigError("explain.background_cap must be >= 1");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["synth"] = {{"n_participants", synth.n_participants},
                {"n_questions", synth.n_questions},
                {"samples_per_trial", synth.samples_per_trial},
                {"n_optodes", synth.n_optodes},
                {"sample_rate", synth.sample_rate},
                {"effect_size", synth.effect_size},
                {"noise_sd", synth.noise_sd},
                {"drift_slope_sd", synth.drift_slope_sd},
                {"baseline_sd", synth.baseline_sd},
                {"effort_mean", synth.effort_mean},
                {"effort_sd", synth.effort_sd},
                {"stimulus_duration", synth.stimulus_duration},
                {"missing_fraction", synth.missing_fraction},
                {"target_correct_rate", synth.target_correct_rate},
                {"hrf_peak_delay", synth.hrf.peak_delay},
                {"hrf_undershoot_delay", synth.hrf.undershoot_delay},
                {"hrf_peak_dispersion", synth.hrf.peak_dispersion},
                {"hrf_undershoot_dispersion", synth.hrf.undershoot_dispersion},
                {"hrf_undershoot_ratio", synth.hrf.undershoot_ratio}};
  j["prep"] = {{"pca_components", prep.pca_components},
               {"smote_k", prep.smote_k},
               {"ma_window", prep.ma_window},
               {"test_participants", string_set(prep.split.test_participants)},
               {"validation_participants", string_set(prep.split.validation_participants)}};
  j["train"] = {{"architecture", to_string(train.architecture)},
                {"conv_filters", train.conv_filters},
                {"conv_kernel", train.conv_kernel},
                {"gru_units", train.gru_units},
                {"dropout_rate", train.dropout_rate},
                {"dense_units", train.dense_units},
                {"classes", train.classes},
                {"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"bn_position", to_string(train.bn_position)},
                {"bn_identity_fallback", train.bn_identity_fallback}};
  j["grid"] = {{"enabled", grid.enabled},
               {"threads", grid.threads},
               {"gru_units", grid.space.gru_units},
               {"dropout_rates", grid.space.dropout_rates},
               {"learning_rates", grid.space.learning_rates},
               {"batch_sizes", grid.space.batch_sizes}};
  j["baselines"] = {{"rf_trees", baselines.forest.n_trees},
                    {"rf_max_depth", baselines.forest.max_depth},
                    {"gbt_rounds", baselines.gbt.n_rounds},
                    {"gbt_max_depth", baselines.gbt.max_depth},
                    {"gbt_shrinkage", baselines.gbt.shrinkage},
                    {"networks", network_names(baselines.networks)}};
  j["explain"] = {{"background_cap", explain.shapley.background_cap},
                  {"max_samples", explain.max_samples}};
  j["effort"] = {{"mode", to_string(effort.mode)},
                 {"predictions", to_string(effort.predictions)}};
  return j;
}

RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig config;
  for (const auto& [name, node] : tree) {
    if (node.empty() && !(node.data().empty() && schema().count(name))) {
      apply(config, "global", name, node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("nested keys are not supported: " + name + "." + key);
      apply(config, name, key, leaf.data());
    }
  }
  config.set_seed(config.seed);
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

}  // namespace cogeffort
