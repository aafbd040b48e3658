#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "cogeffort/dataprep.hpp"
#include "cogeffort/evalcore.hpp"
#include "cogeffort/explain.hpp"
#include "cogeffort/network.hpp"
#include "cogeffort/synthgen.hpp"
#include "cogeffort/training.hpp"
#include "cogeffort/trees.hpp"

namespace cogeffort {

enum class PredictionSource { model, oracle };
std::string to_string(PredictionSource p);
PredictionSource parse_prediction_source(const std::string& s);

struct BaselineConfig {
  ForestParams forest;
  GbtParams gbt;
  // Neural comparison models trained with the [train] settings.
  std::vector<Architecture> networks{Architecture::cnn, Architecture::lstm, Architecture::bilstm};
};

struct ExplainSettings {
  ExplainConfig shapley;
  std::size_t max_samples = 0;  // 0 explains every test row
};

struct EffortSettings {
  EffortMode mode = EffortMode::literal;
  PredictionSource predictions = PredictionSource::model;
};

struct GridSettings {
  bool enabled = false;  // pipeline trains via grid search instead of [train]
  GridSpace space;
  int threads = 1;
};

// Sections [synth] [prep] [train] [grid] [baselines] [explain] [effort];
// `seed` and `out_dir` live at top level or under [global]. The global seed
// is copied into every section.
struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  CohortSpec synth;
  PrepConfig prep;
  ModelConfig train;
  GridSettings grid;
  BaselineConfig baselines;
  ExplainSettings explain;
  EffortSettings effort;

  void set_seed(std::uint64_t s);
  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses INI text. Unknown sections or keys and malformed values throw
/// ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace cogeffort
