#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cogeffort/config.hpp"
#include "cogeffort/csv_io.hpp"
#include "cogeffort/error.hpp"
#include "cogeffort/manifest.hpp"

using namespace cogeffort;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cogeffort_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("csv_io") {

TEST_CASE("doubles survive formatting bit for bit") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -0.0}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(std::nan("")) == "NaN");
  CHECK(std::isnan(parse_double("")));
  CHECK(std::isnan(parse_double("nan")));
  CHECK_THROWS_AS(parse_double("1.5x"), DataError);
}

TEST_CASE("csv reader checks row widths and headers") {
  std::istringstream ok("a,b\n1,2\n3,4\n");
  const auto t = read_csv(ok);
  CHECK(t.rows.size() == 2);
  CHECK(t.column("b") == 1);
  CHECK_THROWS_AS(t.column("c"), DataError);
  CHECK_THROWS_AS(t.require_header({"a", "c"}), DataError);
  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_AS(read_csv(ragged), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_csv(empty), DataError);
  CHECK_THROWS_AS(read_csv_file("/nonexistent/x.csv"), MissingArtifact);
}

TEST_CASE("trials round trip in long format, including missing cells") {
  CohortSpec spec;
  spec.n_participants = 2;
  spec.missing_fraction = 0.01;
  const auto trials = generate_cohort(spec);
  std::stringstream ss;
  write_trials_csv(ss, trials);
  const std::string text = ss.str();
  CHECK(text.rfind("participant_id,question_id,session,segment,t_index,o01,", 0) == 0);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 1 + 32 * 200);
  const auto back = read_trials_csv(ss);
  REQUIRE(back.size() == trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    CHECK(back[i].participant_id == trials[i].participant_id);
    CHECK(back[i].question_id == trials[i].question_id);
    CHECK(back[i].label == trials[i].label);
    const auto& a = trials[i].hbo.raw();
    const auto& b = back[i].hbo.raw();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (std::isnan(a[k])) CHECK(std::isnan(b[k]));
      else CHECK(a[k] == b[k]);
    }
  }
}

TEST_CASE("features and predictions round trip") {
  std::vector<FeatureRow> rows(3);
  rows[0] = {"P1", 1, 1, 1, {0.5, -0.25}, 1, false};
  rows[1] = {"P2", 9, 2, 3, {1.0 / 3.0, 2.0}, 0, false};
  rows[2] = {"SMOTE", 0, 0, 0, {0.1, 0.2}, 0, true};
  std::stringstream ss;
  write_features_csv(ss, rows);
  CHECK(ss.str().rfind("participant_id,question_id,session,segment,f01,f02,label\n", 0) == 0);
  CHECK(read_features_csv(ss) == rows);

  std::vector<Prediction> preds{{"P8", 3, 1, 1, 1, 0, 0.25}, {"P8", 4, 1, 1, 0, 0, 1.0 / 7.0}};
  std::stringstream ps;
  write_predictions_csv(ps, preds);
  const auto back = read_predictions_csv(ps);
  REQUIRE(back.size() == 2);
  CHECK(back[1].prob1 == preds[1].prob1);
  CHECK(back[0].label == 1);
  CHECK(back[0].predicted == 0);
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("defaults match the documented settings") {
  std::istringstream empty("");
  const auto c = parse_config(empty);
  CHECK(c.seed == 42);
  CHECK(c.synth.n_participants == 16);
  CHECK(c.prep.pca_components == 12);
  CHECK(c.train.architecture == Architecture::cnn_gru);
  CHECK(c.train.learning_rate == 0.003);
  CHECK(c.train.batch_size == 4);
  CHECK(c.train.gru_units == 8);
  CHECK(c.effort.mode == EffortMode::literal);
  CHECK_FALSE(c.grid.enabled);
}

TEST_CASE("values are read from sections and the seed propagates") {
  std::istringstream in(
      "seed = 7\n"
      "[synth]\nn_participants = 6\neffect_size = 0.8\n"
      "[prep]\ntest_participants = P1,P2\nvalidation_participants = P3\n"
      "[train]\narchitecture = bilstm\nbn_position = post_gru\nlearning_rate = 0.01\n"
      "[grid]\nenabled = true\nbatch_sizes = 2,4\n"
      "[effort]\nmode = conventional\npredictions = oracle\n");
  const auto c = parse_config(in);
  CHECK(c.seed == 7);
  CHECK(c.synth.seed == 7);
  CHECK(c.train.seed == 7);
  CHECK(c.prep.seed == 7);
  CHECK(c.synth.n_participants == 6);
  CHECK(c.synth.effect_size == 0.8);
  CHECK(c.prep.split.test_participants == std::set<std::string>{"P1", "P2"});
  CHECK(c.train.architecture == Architecture::bilstm);
  CHECK(c.train.bn_position == BnPosition::post_recurrent);
  CHECK(c.grid.enabled);
  CHECK(c.grid.space.batch_sizes == std::vector<int>{2, 4});
  CHECK(c.effort.mode == EffortMode::conventional);
  CHECK(c.effort.predictions == PredictionSource::oracle);
  CHECK(c.to_json().at("seed") == 7);
}

TEST_CASE("unknown keys, sections and bad values are rejected") {
  std::istringstream key("[train]\nlearnin_rate = 0.1\n");
  CHECK_THROWS_AS(parse_config(key), ConfigError);
  std::istringstream section("[model]\nunits = 3\n");
  CHECK_THROWS_AS(parse_config(section), ConfigError);
  std::istringstream value("[train]\nbatch_size = four\n");
  try {
    parse_config(value);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("train.batch_size") != std::string::npos);
  }
  std::istringstream range("[train]\ndropout_rate = 1.5\n");
  CHECK_THROWS_AS(parse_config(range), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.ini"), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("manifest") {

TEST_CASE("sha256 matches the published test vectors") {
  CHECK(sha256_hex(std::string("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  std::istringstream in("abc");
  CHECK(sha256_hex(in) == sha256_hex(std::string("abc")));
}

TEST_CASE("manifests round trip and detect changed outputs") {
  const auto dir = scratch_dir("manifest");
  {
    std::ofstream(dir / "a.txt") << "hello";
  }
  RunManifest m;
  m.seed = 9;
  m.config = {{"seed", 9}};
  m.record({"synth", {}, {{"a.txt", sha256_file((dir / "a.txt").string())}}, 0.5});
  m.record({"prep", {{"a.txt", "x"}}, {}, 0.1});
  m.record({"synth", {}, {{"a.txt", sha256_file((dir / "a.txt").string())}}, 0.7});
  CHECK(m.stages.size() == 2);
  CHECK(m.stages[0].wall_seconds == 0.7);
  save_manifest(dir.string(), m);
  const auto back = load_manifest(dir.string());
  CHECK(back.seed == 9);
  CHECK(back.to_json() == m.to_json());
  CHECK(back.verify(dir.string()).empty());
  {
    std::ofstream(dir / "a.txt") << "changed";
  }
  CHECK(back.verify(dir.string()) == std::vector<std::string>{"a.txt"});
  CHECK(load_manifest((dir / "missing").string()).stages.empty());
  fs::remove_all(dir);
}

}  // TEST_SUITE
