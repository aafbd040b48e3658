#include "cogeffort/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "cogeffort/checkpoint.hpp"
#include "cogeffort/csv_io.hpp"
#include "cogeffort/error.hpp"
#include "cogeffort/evalcore.hpp"
#include "cogeffort/explain.hpp"
#include "cogeffort/manifest.hpp"
#include "cogeffort/synthgen.hpp"
#include "cogeffort/training.hpp"
#include "cogeffort/trees.hpp"

namespace cogeffort {

namespace fs = std::filesystem;

namespace {

inline constexpr const char* kRfModel = "rf_model.json";
inline constexpr const char* kGbtModel = "gbt_model.json";

// Tracks the files a stage reads and writes so the manifest can digest them.
class StageIo {
 public:
  StageIo(const RunConfig& config, std::string name) : config_(config), name_(std::move(name)) {
    fs::create_directories(config_.out_dir);
  }

  std::string input(const std::string& file) {
    const std::string p = path(file);
    if (!fs::exists(p)) throw MissingArtifact(file);
    inputs_.push_back(file);
    return p;
  }

  std::ofstream output(const std::string& file) {
    outputs_.push_back(file);
    std::ofstream out(path(file), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path(file));
    out.precision(17);
    return out;
  }

  /// Registers a file the caller writes itself; returns its path.
  std::string output_path(const std::string& file) {
    outputs_.push_back(file);
    return path(file);
  }

  std::string path(const std::string& file) const {
    return (fs::path(config_.out_dir) / file).string();
  }

  void commit(double seconds) const {
    RunManifest manifest = load_manifest(config_.out_dir);
    manifest.version = kToolVersion;
    manifest.config = config_.to_json();
    manifest.seed = config_.seed;
    StageRecord rec{name_, {}, {}, seconds};
    for (const auto& f : inputs_) rec.inputs[f] = sha256_file(path(f));
    for (const auto& f : outputs_) rec.outputs[f] = sha256_file(path(f));
    manifest.record(std::move(rec));
    save_manifest(config_.out_dir, manifest);
  }

 private:
  const RunConfig& config_;
  std::string name_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(fs::path(path).filename().string());
  return in;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
}

void write_json(std::ofstream out, const nlohmann::json& j) { out << j.dump(2) << '\n'; }

std::vector<FeatureRow> read_features(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_features_csv(in);
}

std::vector<Trial> read_trials(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_trials_csv(in);
}

double majority_rate(const std::vector<int>& labels) {
  const auto ones = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n = static_cast<double>(labels.size());
  return std::max(ones, n - ones) / n;
}

struct ModelData {
  Partition parts;
  std::vector<FeatureRow> train_balanced;
  std::vector<FeatureRow> all;
};

ModelData load_model_data(StageIo& io, const RunConfig& config) {
  ModelData d;
  d.all = read_features(io.input(artifact::features));
  d.train_balanced = read_features(io.input(artifact::features_train));
  d.parts = split_by_participant(d.all, config.prep.split);
  return d;
}

std::vector<Prediction> predict_rows(const Network& net, const std::vector<FeatureRow>& rows) {
  const Tensor probs =
      net.predict_proba(reshape_for_model(rows, static_cast<std::size_t>(net.config().input_width)));
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out.push_back(Prediction{r.participant_id, r.question_id, r.session, r.segment, r.label,
                             probs(i, 1) > probs(i, 0) ? 1 : 0, probs(i, 1)});
  }
  return out;
}

ClassificationMetrics test_metrics(const Network& net, const std::vector<FeatureRow>& test) {
  const auto preds = predict_rows(net, test);
  std::vector<int> y, p;
  for (const auto& x : preds) {
    y.push_back(x.label);
    p.push_back(x.predicted);
  }
  return classification_metrics(y, p);
}

// ---- Stages ------------------------------------------------------------------------

void stage_synth(const RunConfig& config, StageIo& io) {
  const auto trials = generate_cohort(config.synth);
  auto out = io.output(artifact::trials);
  write_trials_csv(out, trials);
}

void stage_prep(const RunConfig& config, StageIo& io) {
  const auto trials = read_trials(io.input(artifact::trials));
  const PreparedData data = prepare(trials, config.prep);
  {
    auto out = io.output(artifact::features);
    write_features_csv(out, data.all);
  }
  {
    auto out = io.output(artifact::features_train);
    write_features_csv(out, data.train_balanced);
  }
  write_json(io.output(artifact::pca_model), pca_to_json(data.pca));
}

void write_model_outputs(StageIo& io, const TrainedModel& model,
                         const std::vector<FeatureRow>& test) {
  save_checkpoint(io.output_path(artifact::checkpoint), model.network, model.best_epoch);
  {
    auto out = io.output(artifact::history);
    write_history_csv(out, model.history);
  }
  const auto preds = predict_rows(model.network, test);
  {
    auto out = io.output(artifact::predictions);
    write_predictions_csv(out, preds);
  }
  std::vector<int> y, p;
  for (const auto& x : preds) {
    y.push_back(x.label);
    p.push_back(x.predicted);
  }
  const auto metrics = classification_metrics(y, p);
  const auto& best = model.history.at(static_cast<std::size_t>(model.best_epoch - 1));
  write_json(io.output(artifact::metrics),
             {{"architecture", to_string(model.config().architecture)},
              {"test", metrics.to_json()},
              {"majority_rate", majority_rate(y)},
              {"best_epoch", model.best_epoch},
              {"epochs_run", model.history.size()},
              {"best_val_accuracy", best.val_acc},
              {"best_val_loss", best.val_loss}});
}

void stage_train(const RunConfig& config, StageIo& io) {
  const ModelData d = load_model_data(io, config);
  const auto width = static_cast<std::size_t>(config.train.input_width);
  const TrainedModel model = train(config.train, Dataset::from_rows(d.train_balanced, width),
                                   Dataset::from_rows(d.parts.validation, width));
  write_model_outputs(io, model, d.parts.test);
}

std::string csv_safe(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

nlohmann::json grid_entry_json(const GridEntry& e) {
  return {{"index", e.index},
          {"gru_units", e.config.gru_units},
          {"dropout_rate", e.config.dropout_rate},
          {"learning_rate", e.config.learning_rate},
          {"batch_size", e.config.batch_size},
          {"seed", e.config.seed},
          {"ok", e.ok},
          {"error", e.error},
          {"val_accuracy", e.ok ? nlohmann::json(e.val_accuracy) : nlohmann::json(nullptr)},
          {"val_loss", e.ok ? nlohmann::json(e.val_loss) : nlohmann::json(nullptr)},
          {"best_epoch", e.best_epoch},
          {"epochs_run", e.epochs_run}};
}

void stage_gridsearch(const RunConfig& config, StageIo& io) {
  const ModelData d = load_model_data(io, config);
  const auto width = static_cast<std::size_t>(config.train.input_width);
  const GridReport report =
      grid_search(config.grid.space, config.train, Dataset::from_rows(d.train_balanced, width),
                  Dataset::from_rows(d.parts.validation, width), config.grid.threads);
  {
    auto out = io.output(artifact::grid_log);
    out << "index,gru_units,dropout_rate,learning_rate,batch_size,seed,ok,val_accuracy,val_loss,"
           "train_accuracy,best_epoch,epochs_run,error\n";
    for (const auto& e : report.log) {
      out << e.index << ',' << e.config.gru_units << ',' << format_double(e.config.dropout_rate)
          << ',' << format_double(e.config.learning_rate) << ',' << e.config.batch_size << ','
          << e.config.seed << ',' << (e.ok ? 1 : 0) << ',' << format_double(e.val_accuracy) << ','
          << format_double(e.val_loss) << ',' << format_double(e.train_accuracy) << ','
          << e.best_epoch << ',' << e.epochs_run << ',' << csv_safe(e.error) << '\n';
    }
  }
  nlohmann::json board = nlohmann::json::array();
  for (std::size_t rank = 0; rank < report.leaderboard.size(); ++rank) {
    auto j = grid_entry_json(report.log[static_cast<std::size_t>(report.leaderboard[rank])]);
    j["rank"] = rank + 1;
    board.push_back(std::move(j));
  }
  write_json(io.output(artifact::grid_report),
             {{"configurations", report.log.size()},
              {"reported_headcount", report.reported_headcount},
              {"discrepancy_note", report.discrepancy_note},
              {"best", grid_entry_json(report.best())},
              {"leaderboard", board}});
}

void stage_baselines(const RunConfig& config, StageIo& io) {
  const ModelData d = load_model_data(io, config);
  const LoadedCheckpoint ckpt = load_checkpoint(io.input(artifact::checkpoint));
  const Matrix x_train = feature_matrix(d.train_balanced);
  const auto y_train = label_vector(d.train_balanced);
  const Matrix x_test = feature_matrix(d.parts.test);
  const auto y_test = label_vector(d.parts.test);

  const ForestModel rf = train_random_forest(x_train, y_train, config.baselines.forest);
  const GbtModel gbt = train_gbt(x_train, y_train, config.baselines.gbt);
  write_json(io.output(kRfModel), to_json(rf));
  write_json(io.output(kGbtModel), to_json(gbt));

  nlohmann::json networks = nlohmann::json::object();
  networks[to_string(ckpt.network.config().architecture)] =
      test_metrics(ckpt.network, d.parts.test).to_json();
  const auto width = static_cast<std::size_t>(config.train.input_width);
  const Dataset train_set = Dataset::from_rows(d.train_balanced, width);
  const Dataset val_set = Dataset::from_rows(d.parts.validation, width);
  for (Architecture arch : config.baselines.networks) {
    if (networks.contains(to_string(arch))) continue;
    ModelConfig mc = config.train;
    mc.architecture = arch;
    const TrainedModel m = train(mc, train_set, val_set);
    networks[to_string(arch)] = test_metrics(m.network, d.parts.test).to_json();
  }

  const LatentComparison latent =
      evaluate_latent_features(ckpt.network, d.train_balanced, d.parts.test, config.baselines.gbt);
  write_json(io.output(artifact::baselines),
             {{"random_forest", classification_metrics(y_test, rf.predict(x_test)).to_json()},
              {"gbt", classification_metrics(y_test, gbt.predict(x_test)).to_json()},
              {"networks", networks},
              {"latent_comparison", latent.to_json()},
              {"majority_rate", majority_rate(y_test)}});
}

void stage_explain(const RunConfig& config, StageIo& io) {
  const ModelData d = load_model_data(io, config);
  const LoadedCheckpoint ckpt = load_checkpoint(io.input(artifact::checkpoint));
  const PcaModel pca = pca_from_json(read_json(io.input(artifact::pca_model)));
  std::vector<FeatureRow> explained = d.parts.test;
  if (config.explain.max_samples > 0 && explained.size() > config.explain.max_samples) {
    explained.resize(config.explain.max_samples);
  }
  const AttributionReport report =
      explain_model(ckpt.network, pca, d.train_balanced, d.all, explained, config.explain.shapley);
  write_json(io.output(artifact::attributions), report.to_json());
  {
    auto out = io.output(artifact::correlation);
    out << "feature,pc,r\n";
    const Tensor& r = report.correlation.r;
    for (std::size_t u = 0; u < r.rows(); ++u) {
      for (std::size_t k = 0; k < r.cols(); ++k) {
        out << u << ",PC" << k + 1 << ',' << format_double(r(u, k)) << '\n';
      }
    }
  }
  {
    auto out = io.output(artifact::shapley_summary);
    out << "rank,feature,mean_abs_phi\n";
    const auto ranking = report.shapley_ranking();
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      out << i + 1 << ',' << ranking[i].first << ',' << format_double(ranking[i].second) << '\n';
    }
  }
}

void write_effort_csv(std::ofstream& out, const std::vector<EffortRecord>& records) {
  for (const auto& r : records) {
    out << r.participant_id << ',' << r.session << ',' << r.segment << ',' << to_string(r.source)
        << ',' << format_double(r.mean_hbo) << ',' << format_double(r.mean_score) << ','
        << format_double(r.p_z) << ',' << format_double(r.ce_z) << ',' << format_double(r.rne)
        << ',' << format_double(r.rni) << '\n';
  }
}

void stage_effort(const RunConfig& config, StageIo& io) {
  const auto& test_ids = config.prep.split.test_participants;
  std::vector<Trial> trials;
  for (auto& t : read_trials(io.input(artifact::trials))) {
    if (test_ids.count(t.participant_id)) trials.push_back(impute_missing(t));
  }
  if (trials.empty()) throw DataError("effort: no trials for the test participants");

  std::vector<double> actual, predicted;
  for (const auto& t : trials) actual.push_back(t.score);
  if (config.effort.predictions == PredictionSource::oracle) {
    predicted = actual;
  } else {
    std::ifstream in = open_in(io.input(artifact::predictions));
    std::map<std::pair<std::string, int>, int> by_key;
    for (const auto& p : read_predictions_csv(in)) by_key[{p.participant_id, p.question_id}] = p.predicted;
    for (const auto& t : trials) {
      const auto it = by_key.find({t.participant_id, t.question_id});
      if (it == by_key.end()) {
        throw DataError("effort: no prediction for " + t.participant_id + " question " +
                        std::to_string(t.question_id));
      }
      predicted.push_back(static_cast<double>(it->second));
    }
  }
  const auto act = compute_effort(aggregate_segments(trials, actual), EffortSource::actual,
                                  config.effort.mode);
  const auto pred = compute_effort(aggregate_segments(trials, predicted),
                                   EffortSource::predicted, config.effort.mode);
  const EffortComparison cmp = compare_effort(act, pred);
  {
    auto out = io.output(artifact::effort);
    out << "participant_id,session,segment,source,mean_hbo,mean_score,p_z,ce_z,rne,rni\n";
    write_effort_csv(out, act);
    write_effort_csv(out, pred);
  }
  nlohmann::json report = cmp.to_json();
  report["mode"] = to_string(config.effort.mode);
  report["predictions"] = to_string(config.effort.predictions);
  write_json(io.output(artifact::effort_report), report);
  {
    auto out = io.output(artifact::scatter);
    out << "metric,actual,predicted\n";
    for (const auto& p : cmp.scatter) {
      out << p.metric << ',' << format_double(p.actual) << ',' << format_double(p.predicted)
          << '\n';
    }
  }
}

using StageFn = void (*)(const RunConfig&, StageIo&);

const std::map<std::string, StageFn>& stage_table() {
  static const std::map<std::string, StageFn> t = {
      {"synth", stage_synth},       {"prep", stage_prep},         {"train", stage_train},
      {"gridsearch", stage_gridsearch}, {"baselines", stage_baselines}, {"explain", stage_explain},
      {"effort", stage_effort}};
  return t;
}

void copy_text(const std::string& from, std::ofstream& out) {
  std::ifstream in = open_in(from);
  out << in.rdbuf();
}

ModelConfig apply_grid_choice(ModelConfig base, const nlohmann::json& best) {
  base.gru_units = best.at("gru_units").get<int>();
  base.dropout_rate = best.at("dropout_rate").get<double>();
  base.learning_rate = best.at("learning_rate").get<double>();
  base.batch_size = best.at("batch_size").get<int>();
  base.seed = best.at("seed").get<std::uint64_t>();
  return base;
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"synth",     "prep",    "train", "gridsearch",
                                              "baselines", "explain", "effort"};
  return names;
}

void run_stage(const std::string& name, const RunConfig& config) {
  const auto& table = stage_table();
  const auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown stage '" + name + "'");
  StageIo io(config, name);
  const auto start = std::chrono::steady_clock::now();
  it->second(config, io);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  io.commit(elapsed.count());
}

void run_pipeline(const RunConfig& config) {
  run_stage("synth", config);
  run_stage("prep", config);
  if (config.grid.enabled) {
    run_stage("gridsearch", config);
    RunConfig tuned = config;
    const auto report = read_json((fs::path(config.out_dir) / artifact::grid_report).string());
    tuned.train = apply_grid_choice(config.train, report.at("best"));
    run_stage("train", tuned);
  } else {
    run_stage("train", config);
  }
  run_stage("baselines", config);
  run_stage("explain", config);
  run_stage("effort", config);
  std::ofstream out(fs::path(config.out_dir) / artifact::summary, std::ios::binary);
  out << build_summary(config.out_dir).dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write summary.json");
}

nlohmann::json build_summary(const std::string& out_dir) {
  const auto file = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
  const auto metrics = read_json(file(artifact::metrics));
  const auto baselines = read_json(file(artifact::baselines));
  const auto effort = read_json(file(artifact::effort_report));
  const auto& test = metrics.at("test");
  return {{"architecture", metrics.at("architecture")},
          {"test_accuracy", test.at("accuracy")},
          {"test_precision", test.at("precision")},
          {"test_recall", test.at("recall")},
          {"test_f1", test.at("f1")},
          {"majority_rate", metrics.at("majority_rate")},
          {"best_epoch", metrics.at("best_epoch")},
          {"raw_gbt_accuracy", baselines.at("latent_comparison").at("raw_accuracy")},
          {"latent_gbt_accuracy", baselines.at("latent_comparison").at("latent_accuracy")},
          {"latent_delta", baselines.at("latent_comparison").at("delta")},
          {"effort", effort}};
}

std::string emit_plot_data(const RunConfig& config, const std::string& kind) {
  const auto in_path = [&](const char* name) { return (fs::path(config.out_dir) / name).string(); };
  const std::string out_path = in_path(("plot_" + kind + ".csv").c_str());
  if (kind != "history" && kind != "heatmap" && kind != "shapley" && kind != "scatter") {
    throw ConfigError("unknown plot kind '" + kind + "' (history|heatmap|shapley|scatter)");
  }
  std::string source;
  if (kind == "history") source = in_path(artifact::history);
  if (kind == "heatmap") source = in_path(artifact::correlation);
  if (kind == "scatter") source = in_path(artifact::scatter);
  if (kind == "shapley") source = in_path(artifact::attributions);
  if (!fs::exists(source)) throw MissingArtifact(fs::path(source).filename().string());

  std::ofstream out(out_path, std::ios::binary);
  if (kind == "shapley") {
    const auto j = read_json(source);
    out << "participant_id,question_id,feature,phi\n";
    for (const auto& s : j.at("shapley")) {
      const auto phi = s.at("phi").get<std::vector<double>>();
      for (std::size_t f = 0; f < phi.size(); ++f) {
        out << s.at("participant_id").get<std::string>() << ',' << s.at("question_id").get<int>()
            << ',' << f << ',' << format_double(phi[f]) << '\n';
      }
    }
  } else {
    copy_text(source, out);
  }
  if (!out) throw std::runtime_error("cannot write " + out_path);
  return out_path;
}

nlohmann::json pca_to_json(const PcaModel& pca) {
  return {{"input_dim", pca.input_dim()},
          {"components", pca.components()},
          {"mean", pca.mean},
          {"scale", pca.scale},
          {"center", pca.center},
          {"loadings", pca.loadings.raw()},
          {"explained_variance", pca.explained_variance}};
}

PcaModel pca_from_json(const nlohmann::json& j) {
  PcaModel m;
  const auto d = j.at("input_dim").get<std::size_t>();
  const auto k = j.at("components").get<std::size_t>();
  m.mean = j.at("mean").get<std::vector<double>>();
  m.scale = j.at("scale").get<std::vector<double>>();
  m.center = j.at("center").get<std::vector<double>>();
  m.loadings = Tensor({d, k}, j.at("loadings").get<std::vector<double>>());
  m.explained_variance = j.at("explained_variance").get<std::vector<double>>();
  return m;
}

}  // namespace cogeffort
