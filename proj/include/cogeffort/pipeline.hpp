#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cogeffort/config.hpp"
#include "cogeffort/dataprep.hpp"

namespace cogeffort {

// Artifact names inside the output directory.
namespace artifact {
inline constexpr const char* trials = "trials.csv";
inline constexpr const char* features = "features.csv";
inline constexpr const char* features_train = "features_train.csv";
inline constexpr const char* pca_model = "pca_model.json";
inline constexpr const char* checkpoint = "model.ckpt";
inline constexpr const char* history = "history.csv";
inline constexpr const char* predictions = "predictions.csv";
inline constexpr const char* metrics = "metrics.json";
inline constexpr const char* grid_log = "grid_log.csv";
inline constexpr const char* grid_report = "grid_report.json";
inline constexpr const char* baselines = "baselines.json";
inline constexpr const char* attributions = "attributions.json";
inline constexpr const char* correlation = "correlation.csv";
inline constexpr const char* shapley_summary = "shapley_summary.csv";
inline constexpr const char* effort = "effort.csv";
inline constexpr const char* effort_report = "effort_report.json";
inline constexpr const char* scatter = "scatter.csv";
inline constexpr const char* summary = "summary.json";
}  // namespace artifact

/// synth, prep, train, gridsearch, baselines, explain, effort.
const std::vector<std::string>& stage_names();

/// Runs one stage in config.out_dir and records it in the manifest. Throws
/// MissingArtifact when an upstream file is absent.
void run_stage(const std::string& name, const RunConfig& config);

/// synth -> prep -> train (gridsearch when [grid] enabled) -> baselines ->
/// explain -> effort, then writes summary.json.
void run_pipeline(const RunConfig& config);

/// Writes plot_<kind>.csv for kind in {history, heatmap, shapley, scatter}
/// and returns its path.
std::string emit_plot_data(const RunConfig& config, const std::string& kind);

nlohmann::json pca_to_json(const PcaModel& pca);
PcaModel pca_from_json(const nlohmann::json& j);

/// Test-set metrics, latent-vs-raw accuracies and the effort error table
/// gathered from existing artifacts.
nlohmann::json build_summary(const std::string& out_dir);

}  // namespace cogeffort
