// Command-line driver: one subcommand per stage plus `pipeline` and `plotdata`.
//
// Exit status: 0 success, 1 validation error or missing upstream artifact,
// 2 runtime failure. Failures print one line on stderr:
//   cogeffort: error code=<n> kind=<kind> [file=<name>] message="<text>"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cogeffort/config.hpp"
#include "cogeffort/error.hpp"
#include "cogeffort/pipeline.hpp"

namespace {

std::string quoted(std::string s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return '"' + out + '"';
}

int fail(int code, const char* kind, const std::string& message, const std::string& file = {}) {
  std::cerr << "cogeffort: error code=" << code << " kind=" << kind;
  if (!file.empty()) std::cerr << " file=" << file;
  std::cerr << " message=" << quoted(message) << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cognitive-effort pipeline over fNIRS-style trials"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string predictions;
  std::string kind;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--out-dir", out_dir, "Artifact directory (overrides out_dir)");
  app.add_option("--seed", seed, "Master seed (overrides every section)");
  app.add_option("--predictions", predictions, "Effort predictions: model or oracle")
      ->check(CLI::IsMember({"model", "oracle"}));

  for (const auto& stage : cogeffort::stage_names()) {
    app.add_subcommand(stage, "Run the " + stage + " stage");
  }
  app.add_subcommand("pipeline", "Run every stage and write summary.json");
  auto* plot = app.add_subcommand("plotdata", "Write plot-ready CSV from existing artifacts");
  plot->add_option("--kind", kind, "history, heatmap, shapley or scatter")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(1, "usage", e.what());
  }

  try {
    cogeffort::RunConfig config =
        config_path.empty() ? cogeffort::RunConfig{} : cogeffort::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed) config.set_seed(*seed);
    if (!predictions.empty()) {
      config.effort.predictions = cogeffort::parse_prediction_source(predictions);
    }
    config.validate();

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "pipeline") {
      cogeffort::run_pipeline(config);
      std::cout << "pipeline complete: " << config.out_dir << "/" << cogeffort::artifact::summary
                << '\n';
    } else if (command == "plotdata") {
      std::cout << cogeffort::emit_plot_data(config, kind) << '\n';
    } else {
      cogeffort::run_stage(command, config);
      std::cout << command << " complete: " << config.out_dir << '\n';
    }
    return 0;
  } catch (const cogeffort::MissingArtifact& e) {
    return fail(1, "missing_artifact", e.what(), e.file());
  } catch (const cogeffort::ConfigError& e) {
    return fail(1, "config", e.what());
  } catch (const cogeffort::ShapeError& e) {
    return fail(1, "shape", e.what());
  } catch (const cogeffort::DataError& e) {
    return fail(1, "data", e.what());
  } catch (const cogeffort::TrainingError& e) {
    return fail(2, "training", e.what());
  } catch (const std::exception& e) {
    return fail(2, "runtime", e.what());
  }
}
