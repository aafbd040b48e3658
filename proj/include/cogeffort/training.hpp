#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cogeffort/dataprep.hpp"
#include "cogeffort/network.hpp"

namespace cogeffort {

struct Dataset {
  Tensor inputs;            // (n, 1, width)
  std::vector<int> labels;

  static Dataset from_rows(const std::vector<FeatureRow>& rows, std::size_t width = 12);
  std::size_t size() const { return labels.size(); }
  Dataset subset(const std::vector<std::size_t>& indices) const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

// Patience counts consecutive epochs whose validation loss fails to beat the
// best seen so far. The checkpoint tracks the highest validation accuracy;
// ties keep the earlier epoch.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  struct Decision {
    bool new_best_accuracy = false;
    bool stop = false;
  };
  Decision observe(const EpochStats& stats);

  int best_epoch() const { return best_epoch_; }
  double best_accuracy() const { return best_acc_; }

 private:
  int patience_;
  int wait_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  double best_acc_ = -std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
};

struct TrainedModel {
  Network network;  // parameters restored from best_epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;

  const ModelConfig& config() const { return network.config(); }
};

struct TrainHooks {
  // Called after the epoch metrics are computed and before early stopping
  // looks at them; may rewrite them (used to script validation curves).
  std::function<void(EpochStats&)> override_metrics;
  std::function<void(const EpochStats&, const Network&)> after_epoch;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const Network& net, const Dataset& data);

TrainedModel train(const ModelConfig& config, const Dataset& train_set,
                   const Dataset& validation_set, const TrainHooks& hooks = {});

// ---- Grid search ---------------------------------------------------------------

struct GridSpace {
  std::vector<int> gru_units{8, 16};
  std::vector<double> dropout_rates{0.1, 0.2, 0.4};
  std::vector<double> learning_rates{0.0005, 0.001, 0.003};
  std::vector<int> batch_sizes{1, 4, 8, 16, 32};

  std::size_t size() const {
    return gru_units.size() * dropout_rates.size() * learning_rates.size() * batch_sizes.size();
  }
};

/// Headcount quoted alongside the listed value sets, which enumerate to 90.
inline constexpr int kReportedGridHeadcount = 72;

/// Cartesian product, gru_units outermost and batch_size innermost. Each
/// config gets a seed derived from (base.seed, index).
std::vector<ModelConfig> enumerate_grid(const GridSpace& space, const ModelConfig& base);

struct GridEntry {
  int index = 0;
  ModelConfig config;
  bool ok = false;
  std::string error;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double train_accuracy = std::numeric_limits<double>::quiet_NaN();
  int best_epoch = 0;
  int epochs_run = 0;
};

struct GridReport {
  std::vector<GridEntry> log;       // enumeration order
  std::vector<int> leaderboard;     // indices, best validation accuracy first
  int reported_headcount = kReportedGridHeadcount;
  std::string discrepancy_note;

  const GridEntry& best() const { return log.at(static_cast<std::size_t>(leaderboard.front())); }
};

/// Trains every configuration; failed configurations are logged and ranked
/// last. `threads` > 1 trains configurations concurrently; the report does
/// not depend on it.
GridReport grid_search(const GridSpace& space, const ModelConfig& base, const Dataset& train_set,
                       const Dataset& validation_set, int threads = 1,
                       const TrainHooks& hooks = {});

std::vector<int> rank_grid(const std::vector<GridEntry>& log);

}  // namespace cogeffort
