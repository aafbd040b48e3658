#include "cogeffort/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "cogeffort/error.hpp"
#include "cogeffort/optim.hpp"

namespace cogeffort {

Dataset Dataset::from_rows(const std::vector<FeatureRow>& rows, std::size_t width) {
  Dataset d;
  d.inputs = reshape_for_model(rows, width);
  d.labels.reserve(rows.size());
  for (const auto& r : rows) d.labels.push_back(r.label);
  return d;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  const std::size_t w = inputs.dim(2);
  Dataset d;
  d.inputs = Tensor({indices.size(), 1, w});
  d.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    for (std::size_t j = 0; j < w; ++j) d.inputs(i, 0, j) = inputs(src, 0, j);
    d.labels.push_back(labels[src]);
  }
  return d;
}

EarlyStopping::Decision EarlyStopping::observe(const EpochStats& stats) {
  Decision d;
  if (stats.val_acc > best_acc_) {
    best_acc_ = stats.val_acc;
    best_epoch_ = stats.epoch;
    d.new_best_accuracy = true;
  }
  if (stats.val_loss < best_loss_) {
    best_loss_ = stats.val_loss;
    wait_ = 0;
  } else {
    ++wait_;
  }
  d.stop = wait_ >= patience_;
  return d;
}

Evaluation evaluate(const Network& net, const Dataset& data) {
  if (data.size() == 0) throw DataError("evaluate: empty dataset");
  const Tensor p = net.predict_proba(data.inputs);
  Evaluation e;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int y = data.labels[i];
    e.loss -= std::log(std::max(p(i, static_cast<std::size_t>(y)), nn::kLogClamp));
    const int pred = p(i, 1) > p(i, 0) ? 1 : 0;
    if (pred == y) ++correct;
  }
  e.loss /= static_cast<double>(data.size());
  e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return e;
}

namespace {

// Consecutive chunks of `order`. A trailing single-sample chunk is folded
// into the previous one so batch norm always sees >= 2 rows.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   std::size_t batch_size, bool fold_singleton) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (fold_singleton && batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

}  // namespace

TrainedModel train(const ModelConfig& config, const Dataset& train_set,
                   const Dataset& validation_set, const TrainHooks& hooks) {
  config.validate();
  if (train_set.size() == 0 || validation_set.size() == 0) {
    throw DataError("train: training and validation sets must be non-empty");
  }
  for (const auto* set : {&train_set, &validation_set}) {
    for (int y : set->labels) {
      if (y != 0 && y != 1) throw DataError("train: labels must be 0 or 1");
    }
  }
  if (config.batch_size == 1 && !config.bn_identity_fallback) {
    throw ConfigError(
        "batch_size 1 is incompatible with batch normalisation in training; use batch_size "
        ">= 2 or enable bn_identity_fallback");
  }

  Network net(config);
  AdamState adam;
  const std::vector<std::string> trainable = net.trainable_names();
  EarlyStopping stopper(config.patience);
  TrainedModel result{net, {}, 0};
  ParamMap best_params = net.params();

  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, {5, static_cast<std::uint64_t>(epoch)}));
    rng.shuffle(order.begin(), order.end());
    const auto batches = make_batches(order, static_cast<std::size_t>(config.batch_size),
                                      !config.bn_identity_fallback);
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const Dataset batch = train_set.subset(batches[bi]);
      auto lg = net.loss_and_gradients(batch.inputs, batch.labels, rng);
      if (!std::isfinite(lg.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(bi + 1));
      }
      adam_step(net.params(), lg.grads, adam, config.learning_rate, trainable);
    }

    EpochStats stats;
    stats.epoch = epoch;
    const Evaluation tr = evaluate(net, train_set);
    const Evaluation va = evaluate(net, validation_set);
    stats.train_loss = tr.loss;
    stats.train_acc = tr.accuracy;
    stats.val_loss = va.loss;
    stats.val_acc = va.accuracy;
    if (hooks.override_metrics) hooks.override_metrics(stats);
    result.history.push_back(stats);

    const auto decision = stopper.observe(stats);
    if (decision.new_best_accuracy) best_params = net.params();
    if (hooks.after_epoch) hooks.after_epoch(stats, net);
    if (decision.stop) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.network = Network(config, std::move(best_params));
  return result;
}

std::vector<ModelConfig> enumerate_grid(const GridSpace& space, const ModelConfig& base) {
  if (space.size() == 0) throw ConfigError("grid search space is empty");
  std::vector<ModelConfig> configs;
  configs.reserve(space.size());
  for (int units : space.gru_units) {
    for (double dropout : space.dropout_rates) {
      for (double lr : space.learning_rates) {
        for (int batch : space.batch_sizes) {
          ModelConfig c = base;
          c.gru_units = units;
          c.dropout_rate = dropout;
          c.learning_rate = lr;
          c.batch_size = batch;
          c.seed = derive_seed(base.seed, {4, static_cast<std::uint64_t>(configs.size())});
          configs.push_back(c);
        }
      }
    }
  }
  return configs;
}

std::vector<int> rank_grid(const std::vector<GridEntry>& log) {
  std::vector<int> idx(log.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const auto& ea = log[static_cast<std::size_t>(a)];
    const auto& eb = log[static_cast<std::size_t>(b)];
    if (ea.ok != eb.ok) return ea.ok;
    if (!ea.ok) return a < b;
    if (ea.val_accuracy != eb.val_accuracy) return ea.val_accuracy > eb.val_accuracy;
    return a < b;
  });
  return idx;
}

GridReport grid_search(const GridSpace& space, const ModelConfig& base, const Dataset& train_set,
                       const Dataset& validation_set, int threads, const TrainHooks& hooks) {
  const auto configs = enumerate_grid(space, base);
  GridReport report;
  report.log.resize(configs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      GridEntry& e = report.log[i];
      e.index = static_cast<int>(i);
      e.config = configs[i];
      try {
        TrainedModel m = train(configs[i], train_set, validation_set, hooks);
        const EpochStats& best = m.history.at(static_cast<std::size_t>(m.best_epoch - 1));
        e.ok = true;
        e.val_accuracy = best.val_acc;
        e.val_loss = best.val_loss;
        e.train_accuracy = best.train_acc;
        e.best_epoch = m.best_epoch;
        e.epochs_run = static_cast<int>(m.history.size());
      } catch (const std::exception& ex) {
        e.ok = false;
        e.error = ex.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(configs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  report.leaderboard = rank_grid(report.log);
  report.discrepancy_note =
      "listed value sets enumerate " + std::to_string(configs.size()) +
      " configurations; the quoted headcount is " + std::to_string(kReportedGridHeadcount) +
      " (all " + std::to_string(configs.size()) + " were trained)";
  return report;
}

}  // namespace cogeffort
