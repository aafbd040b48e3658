// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cogeffort/checkpoint.hpp"
#include "cogeffort/csv_io.hpp"
#include "cogeffort/dataprep.hpp"
#include "cogeffort/evalcore.hpp"
#include "cogeffort/explain.hpp"
#include "cogeffort/pipeline.hpp"
#include "cogeffort/rng.hpp"
#include "cogeffort/synthgen.hpp"
#include "cogeffort/training.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace cogeffort;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed sub-checks for one criterion.
struct Criterion {
  int number;
  std::string title;
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

int report(const Criterion& c) {
  const bool pass = c.failures.empty();
  std::printf("%s criterion %d: %s", pass ? "PASS" : "FAIL", c.number, c.title.c_str());
  if (!c.detail.empty()) std::printf(" [%s]", c.detail.c_str());
  std::printf("\n");
  for (const auto& f : c.failures) std::printf("    failed: %s\n", f.c_str());
  std::fflush(stdout);
  return pass ? 0 : 1;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cogeffort_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix random_matrix(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, std::vector<double>(d));
  for (auto& r : m) {
    for (auto& v : r) v = rng.normal();
  }
  return m;
}

BatchModel rowwise(std::function<double(const std::vector<double>&)> f) {
  return [f](const Tensor& batch) {
    std::vector<double> out(batch.rows());
    std::vector<double> row(batch.cols());
    for (std::size_t i = 0; i < batch.rows(); ++i) {
      for (std::size_t j = 0; j < batch.cols(); ++j) row[j] = batch(i, j);
      out[i] = f(row);
    }
    return out;
  };
}

// ---------------------------------------------------------------------------------------

Criterion gradients() {
  Criterion c{1, "finite-difference gradient checks", {}, {}};
  const auto start = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  auto run = [&](const std::string& name, const std::function<gradcheck::Result()>& check) {
    for (int i = 0; i < 5; ++i) {
      const auto r = check();
      worst = std::max(worst, r.max_rel_error);
      c.expect(r.max_rel_error < gradcheck::kTolerance,
               name + " " + r.shape + " rel error " + fmt(r.max_rel_error));
    }
  };
  run("conv1d", [&] { return gradcheck::conv1d(rng); });
  run("batchnorm", [&] { return gradcheck::batchnorm(rng); });
  run("gru_step", [&] { return gradcheck::gru_step(rng); });
  run("lstm_step", [&] { return gradcheck::lstm_step(rng); });
  run("dense_softmax_xent", [&] { return gradcheck::dense_softmax_xent(rng); });
  run("gru_sequence", [&] { return gradcheck::recurrent_sequence(rng, nn::CellKind::gru); });
  run("lstm_sequence", [&] { return gradcheck::recurrent_sequence(rng, nn::CellKind::lstm); });
  for (Architecture a : {Architecture::cnn_gru, Architecture::cnn, Architecture::lstm,
                         Architecture::bilstm}) {
    for (BnPosition bn : {BnPosition::pre_recurrent, BnPosition::post_recurrent}) {
      run("model " + to_string(a) + "/" + to_string(bn),
          [&] { return gradcheck::full_model(rng, a, bn); });
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 30.0, "runtime " + fmt(elapsed) + " s");
  c.detail = "max rel error " + fmt(worst) + ", " + fmt(elapsed) + " s";
  return c;
}

// Grand-mean rule using each participant's true profile: pick the label whose
// noise-free grand mean is closer. Its accuracy is a lower bound on the
// Bayes accuracy.
double generative_rule_accuracy(const CohortSpec& spec, double* analytic_lower_bound) {
  CohortSpec clean = spec;
  clean.noise_sd = 0.0;
  clean.drift_slope_sd = 0.0;
  clean.missing_fraction = 0.0;
  const auto trials = generate_cohort(spec);
  auto grand_mean = [](const Trial& t) {
    double s = 0;
    for (double v : t.hbo.values()) s += v;
    return s / static_cast<double>(t.hbo.size());
  };
  std::size_t hits = 0;
  double expected_error = 0.0;
  const double sigma =
      spec.noise_sd / std::sqrt(static_cast<double>(spec.samples_per_trial) * spec.n_optodes);
  for (int p = 0; p < spec.n_participants; ++p) {
    Rng profile_rng(derive_seed(spec.seed, {0, static_cast<std::uint64_t>(p)}));
    const auto profile = draw_participant(spec, profile_rng);
    Rng unused(0);
    const double mu_right = grand_mean(generate_trial(clean, profile, true, unused));
    const double mu_wrong = grand_mean(generate_trial(clean, profile, false, unused));
    expected_error += 0.5 * std::erfc(std::abs(mu_wrong - mu_right) / (2 * sigma) / std::numbers::sqrt2);
    for (int q = 0; q < spec.n_questions; ++q) {
      const Trial& t = trials[static_cast<std::size_t>(p * spec.n_questions + q)];
      const double m = grand_mean(t);
      const int guess = std::abs(m - mu_right) <= std::abs(m - mu_wrong) ? 1 : 0;
      hits += guess == t.label;
    }
  }
  *analytic_lower_bound = 1.0 - expected_error / spec.n_participants;
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

Criterion learnability() {
  Criterion c{2, "CNN-GRU learns the default cohort", {}, {}};
  const auto start = Clock::now();
  const RunConfig cfg;
  double bayes_bound = 0.0;
  const double rule_acc = generative_rule_accuracy(cfg.synth, &bayes_bound);
  c.expect(bayes_bound >= 0.97, "Bayes accuracy bound " + fmt(bayes_bound));
  c.expect(rule_acc >= 0.97, "generative rule accuracy " + fmt(rule_acc));

  const auto data = prepare(generate_cohort(cfg.synth), cfg.prep);
  const auto model = train(cfg.train, Dataset::from_rows(data.train_balanced),
                           Dataset::from_rows(data.parts.validation));
  const Dataset test = Dataset::from_rows(data.parts.test);
  const double acc = evaluate(model.network, test).accuracy;
  double ones = 0;
  for (int y : test.labels) ones += y;
  const double majority = std::max(ones, test.size() - ones) / static_cast<double>(test.size());
  c.expect(acc >= 0.90, "test accuracy " + fmt(acc));
  c.expect(acc > majority, "accuracy " + fmt(acc) + " vs majority " + fmt(majority));
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 300.0, "runtime " + fmt(elapsed) + " s");
  c.detail = "Bayes bound " + fmt(bayes_bound) + ", accuracy " + fmt(acc) + ", majority " +
             fmt(majority) + ", " + fmt(elapsed) + " s";
  return c;
}

Criterion data_shapes() {
  Criterion c{3, "data-shape fidelity", {}, {}};
  const RunConfig cfg;
  const auto trials = generate_cohort(cfg.synth);
  c.expect(trials.size() == 256, "trial count " + std::to_string(trials.size()));
  for (const auto& t : trials) {
    if (t.hbo.rows() != 200 || t.hbo.cols() != 16) {
      c.expect(false, "trial shape");
      break;
    }
  }

  std::vector<FeatureRow> rows;
  for (const auto& t : trials) rows.push_back(feature_row_from_trial(impute_missing(t)));
  SplitSpec split;
  split.test_participants = {"P8", "P11", "P16"};
  split.validation_participants.clear();
  const auto parts = split_by_participant(rows, split);
  c.expect(parts.train.size() == 208 && parts.test.size() == 48,
           "split " + std::to_string(parts.train.size()) + "/" + std::to_string(parts.test.size()));

  Rng rng(3);
  std::vector<FeatureRow> imbalanced;
  for (int i = 0; i < 208; ++i) {
    FeatureRow r;
    r.participant_id = "P1";
    r.label = i < 134 ? 1 : 0;
    r.features.resize(12);
    for (auto& v : r.features) v = rng.normal() + r.label;
    imbalanced.push_back(r);
  }
  const auto balanced = smote(imbalanced, 5, 42);
  std::size_t ones = 0;
  for (const auto& r : balanced) ones += static_cast<std::size_t>(r.label);
  c.expect(ones == 134 && balanced.size() - ones == 134,
           "smote " + std::to_string(ones) + "/" + std::to_string(balanced.size() - ones));

  const auto data = prepare(trials, cfg.prep);
  std::ostringstream before;
  write_features_csv(before, data.parts.test);
  const auto rebalanced = smote(data.parts.train, cfg.prep.smote_k, 99);
  std::ostringstream after;
  write_features_csv(after, data.parts.test);
  c.expect(before.str() == after.str(), "test rows changed by balancing");
  for (const auto& r : data.train_balanced) {
    if (cfg.prep.split.test_participants.contains(r.participant_id)) {
      c.expect(false, "test participant in balanced training rows");
      break;
    }
  }
  c.detail = "256 x 200 x 16, 208/48, 134/134";
  return c;
}

Criterion pca() {
  Criterion c{4, "PCA against an independent eigensolver", {}, {}};
  Rng rng(4);
  double worst_orth = 0, worst_eig = 0, worst_rec = 0;
  for (int m = 0; m < 20; ++m) {
    const std::size_t n = 20 + rng.index(60);
    auto rows = random_matrix(n, 16, rng);
    for (auto& r : rows) {
      for (std::size_t j = 0; j < 16; ++j) r[j] *= 0.2 + 0.3 * static_cast<double>(j % 5);
      r[3] += 0.8 * r[0];
    }
    const auto model = pca_fit(rows, 16);
    for (std::size_t a = 0; a < 16; ++a) {
      for (std::size_t b = 0; b < 16; ++b) {
        double dot = 0;
        for (std::size_t j = 0; j < 16; ++j) dot += model.loadings(j, a) * model.loadings(j, b);
        worst_orth = std::max(worst_orth, std::abs(dot - (a == b ? 1.0 : 0.0)));
      }
    }
    const auto eig = oracle::jacobi_eigenvalues(oracle::sample_covariance(rows));
    for (std::size_t k = 0; k < 16; ++k) {
      worst_eig = std::max(worst_eig, std::abs(model.explained_variance[k] - eig[k]));
    }
    for (const auto& r : rows) {
      const auto back = pca_reconstruct(model, pca_project(model, r));
      for (std::size_t j = 0; j < 16; ++j) worst_rec = std::max(worst_rec, std::abs(back[j] - r[j]));
    }
  }
  c.expect(worst_orth < 1e-8, "orthonormality " + fmt(worst_orth));
  c.expect(worst_eig < 1e-8, "eigenvalues " + fmt(worst_eig));
  c.expect(worst_rec < 1e-8, "reconstruction " + fmt(worst_rec));
  c.detail = "orth " + fmt(worst_orth) + ", eig " + fmt(worst_eig) + ", recon " + fmt(worst_rec);
  return c;
}

Criterion shapley() {
  Criterion c{5, "exact Shapley axioms and oracles", {}, {}};
  Rng rng(5);
  double worst = 0;
  auto track = [&](double err, const std::string& what) {
    worst = std::max(worst, err);
    c.expect(err < 1e-10, what + " " + fmt(err));
  };
  for (int trial = 0; trial < 10; ++trial) {
    // Random two-layer tanh model over 8 features. Features 0 and 1 share
    // weights; feature 7 has none.
    const std::size_t u = 8, hidden = 5;
    Matrix w = random_matrix(hidden, u, rng);
    for (auto& row : w) {
      row[1] = row[0];
      row[7] = 0.0;
    }
    const auto v = random_matrix(1, hidden, rng)[0];
    const auto model = rowwise([&](const std::vector<double>& x) {
      double out = 0;
      for (std::size_t h = 0; h < hidden; ++h) {
        double a = 0;
        for (std::size_t j = 0; j < u; ++j) a += w[h][j] * x[j];
        out += v[h] * std::tanh(a);
      }
      return out;
    });
    Matrix bg = random_matrix(10, u, rng);
    const std::size_t half = bg.size();
    for (std::size_t i = 0; i < half; ++i) {
      auto swapped = bg[i];
      std::swap(swapped[0], swapped[1]);
      bg.push_back(swapped);
    }
    auto x = random_matrix(1, u, rng)[0];
    x[1] = x[0];
    const auto res = shapley_exact(model, x, bg);
    double total = 0;
    for (double p : res.phi) total += p;
    track(std::abs(total - (res.prediction - res.base_value)), "efficiency");
    track(std::abs(res.phi[0] - res.phi[1]), "symmetry");
    track(std::abs(res.phi[7]), "dummy");
  }

  for (int trial = 0; trial < 5; ++trial) {
    const auto coef = random_matrix(1, 6, rng)[0];
    const auto model = rowwise([&](const std::vector<double>& x) {
      return std::sin(coef[0] * x[0] + x[1] * x[2]) + coef[1] * x[3] * x[0] + coef[2] * x[2];
    });
    const Matrix bg = random_matrix(9, 4, rng);
    const auto x = random_matrix(1, 4, rng)[0];
    const auto values = coalition_values(model, x, bg);
    const auto expected = oracle::permutation_shapley([&](unsigned m) { return values[m]; }, 4);
    const auto res = shapley_from_values(values, 4);
    for (std::size_t i = 0; i < 4; ++i) track(std::abs(res.phi[i] - expected[i]), "permutation oracle");
  }

  for (int trial = 0; trial < 5; ++trial) {
    const auto wts = random_matrix(1, 8, rng)[0];
    const auto model = rowwise([&](const std::vector<double>& x) {
      double s = 0;
      for (std::size_t j = 0; j < 8; ++j) s += wts[j] * x[j];
      return s;
    });
    const Matrix bg = random_matrix(15, 8, rng);
    const auto x = random_matrix(1, 8, rng)[0];
    const auto res = shapley_exact(model, x, bg);
    for (std::size_t j = 0; j < 8; ++j) {
      double mean = 0;
      for (const auto& r : bg) mean += r[j];
      mean /= static_cast<double>(bg.size());
      track(std::abs(res.phi[j] - wts[j] * (x[j] - mean)), "linear closed form");
    }
  }
  c.detail = "max deviation " + fmt(worst);
  return c;
}

Criterion effort_identities(const fs::path& reference_dir) {
  Criterion c{6, "effort identities and oracle run", {}, {}};
  Rng rng(6);
  std::vector<SegmentAggregate> segs;
  for (int p = 0; p < 2500; ++p) {
    for (int s = 1; s <= 4; ++s) {
      segs.push_back({"R" + std::to_string(p), (s - 1) / 2 + 1, s, rng.normal(),
                      0.25 * static_cast<double>(rng.index(5))});
    }
  }
  double worst = 0;
  for (EffortMode mode : {EffortMode::literal, EffortMode::conventional}) {
    for (const auto& r : compute_effort(segs, EffortSource::actual, mode)) {
      worst = std::max(worst, std::abs(r.rne + r.rni - std::numbers::sqrt2 * r.p_z));
      worst = std::max(worst, std::abs(r.rni - r.rne - std::numbers::sqrt2 * r.ce_z));
    }
  }
  c.expect(worst < 1e-9, "identity deviation " + fmt(worst));

  const auto hand = zscore_effort(std::vector<double>{0.5, 1.0}, EffortMode::literal);
  c.expect(std::abs(hand.ce_z[0] - 1.0 / 6.0) < 1e-12, "ce_z[0] = " + fmt(hand.ce_z[0]));
  c.expect(std::abs(hand.ce_z[1] + 1.0 / 12.0) < 1e-12, "ce_z[1] = " + fmt(hand.ce_z[1]));

  const auto dir = scratch("oracle");
  for (const auto& e : fs::directory_iterator(reference_dir)) fs::copy(e.path(), dir / e.path().filename());
  RunConfig cfg;
  cfg.out_dir = dir.string();
  cfg.effort.predictions = PredictionSource::oracle;
  run_stage("effort", cfg);
  const auto pooled = nlohmann::json::parse(slurp(dir / artifact::effort_report)).at("pooled");
  const double rne_mae = pooled.at("rne_mae"), rni_mae = pooled.at("rni_mae");
  const double rne_r = pooled.at("rne_r"), rni_r = pooled.at("rni_r");
  c.expect(rne_mae == 0.0 && rni_mae == 0.0, "oracle MAE " + fmt(rne_mae) + "/" + fmt(rni_mae));
  c.expect(rne_r == 1.0 && rni_r == 1.0, "oracle r " + fmt(rne_r) + "/" + fmt(rni_r));
  fs::remove_all(dir);
  c.detail = "10000 records, max deviation " + fmt(worst) + ", oracle MAE 0 r 1";
  return c;
}

Criterion early_stopping() {
  Criterion c{7, "early stopping with patience 8", {}, {}};
  const RunConfig cfg;
  const auto data = prepare(generate_cohort(cfg.synth), cfg.prep);
  ModelConfig mc = cfg.train;
  c.expect(mc.patience == 8, "default patience " + std::to_string(mc.patience));
  // Loss improves through epoch 6 and then stalls for 8 epochs; accuracy
  // peaks at epoch 4 (ties later keep epoch 4).
  const std::vector<double> losses{0.9, 0.8, 0.7, 0.65, 0.6, 0.55, 0.56, 0.6, 0.58,
                                   0.57, 0.9, 0.55, 0.7, 0.6, 0.1, 0.1};
  const std::vector<double> accs{0.5, 0.6, 0.7, 0.9, 0.8, 0.85, 0.9, 0.9, 0.7,
                                 0.7, 0.7, 0.7, 0.7, 0.7, 0.95, 0.95};
  TrainHooks hooks;
  hooks.override_metrics = [&](EpochStats& s) {
    s.val_loss = losses[static_cast<std::size_t>(s.epoch - 1)];
    s.val_acc = accs[static_cast<std::size_t>(s.epoch - 1)];
  };
  ParamMap at_best;
  hooks.after_epoch = [&](const EpochStats& s, const Network& net) {
    if (s.epoch == 4) at_best = net.params();
  };
  const auto model = train(mc, Dataset::from_rows(data.train_balanced),
                           Dataset::from_rows(data.parts.validation), hooks);
  c.expect(model.history.size() == 14, "stopped after " + std::to_string(model.history.size()) + " epochs");
  c.expect(model.best_epoch == 4, "best epoch " + std::to_string(model.best_epoch));
  c.expect(model.network.params() == at_best, "restored parameters differ from epoch 4");

  std::stringstream ss;
  write_checkpoint(ss, model.network, model.best_epoch);
  const auto loaded = read_checkpoint(ss);
  c.expect(loaded.network.params() == at_best && loaded.best_epoch == 4,
           "checkpoint does not restore epoch 4");
  c.detail = "stopped at epoch " + std::to_string(model.history.size()) + ", restored epoch " +
             std::to_string(model.best_epoch);
  return c;
}

Criterion grid() {
  Criterion c{8, "grid enumeration, ranking and headcount note", {}, {}};
  const GridSpace space;
  const auto configs = enumerate_grid(space, ModelConfig{});
  c.expect(configs.size() == 90, "enumerated " + std::to_string(configs.size()));
  std::size_t i = 0;
  for (int u : {8, 16}) {
    for (double d : {0.1, 0.2, 0.4}) {
      for (double lr : {0.0005, 0.001, 0.003}) {
        for (int b : {1, 4, 8, 16, 32}) {
          const bool match = i < configs.size() && configs[i].gru_units == u &&
                             configs[i].dropout_rate == d && configs[i].learning_rate == lr &&
                             configs[i].batch_size == b;
          c.expect(match, "order mismatch at index " + std::to_string(i));
          ++i;
        }
      }
    }
  }

  // Tiny training sets keep all 90 runs cheap; the ranking contract is what matters.
  Rng rng(8);
  auto blobs = [&](std::size_t n) {
    Dataset d;
    d.inputs = Tensor({n, 1, 12});
    for (std::size_t k = 0; k < n; ++k) {
      d.labels.push_back(static_cast<int>(k % 2));
      for (std::size_t j = 0; j < 12; ++j) d.inputs(k, 0, j) = rng.normal() + (k % 2 ? 0.7 : -0.7);
    }
    return d;
  };
  const Dataset tr = blobs(24), va = blobs(8);
  ModelConfig base;
  base.max_epochs = 2;
  const auto rep = grid_search(space, base, tr, va, 1);
  c.expect(rep.log.size() == 90, "log size");
  c.expect(rep.leaderboard.size() == 90, "leaderboard size");
  bool sorted = true;
  for (std::size_t k = 1; k < rep.leaderboard.size(); ++k) {
    const auto& a = rep.log[static_cast<std::size_t>(rep.leaderboard[k - 1])];
    const auto& b = rep.log[static_cast<std::size_t>(rep.leaderboard[k])];
    if (a.ok != b.ok) {
      sorted = sorted && a.ok;
    } else if (!a.ok || a.val_accuracy == b.val_accuracy) {
      sorted = sorted && a.index < b.index;
    } else {
      sorted = sorted && a.val_accuracy > b.val_accuracy;
    }
  }
  c.expect(sorted, "leaderboard not sorted with index tie-breaks");
  const auto again = grid_search(space, base, tr, va, 2);
  c.expect(again.leaderboard == rep.leaderboard, "leaderboard differs across runs");
  c.expect(rep.reported_headcount == 72, "headcount");
  c.expect(rep.discrepancy_note.find("90") != std::string::npos &&
               rep.discrepancy_note.find("72") != std::string::npos,
           "discrepancy note: " + rep.discrepancy_note);
  c.detail = "90 configurations, note: " + rep.discrepancy_note;
  return c;
}

Criterion determinism(const fs::path& first) {
  Criterion c{9, "end-to-end determinism", {}, {}};
  const auto second = scratch("second");
  RunConfig cfg;
  cfg.out_dir = second.string();
  run_pipeline(cfg);
  for (const char* f : {artifact::summary, artifact::effort, artifact::checkpoint}) {
    const auto a = slurp(first / f), b = slurp(second / f);
    c.expect(!a.empty() && a == b, std::string(f) + " differs");
  }
  fs::remove_all(second);
  c.detail = "summary.json, effort.csv, model.ckpt identical";
  return c;
}

Criterion metrics() {
  Criterion c{10, "classification metrics", {}, {}};
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(1000);
    std::vector<int> t(n), p(n);
    for (std::size_t k = 0; k < n; ++k) {
      t[k] = rng.uniform() < 0.65;
      p[k] = rng.uniform() < 0.55;
    }
    const auto o = oracle::count_confusion(t, p);
    const auto m = classification_metrics(t, p);
    const bool counts = m.counts.tp == static_cast<std::size_t>(o.tp) &&
                        m.counts.fp == static_cast<std::size_t>(o.fp) &&
                        m.counts.tn == static_cast<std::size_t>(o.tn) &&
                        m.counts.fn == static_cast<std::size_t>(o.fn);
    const double acc = static_cast<double>(o.tp + o.tn) / static_cast<double>(n);
    const double prec = o.tp + o.fp ? static_cast<double>(o.tp) / (o.tp + o.fp) : 0.0;
    const double rec = o.tp + o.fn ? static_cast<double>(o.tp) / (o.tp + o.fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    const bool values = std::abs(m.accuracy - acc) < 1e-12 && std::abs(m.precision - prec) < 1e-12 &&
                        std::abs(m.recall - rec) < 1e-12 && std::abs(m.f1 - f1) < 1e-12;
    c.expect(counts && values, "random vector " + std::to_string(trial));
  }
  std::vector<int> y(256, 0);
  std::fill(y.begin(), y.begin() + 168, 1);
  const auto all_pos = classification_metrics(y, std::vector<int>(256, 1));
  c.expect(all_pos.precision == 168.0 / 256.0, "precision " + fmt(all_pos.precision));
  c.expect(all_pos.accuracy == 168.0 / 256.0, "accuracy " + fmt(all_pos.accuracy));
  c.expect(all_pos.recall == 1.0, "recall " + fmt(all_pos.recall));
  c.detail = "100 random vectors, all-positive 0.65625/1.0";
  return c;
}

template <typename F>
int guarded(int number, const std::string& title, F&& body) {
  try {
    return report(body());
  } catch (const std::exception& e) {
    Criterion c{number, title, {std::string("exception: ") + e.what()}, {}};
    return report(c);
  }
}

}  // namespace

int main() {
  int failures = 0;
  failures += guarded(1, "finite-difference gradient checks", gradients);
  failures += guarded(2, "CNN-GRU learns the default cohort", learnability);
  failures += guarded(3, "data-shape fidelity", data_shapes);
  failures += guarded(4, "PCA against an independent eigensolver", pca);
  failures += guarded(5, "exact Shapley axioms and oracles", shapley);

  const auto reference = scratch("reference");
  bool pipeline_ok = true;
  try {
    RunConfig cfg;
    cfg.out_dir = reference.string();
    run_pipeline(cfg);
  } catch (const std::exception& e) {
    std::printf("reference pipeline failed: %s\n", e.what());
    pipeline_ok = false;
  }
  failures += guarded(6, "effort identities and oracle run", [&] {
    if (!pipeline_ok) throw std::runtime_error("reference pipeline unavailable");
    return effort_identities(reference);
  });
  failures += guarded(7, "early stopping with patience 8", early_stopping);
  failures += guarded(8, "grid enumeration, ranking and headcount note", grid);
  failures += guarded(9, "end-to-end determinism", [&] {
    if (!pipeline_ok) throw std::runtime_error("reference pipeline unavailable");
    return determinism(reference);
  });
  failures += guarded(10, "classification metrics", metrics);
  fs::remove_all(reference);

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
