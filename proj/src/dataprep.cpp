#include "cogeffort/dataprep.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numeric>

#include "cogeffort/error.hpp"
#include "cogeffort/rng.hpp"

namespace cogeffort {

Trial impute_missing(const Trial& trial) {
  Trial out = trial;
  const std::size_t n = trial.hbo.rows(), m = trial.hbo.cols();
  for (std::size_t o = 0; o < m; ++o) {
    double sum = 0.0;
    std::size_t finite = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = trial.hbo(t, o);
      if (std::isfinite(v)) {
        sum += v;
        ++finite;
      }
    }
    if (finite == 0) throw AllMissingColumn(static_cast<int>(o) + 1);
    if (finite == n) continue;
    const double fill = sum / static_cast<double>(finite);
    for (std::size_t t = 0; t < n; ++t) {
      if (!std::isfinite(out.hbo(t, o))) out.hbo(t, o) = fill;
    }
  }
  return out;
}

std::vector<double> clean_series(std::span<const double> series, int ma_window) {
  const auto n = static_cast<int>(series.size());
  if (ma_window < 1 || ma_window % 2 == 0 || ma_window > n) {
    throw ConfigError("ma_window must be odd, >= 1 and <= series length (got " +
                      std::to_string(ma_window) + ")");
  }
  // Least-squares line on t = 0..n-1.
  double mean_t = 0.0, mean_y = 0.0;
  for (int t = 0; t < n; ++t) {
    mean_t += t;
    mean_y += series[t];
  }
  mean_t /= n;
  mean_y /= n;
  double sxy = 0.0, sxx = 0.0;
  for (int t = 0; t < n; ++t) {
    sxy += (t - mean_t) * (series[t] - mean_y);
    sxx += (t - mean_t) * (t - mean_t);
  }
  const double slope = sxx > 0 ? sxy / sxx : 0.0;
  std::vector<double> detrended(n);
  for (int t = 0; t < n; ++t) {
    // residual + mean == y - slope * (t - mean_t)
    detrended[t] = series[t] - slope * (t - mean_t);
  }
  if (ma_window == 1) return detrended;
  const int half = ma_window / 2;
  std::vector<double> out(n);
  for (int t = 0; t < n; ++t) {
    const int lo = std::max(0, t - half), hi = std::min(n - 1, t + half);
    double s = 0.0;
    for (int i = lo; i <= hi; ++i) s += detrended[i];
    out[t] = s / (hi - lo + 1);
  }
  return out;
}

Trial clean_trial(const Trial& trial, int ma_window) {
  Trial out = trial;
  const std::size_t n = trial.hbo.rows(), m = trial.hbo.cols();
  std::vector<double> column(n);
  for (std::size_t o = 0; o < m; ++o) {
    for (std::size_t t = 0; t < n; ++t) column[t] = trial.hbo(t, o);
    const auto cleaned = clean_series(column, ma_window);
    for (std::size_t t = 0; t < n; ++t) out.hbo(t, o) = cleaned[t];
  }
  return out;
}

std::vector<double> aggregate_trial(const Trial& trial) {
  if (!trial.hbo.all_finite()) {
    throw DataError("aggregate_trial: non-finite ΔHbO in " + trial.participant_id +
                    " q" + std::to_string(trial.question_id) + " (impute first)");
  }
  const std::size_t n = trial.hbo.rows(), m = trial.hbo.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t o = 0; o < m; ++o) out[o] += trial.hbo(t, o);
  }
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

FeatureRow feature_row_from_trial(const Trial& trial) {
  FeatureRow row;
  row.participant_id = trial.participant_id;
  row.question_id = trial.question_id;
  row.session = trial.session;
  row.segment = trial.segment;
  row.features = aggregate_trial(trial);
  row.label = trial.label;
  return row;
}

std::vector<double> apply_standardization(std::span<const double> row,
                                          std::span<const double> mean,
                                          std::span<const double> scale) {
  if (row.size() != mean.size() || row.size() != scale.size()) {
    throw ShapeError("standardization: row width " + std::to_string(row.size()) +
                     " vs statistics width " + std::to_string(mean.size()));
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = scale[j] < kMinScale ? 0.0 : (row[j] - mean[j]) / scale[j];
  }
  return out;
}

Standardized standardize(const std::vector<FeatureRow>& train_rows,
                         const std::vector<FeatureRow>& other_rows) {
  if (train_rows.empty()) throw DataError("standardize: no training rows");
  const std::size_t d = train_rows.front().features.size();
  Standardized out;
  out.mean.assign(d, 0.0);
  out.scale.assign(d, 0.0);
  for (const auto& r : train_rows) {
    if (r.features.size() != d) throw ShapeError("standardize: ragged feature rows");
    for (std::size_t j = 0; j < d; ++j) out.mean[j] += r.features[j];
  }
  const double n = static_cast<double>(train_rows.size());
  for (auto& v : out.mean) v /= n;
  for (const auto& r : train_rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = r.features[j] - out.mean[j];
      out.scale[j] += dev * dev;
    }
  }
  for (auto& v : out.scale) v = std::sqrt(v / n);

  auto transform = [&](const std::vector<FeatureRow>& rows) {
    std::vector<FeatureRow> res = rows;
    for (auto& r : res) r.features = apply_standardization(r.features, out.mean, out.scale);
    return res;
  };
  out.train = transform(train_rows);
  out.other = transform(other_rows);
  return out;
}

PcaModel pca_fit(const std::vector<std::vector<double>>& rows, int k) {
  if (rows.empty()) throw DataError("pca_fit: no rows");
  const std::size_t d = rows.front().size();
  if (k < 1 || static_cast<std::size_t>(k) > d) {
    throw ConfigError("pca_fit: k must lie in [1, " + std::to_string(d) + "]");
  }
  if (rows.size() < std::max<std::size_t>(static_cast<std::size_t>(k), 2)) {
    throw DataError("pca_fit: need at least max(k, 2) rows");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (rows[i].size() != d) throw ShapeError("pca_fit: ragged rows");
    for (std::size_t j = 0; j < d; ++j) x(i, static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("pca_fit: eigensolver failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();   // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  PcaModel model;
  model.center.assign(mu.data(), mu.data() + d);
  model.loadings = Tensor({d, static_cast<std::size_t>(k)});
  model.explained_variance.resize(k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = static_cast<Eigen::Index>(d) - 1 - c;
    model.explained_variance[c] = std::max(0.0, evals(src));
    Eigen::VectorXd v = evecs.col(src);
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j) {
      if (std::abs(v(j)) > std::abs(v(arg))) arg = j;
    }
    if (v(arg) < 0) v = -v;
    for (std::size_t j = 0; j < d; ++j) {
      model.loadings(j, static_cast<std::size_t>(c)) = v(static_cast<Eigen::Index>(j));
    }
  }
  return model;
}

std::vector<double> pca_project(const PcaModel& model, std::span<const double> row) {
  const std::size_t d = model.input_dim(), k = model.components();
  if (row.size() != d) {
    throw ShapeError("pca_project: expected " + std::to_string(d) + " features, got " +
                     std::to_string(row.size()));
  }
  std::vector<double> scores(k, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double centered = row[j] - model.center[j];
    for (std::size_t c = 0; c < k; ++c) scores[c] += model.loadings(j, c) * centered;
  }
  return scores;
}

std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> scores) {
  const std::size_t d = model.input_dim(), k = model.components();
  if (scores.size() != k) throw ShapeError("pca_reconstruct: wrong score width");
  std::vector<double> row(model.center);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t c = 0; c < k; ++c) row[j] += model.loadings(j, c) * scores[c];
  }
  return row;
}

Partition split_by_participant(const std::vector<FeatureRow>& rows, const SplitSpec& spec) {
  std::set<std::string> present;
  for (const auto& r : rows) present.insert(r.participant_id);
  for (const auto* group : {&spec.test_participants, &spec.validation_participants}) {
    for (const auto& id : *group) {
      if (!present.contains(id)) throw ConfigError("unknown participant id: " + id);
    }
  }
  for (const auto& id : spec.test_participants) {
    if (spec.validation_participants.contains(id)) {
      throw ConfigError("participant " + id + " is in both test and validation sets");
    }
  }
  Partition parts;
  for (const auto& r : rows) {
    if (spec.test_participants.contains(r.participant_id)) {
      parts.test.push_back(r);
    } else if (spec.validation_participants.contains(r.participant_id)) {
      parts.validation.push_back(r);
    } else {
      parts.train.push_back(r);
    }
  }
  return parts;
}

std::vector<FeatureRow> smote(const std::vector<FeatureRow>& train_rows, int k_neighbors,
                              std::uint64_t seed) {
  if (k_neighbors < 1) throw ConfigError("smote: k_neighbors must be >= 1");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    const int label = train_rows[i].label;
    if (label != 0 && label != 1) throw DataError("smote: labels must be 0 or 1");
    by_class[label].push_back(i);
  }
  if (by_class[0].size() == by_class[1].size()) return train_rows;
  const int minority = by_class[0].size() < by_class[1].size() ? 0 : 1;
  const auto& members = by_class[minority];
  const std::size_t needed = by_class[1 - minority].size() - members.size();
  if (members.size() < 2) throw DataError("smote: minority class needs at least 2 rows");

  int k = k_neighbors;
  if (static_cast<std::size_t>(k) > members.size() - 1) {
    k = static_cast<int>(members.size() - 1);
    std::clog << "warning: smote k_neighbors clamped from " << k_neighbors << " to " << k
              << '\n';
  }

  auto dist2 = [&](std::size_t a, std::size_t b) {
    const auto& x = train_rows[a].features;
    const auto& y = train_rows[b].features;
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
    return s;
  };
  std::vector<std::vector<std::size_t>> neighbors(members.size());
  for (std::size_t a = 0; a < members.size(); ++a) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t b = 0; b < members.size(); ++b) {
      if (a != b) cand.emplace_back(dist2(members[a], members[b]), b);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int j = 0; j < k; ++j) neighbors[a].push_back(cand[j].second);
  }

  std::vector<FeatureRow> out = train_rows;
  out.reserve(train_rows.size() + needed);
  Rng rng(seed);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t a = rng.index(members.size());
    const std::size_t b = neighbors[a][rng.index(static_cast<std::size_t>(k))];
    const double u = rng.uniform();
    const auto& x = train_rows[members[a]].features;
    const auto& y = train_rows[members[b]].features;
    FeatureRow row;
    row.participant_id = kSyntheticParticipant;
    row.label = minority;
    row.synthetic = true;
    row.features.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) row.features[j] = x[j] + u * (y[j] - x[j]);
    out.push_back(std::move(row));
  }
  return out;
}

Tensor reshape_for_model(const std::vector<FeatureRow>& rows, std::size_t width) {
  Tensor batch({rows.size(), 1, width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].features.size() != width) {
      throw ShapeError("reshape_for_model: row " + std::to_string(i) + " has " +
                       std::to_string(rows[i].features.size()) + " features, expected " +
                       std::to_string(width));
    }
    std::copy(rows[i].features.begin(), rows[i].features.end(),
              batch.raw().begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  return batch;
}

std::vector<std::vector<double>> flatten_batch(const Tensor& batch) {
  if (batch.rank() != 3 || batch.dim(1) != 1) {
    throw ShapeError("flatten_batch: expected (n, 1, w), got " + shape_string(batch.shape()));
  }
  const std::size_t n = batch.dim(0), w = batch.dim(2);
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto first = batch.raw().begin() + static_cast<std::ptrdiff_t>(i * w);
    rows[i].assign(first, first + static_cast<std::ptrdiff_t>(w));
  }
  return rows;
}

PreparedData prepare(const std::vector<Trial>& trials, const PrepConfig& config) {
  std::vector<FeatureRow> rows;
  rows.reserve(trials.size());
  for (const auto& trial : trials) {
    Trial clean = impute_missing(trial);
    if (config.ma_window > 0) clean = clean_trial(clean, config.ma_window);
    rows.push_back(feature_row_from_trial(clean));
  }
  Partition raw = split_by_participant(rows, config.split);
  if (raw.train.empty()) throw DataError("prepare: training partition is empty");

  std::vector<FeatureRow> others = raw.validation;
  others.insert(others.end(), raw.test.begin(), raw.test.end());
  Standardized z = standardize(raw.train, others);

  std::vector<std::vector<double>> train_matrix;
  for (const auto& r : z.train) train_matrix.push_back(r.features);
  PreparedData out;
  out.pca = pca_fit(train_matrix, config.pca_components);
  out.pca.mean = z.mean;
  out.pca.scale = z.scale;

  auto project = [&](std::vector<FeatureRow> rs) {
    for (auto& r : rs) r.features = pca_project(out.pca, r.features);
    return rs;
  };
  out.parts.train = project(z.train);
  std::vector<FeatureRow> projected_others = project(z.other);
  const auto n_val = static_cast<std::ptrdiff_t>(raw.validation.size());
  out.parts.validation.assign(projected_others.begin(), projected_others.begin() + n_val);
  out.parts.test.assign(projected_others.begin() + n_val, projected_others.end());
  out.all = rows;
  for (auto& r : out.all) {
    r.features = pca_project(out.pca, apply_standardization(r.features, z.mean, z.scale));
  }
  out.train_balanced = smote(out.parts.train, config.smote_k, derive_seed(config.seed, {2}));
  return out;
}

}  // namespace cogeffort
