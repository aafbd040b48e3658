#include "cogeffort/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cogeffort/error.hpp"
#include "cogeffort/rng.hpp"

namespace cogeffort {

namespace {

constexpr std::size_t kMaxRowsPerCall = std::size_t{1} << 16;

}  // namespace

RegionMap RegionMap::prefrontal() {
  return {{{"LPFC", {1, 2, 3, 4, 13, 14, 15, 16}}, {"VMPFC", {5, 6, 7, 8, 9, 10, 11, 12}}}};
}

void RegionMap::validate(std::size_t n_optodes) const {
  std::vector<int> seen(n_optodes + 1, 0);
  for (const auto& region : regions) {
    for (int o : region.optodes) {
      if (o < 1 || static_cast<std::size_t>(o) > n_optodes) {
        throw ConfigError("region " + region.name + ": optode " + std::to_string(o) +
                          " out of range 1.." + std::to_string(n_optodes));
      }
      if (seen[static_cast<std::size_t>(o)]++) {
        throw ConfigError("optode " + std::to_string(o) + " assigned to more than one region");
      }
    }
  }
  for (std::size_t o = 1; o <= n_optodes; ++o) {
    if (!seen[o]) throw ConfigError("optode " + std::to_string(o) + " not assigned to a region");
  }
}

RegionTable region_contribution(const Tensor& loadings, const RegionMap& map) {
  if (loadings.rank() != 2) throw ShapeError("region_contribution: loadings must be rank 2");
  map.validate(loadings.rows());
  RegionTable table;
  for (const auto& region : map.regions) table.regions.push_back(region.name);
  table.sums.assign(loadings.cols(), std::vector<double>(map.regions.size(), 0.0));
  for (std::size_t j = 0; j < loadings.cols(); ++j) {
    for (std::size_t r = 0; r < map.regions.size(); ++r) {
      for (int o : map.regions[r].optodes) {
        table.sums[j][r] += std::abs(loadings(static_cast<std::size_t>(o - 1), j));
      }
    }
  }
  return table;
}

RegionTable region_contribution(const PcaModel& pca, const RegionMap& map) {
  return region_contribution(pca.loadings, map);
}

CorrelationMatrix latent_pca_correlation(const Tensor& latents, const Tensor& pc_scores) {
  if (latents.rank() != 2 || pc_scores.rank() != 2 || latents.rows() != pc_scores.rows()) {
    throw ShapeError("latent_pca_correlation: expected (N, U) and (N, K) with equal N");
  }
  if (latents.rows() < 3) throw DataError("latent_pca_correlation: need at least 3 rows");
  const std::size_t n = latents.rows(), u = latents.cols(), k = pc_scores.cols();
  CorrelationMatrix out{Tensor({u, k}), {}};
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < u; ++i) {
    for (std::size_t s = 0; s < n; ++s) a[s] = latents(s, i);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t s = 0; s < n; ++s) b[s] = pc_scores(s, j);
      const auto p = pearson(a, b);
      out.r(i, j) = p.r;
      if (p.degenerate) out.degenerate.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<double> coalition_values(const BatchModel& model, std::span<const double> x,
                                     const Matrix& background) {
  const std::size_t u = x.size();
  if (u == 0) throw ShapeError("shapley: empty feature vector");
  if (u > kMaxExactShapleyFeatures) {
    throw ConfigError("shapley: exact enumeration supports at most " +
                      std::to_string(kMaxExactShapleyFeatures) + " features, got " +
                      std::to_string(u) + "; use a sampling estimator for wider inputs");
  }
  if (background.empty()) throw DataError("shapley: background set is empty");
  for (const auto& row : background) {
    if (row.size() != u) throw ShapeError("shapley: background width differs from x");
  }
  const std::size_t n_masks = std::size_t{1} << u, nb = background.size();
  const std::size_t masks_per_call = std::max<std::size_t>(1, kMaxRowsPerCall / nb);
  std::vector<double> values(n_masks, 0.0);
  for (std::size_t first = 0; first < n_masks; first += masks_per_call) {
    const std::size_t last = std::min(n_masks, first + masks_per_call);
    Tensor batch({(last - first) * nb, u});
    std::size_t row = 0;
    for (std::size_t mask = first; mask < last; ++mask) {
      for (const auto& bg : background) {
        for (std::size_t f = 0; f < u; ++f) batch(row, f) = (mask >> f) & 1U ? x[f] : bg[f];
        ++row;
      }
    }
    const std::vector<double> out = model(batch);
    if (out.size() != batch.rows()) throw ShapeError("shapley: model returned wrong row count");
    for (std::size_t mask = first; mask < last; ++mask) {
      double sum = 0.0;
      for (std::size_t b = 0; b < nb; ++b) sum += out[(mask - first) * nb + b];
      values[mask] = sum / static_cast<double>(nb);
    }
  }
  return values;
}

ShapleyResult shapley_from_values(const std::vector<double>& values, std::size_t n_features) {
  if (n_features == 0 || n_features > kMaxExactShapleyFeatures ||
      values.size() != (std::size_t{1} << n_features)) {
    throw ShapeError("shapley: coalition table size must be 2^U");
  }
  // weight[s] = s! (U - s - 1)! / U!
  std::vector<double> fact(n_features + 1, 1.0);
  for (std::size_t i = 1; i <= n_features; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> weight(n_features);
  for (std::size_t s = 0; s < n_features; ++s) {
    weight[s] = fact[s] * fact[n_features - s - 1] / fact[n_features];
  }
  ShapleyResult res;
  res.phi.assign(n_features, 0.0);
  res.base_value = values.front();
  res.prediction = values.back();
  for (std::size_t mask = 0; mask < values.size(); ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (std::size_t i = 0; i < n_features; ++i) {
      if ((mask >> i) & 1U) continue;
      res.phi[i] += weight[size] * (values[mask | (std::size_t{1} << i)] - values[mask]);
    }
  }
  return res;
}

ShapleyResult shapley_exact(const BatchModel& model, std::span<const double> x,
                            const Matrix& background) {
  return shapley_from_values(coalition_values(model, x, background), x.size());
}

Matrix subsample_background(const Matrix& rows, std::size_t cap, std::uint64_t seed) {
  if (cap == 0) throw ConfigError("background cap must be >= 1");
  if (rows.size() <= cap) return rows;
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  Matrix out;
  out.reserve(cap);
  for (std::size_t i : idx) out.push_back(rows[i]);
  return out;
}

std::vector<std::pair<std::size_t, double>> AttributionReport::shapley_ranking() const {
  if (shapley.empty()) return {};
  const std::size_t u = shapley.front().phi.size();
  std::vector<std::pair<std::size_t, double>> rank(u);
  for (std::size_t i = 0; i < u; ++i) {
    double sum = 0.0;
    for (const auto& s : shapley) sum += std::abs(s.phi[i]);
    rank[i] = {i, sum / static_cast<double>(shapley.size())};
  }
  std::stable_sort(rank.begin(), rank.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return rank;
}

nlohmann::json AttributionReport::to_json() const {
  nlohmann::json j;
  nlohmann::json region_rows = nlohmann::json::array();
  for (std::size_t c = 0; c < regions.sums.size(); ++c) {
    nlohmann::json row{{"component", "PC" + std::to_string(c + 1)}};
    for (std::size_t r = 0; r < regions.regions.size(); ++r) {
      row[regions.regions[r]] = regions.sums[c][r];
    }
    region_rows.push_back(std::move(row));
  }
  j["regions"] = region_rows;
  j["correlation"] = matrix_rows(correlation.r);
  nlohmann::json degenerate = nlohmann::json::array();
  for (const auto& [u, k] : correlation.degenerate) degenerate.push_back({u, k});
  j["correlation_degenerate"] = degenerate;
  j["base_value"] = base_value;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : shapley) {
    samples.push_back({{"participant_id", s.participant_id},
                       {"question_id", s.question_id},
                       {"prediction", s.prediction},
                       {"phi", s.phi}});
  }
  j["shapley"] = samples;
  return j;
}

AttributionReport explain_model(const Network& net, const PcaModel& pca,
                                const std::vector<FeatureRow>& background_rows,
                                const std::vector<FeatureRow>& correlation_rows,
                                const std::vector<FeatureRow>& explained_rows,
                                const ExplainConfig& config) {
  if (background_rows.empty()) throw DataError("explain: background rows are empty");
  const auto width = static_cast<std::size_t>(net.config().input_width);
  AttributionReport report;
  report.regions = region_contribution(pca, RegionMap::prefrontal());

  const Tensor corr_input = reshape_for_model(correlation_rows, width);
  report.correlation = latent_pca_correlation(net.extract_latent(corr_input),
                                              matrix_from_rows(flatten_batch(corr_input)));

  const Matrix background = subsample_background(
      matrix_rows(net.extract_latent(reshape_for_model(background_rows, width))),
      config.background_cap, config.seed);
  const BatchModel head = [&net](const Tensor& latents) { return net.head_probabilities(latents); };

  if (!explained_rows.empty()) {
    const Matrix latents = matrix_rows(net.extract_latent(reshape_for_model(explained_rows, width)));
    for (std::size_t i = 0; i < explained_rows.size(); ++i) {
      const ShapleyResult res = shapley_exact(head, latents[i], background);
      report.base_value = res.base_value;
      report.shapley.push_back(ShapleySample{explained_rows[i].participant_id,
                                             explained_rows[i].question_id, res.phi,
                                             res.prediction});
    }
  } else {
    const std::vector<double> out = head(matrix_from_rows(background));
    report.base_value =
        std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
  }
  return report;
}

}  // namespace cogeffort
