#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogeffort/dataprep.hpp"
#include "cogeffort/network.hpp"
#include "cogeffort/stats.hpp"
#include "cogeffort/tensor.hpp"

namespace cogeffort {

struct Region {
  std::string name;
  std::vector<int> optodes;  // 1-based
};

struct RegionMap {
  std::vector<Region> regions;

  /// LPFC = optodes 1-4 and 13-16, VMPFC = optodes 5-12.
  static RegionMap prefrontal();
  /// Regions must be disjoint and cover optodes 1..n_optodes.
  void validate(std::size_t n_optodes) const;
};

// sums[j][r] = sum over optodes o in region r of |loading(o, j)|.
struct RegionTable {
  std::vector<std::string> regions;
  std::vector<std::vector<double>> sums;
};

RegionTable region_contribution(const Tensor& loadings, const RegionMap& map);
RegionTable region_contribution(const PcaModel& pca, const RegionMap& map);

struct CorrelationMatrix {
  Tensor r;  // (latent units, components)
  std::vector<std::pair<std::size_t, std::size_t>> degenerate;
};

/// Pearson r between every latent column and every PC-score column.
CorrelationMatrix latent_pca_correlation(const Tensor& latents, const Tensor& pc_scores);

// ---- Shapley values -----------------------------------------------------------------

/// Maps an (N, U) matrix to N scalar outputs.
using BatchModel = std::function<std::vector<double>(const Tensor&)>;

inline constexpr std::size_t kMaxExactShapleyFeatures = 16;
inline constexpr std::size_t kDefaultBackgroundCap = 128;

struct ShapleyResult {
  std::vector<double> phi;
  double base_value = 0.0;  // v(empty set)
  double prediction = 0.0;  // v(all features) = f(x)
};

/// v(S) for every coalition S encoded as a bitmask over the U features:
/// the mean model output over background rows with the features in S
/// replaced by x's values.
std::vector<double> coalition_values(const BatchModel& model, std::span<const double> x,
                                     const Matrix& background);

/// Exact Shapley values by enumerating all 2^U coalitions.
ShapleyResult shapley_exact(const BatchModel& model, std::span<const double> x,
                            const Matrix& background);
/// Same, from precomputed coalition values.
ShapleyResult shapley_from_values(const std::vector<double>& values, std::size_t n_features);

/// Seeded subsample without replacement; rows keep their original order.
Matrix subsample_background(const Matrix& rows, std::size_t cap, std::uint64_t seed);

// ---- Full report ---------------------------------------------------------------------

struct ExplainConfig {
  std::size_t background_cap = kDefaultBackgroundCap;
  std::uint64_t seed = 42;
};

struct ShapleySample {
  std::string participant_id;
  int question_id = 0;
  std::vector<double> phi;
  double prediction = 0.0;
};

struct AttributionReport {
  RegionTable regions;
  CorrelationMatrix correlation;
  double base_value = 0.0;
  std::vector<ShapleySample> shapley;

  /// Features ordered by mean |phi| (descending, ties by index).
  std::vector<std::pair<std::size_t, double>> shapley_ranking() const;
  nlohmann::json to_json() const;
};

/// Regions from the PCA loadings, correlations between latents and PC
/// scores over correlation_rows, and Shapley values of the head's class-1
/// probability for each explained row, with background latents drawn from
/// background_rows.
AttributionReport explain_model(const Network& net, const PcaModel& pca,
                                const std::vector<FeatureRow>& background_rows,
                                const std::vector<FeatureRow>& correlation_rows,
                                const std::vector<FeatureRow>& explained_rows,
                                const ExplainConfig& config = {});

}  // namespace cogeffort
