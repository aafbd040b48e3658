#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cogeffort/synthgen.hpp"
#include "cogeffort/tensor.hpp"

namespace cogeffort {

struct FeatureRow {
  std::string participant_id;
  int question_id = 0;
  int session = 0;
  int segment = 0;
  std::vector<double> features;  // 16 optode means, later 12 PC scores
  int label = 0;
  bool synthetic = false;        // produced by SMOTE

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

inline constexpr const char* kSyntheticParticipant = "SMOTE";

// Standardisation statistics (mean, scale) plus principal directions fitted
// on standardised training rows. loadings is (input_dim x components) with
// unit-norm columns; in every column the largest-magnitude entry is >= 0.
struct PcaModel {
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> center;  // column mean of the rows passed to pca_fit
  Tensor loadings;
  std::vector<double> explained_variance;

  std::size_t input_dim() const { return loadings.empty() ? 0 : loadings.rows(); }
  std::size_t components() const { return loadings.empty() ? 0 : loadings.cols(); }
};

struct SplitSpec {
  std::set<std::string> test_participants{"P8", "P11", "P16"};
  std::set<std::string> validation_participants{"P4", "P12"};
};

struct Partition {
  std::vector<FeatureRow> train;
  std::vector<FeatureRow> validation;
  std::vector<FeatureRow> test;
};

/// Replaces NaN cells with the mean of the finite cells of the same optode.
Trial impute_missing(const Trial& trial);

/// Linear detrend (mean restored) followed by a centred moving average whose
/// window shrinks at the edges.
std::vector<double> clean_series(std::span<const double> series, int ma_window);
Trial clean_trial(const Trial& trial, int ma_window);

/// Per-optode time mean. Rejects non-finite cells.
std::vector<double> aggregate_trial(const Trial& trial);
FeatureRow feature_row_from_trial(const Trial& trial);

struct Standardized {
  std::vector<FeatureRow> train;
  std::vector<FeatureRow> other;
  std::vector<double> mean;
  std::vector<double> scale;  // population SD
};

inline constexpr double kMinScale = 1e-8;

Standardized standardize(const std::vector<FeatureRow>& train_rows,
                         const std::vector<FeatureRow>& other_rows);
std::vector<double> apply_standardization(std::span<const double> row,
                                          std::span<const double> mean,
                                          std::span<const double> scale);

/// Top-k eigenvectors of the sample covariance (N-1 denominator).
PcaModel pca_fit(const std::vector<std::vector<double>>& rows, int k);
std::vector<double> pca_project(const PcaModel& model, std::span<const double> row);
std::vector<double> pca_reconstruct(const PcaModel& model, std::span<const double> scores);

Partition split_by_participant(const std::vector<FeatureRow>& rows,
                               const SplitSpec& spec);

/// Oversamples the minority class up to the majority count. Input rows keep
/// their order; synthetic rows are appended.
std::vector<FeatureRow> smote(const std::vector<FeatureRow>& train_rows,
                              int k_neighbors, std::uint64_t seed);

/// (n, 1, width) batch in row order.
Tensor reshape_for_model(const std::vector<FeatureRow>& rows, std::size_t width = 12);
std::vector<std::vector<double>> flatten_batch(const Tensor& batch);

struct PrepConfig {
  int pca_components = 12;
  int smote_k = 5;
  SplitSpec split;
  int ma_window = 0;  // 0 disables cleaning
  std::uint64_t seed = 42;
};

struct PreparedData {
  PcaModel pca;
  std::vector<FeatureRow> all;           // projected, input trial order
  Partition parts;                       // projected, before balancing
  std::vector<FeatureRow> train_balanced;
};

/// impute -> (clean) -> aggregate -> split -> standardise -> PCA -> SMOTE.
/// Standardisation and PCA are fitted on the training partition only.
PreparedData prepare(const std::vector<Trial>& trials, const PrepConfig& config);

}  // namespace cogeffort
