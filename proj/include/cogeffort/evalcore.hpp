#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cogeffort/synthgen.hpp"

namespace cogeffort {

// ---- Classification metrics ---------------------------------------------------------

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

// Class 1 is the positive class. A zero denominator yields 0 and sets the
// matching flag.
struct ClassificationMetrics {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;

  nlohmann::json to_json() const;
};

ClassificationMetrics classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred);

// ---- Effort z-scores -----------------------------------------------------------------

inline constexpr double kEffortEpsilon = 0.001;
inline constexpr double kMinAbsHbo = 1e-6;

enum class EffortMode { literal, conventional };
std::string to_string(EffortMode m);
EffortMode parse_effort_mode(const std::string& s);

/// (s_i - GM) / (SD + eps) over one participant-session's segment scores.
std::vector<double> zscore_performance(std::span<const double> scores);

/// Keeps the sign, raises the magnitude to at least kMinAbsHbo.
double clamp_hbo(double h);

struct EffortZ {
  std::vector<double> ce_z;
  bool degenerate = false;  // literal mode with SD = 0
};

/// literal:      (1/h_i - 1/GM(h)) / (1/SD(h))
/// conventional: (1/h_i - GM(1/h)) / (SD(1/h) + eps)
EffortZ zscore_effort(std::span<const double> mean_hbo, EffortMode mode = EffortMode::literal);

struct RneRni {
  double rne = 0.0;
  double rni = 0.0;
};
RneRni rne_rni(double p_z, double ce_z);

// ---- Segment records -----------------------------------------------------------------

struct SegmentAggregate {
  std::string participant_id;
  int session = 0;
  int segment = 0;
  double mean_hbo = 0.0;    // grand mean over the segment's trials
  double mean_score = 0.0;  // fraction of its questions answered correctly
};

/// Groups trials by (participant, segment) in first-appearance order;
/// scores[i] is the score attributed to trials[i]. Cells must be finite.
std::vector<SegmentAggregate> aggregate_segments(const std::vector<Trial>& trials,
                                                 const std::vector<double>& scores);

enum class EffortSource { actual, predicted };
std::string to_string(EffortSource s);

struct EffortRecord {
  std::string participant_id;
  int session = 0;
  int segment = 0;
  EffortSource source = EffortSource::actual;
  double mean_hbo = 0.0;
  double mean_score = 0.0;
  double p_z = 0.0;
  double ce_z = 0.0;
  double rne = 0.0;
  double rni = 0.0;
  bool ce_degenerate = false;

  friend bool operator==(const EffortRecord&, const EffortRecord&) = default;
};

/// z-scores within each participant-session, then RNE/RNI.
std::vector<EffortRecord> compute_effort(const std::vector<SegmentAggregate>& segments,
                                         EffortSource source,
                                         EffortMode mode = EffortMode::literal);

// ---- Actual vs predicted --------------------------------------------------------------

struct ErrorSummary {
  std::string participant_id;  // "pooled" for the pooled row
  std::size_t n = 0;
  double rne_mae = 0.0;
  double rne_r = 0.0;  // NaN when undefined
  double rni_mae = 0.0;
  double rni_r = 0.0;
};

struct ScatterPoint {
  std::string metric;  // "rne" or "rni"
  std::string participant_id;
  int session = 0;
  int segment = 0;
  double actual = 0.0;
  double predicted = 0.0;
};

struct EffortComparison {
  std::vector<ErrorSummary> participants;
  ErrorSummary pooled;
  std::vector<ScatterPoint> scatter;  // rne points, then rni points

  nlohmann::json to_json() const;
};

inline constexpr const char* kPooledId = "pooled";

/// Records must align on (participant, session, segment) in the same order.
EffortComparison compare_effort(const std::vector<EffortRecord>& actual,
                                const std::vector<EffortRecord>& predicted);

/// Mean absolute difference and Pearson r (NaN when a side is constant).
std::pair<double, double> mae_and_r(std::span<const double> a, std::span<const double> b);

}  // namespace cogeffort
