#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cogeffort/dataprep.hpp"
#include "cogeffort/synthgen.hpp"

namespace cogeffort {

// Plain comma-separated tables: no quoting, first line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void require_header(const std::vector<std::string>& expected) const;
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Shortest round-trip representation (%.17g); NaN is written as "NaN".
std::string format_double(double v);
/// Accepts "NaN"/"nan"/"" as a missing value.
double parse_double(const std::string& s);

// trials.csv, long format, one line per sample:
// participant_id,question_id,session,segment,t_index,o01,...,o16,label,score
std::vector<std::string> trials_header(int n_optodes = 16);
void write_trials_csv(std::ostream& out, const std::vector<Trial>& trials);
std::vector<Trial> read_trials_csv(std::istream& in);

// features.csv: participant_id,question_id,session,segment,f01..fNN,label
void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_features_csv(std::istream& in);

struct Prediction {
  std::string participant_id;
  int question_id = 0;
  int session = 0;
  int segment = 0;
  int label = 0;
  int predicted = 0;
  double prob1 = 0.0;
};

// predictions.csv: participant_id,question_id,session,segment,label,predicted,prob1
void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& preds);
std::vector<Prediction> read_predictions_csv(std::istream& in);

}  // namespace cogeffort
