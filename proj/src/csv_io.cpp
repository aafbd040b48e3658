#include "cogeffort/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "cogeffort/error.hpp"

namespace cogeffort {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string two_digit(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, i);
  return buf;
}

int parse_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("expected an integer, got '" + s + "'");
  }
}

}  // namespace

void CsvTable::require_header(const std::vector<std::string>& expected) const {
  if (header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw DataError("unexpected CSV header; expected " + want);
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("CSV column '" + name + "' not found");
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw DataError("CSV row " + std::to_string(t.rows.size() + 1) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path);
  return read_csv(in);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty() || s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError("expected a number, got '" + s + "'");
  return v;
}

std::vector<std::string> trials_header(int n_optodes) {
  std::vector<std::string> h{"participant_id", "question_id", "session", "segment", "t_index"};
  for (int o = 1; o <= n_optodes; ++o) h.push_back(two_digit("o", o));
  h.emplace_back("label");
  h.emplace_back("score");
  return h;
}

void write_trials_csv(std::ostream& out, const std::vector<Trial>& trials) {
  const int optodes = trials.empty() ? 16 : static_cast<int>(trials.front().hbo.cols());
  const auto header = trials_header(optodes);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& tr : trials) {
    for (std::size_t t = 0; t < tr.hbo.rows(); ++t) {
      out << tr.participant_id << ',' << tr.question_id << ',' << tr.session << ','
          << tr.segment << ',' << t;
      for (std::size_t o = 0; o < tr.hbo.cols(); ++o) out << ',' << format_double(tr.hbo(t, o));
      out << ',' << tr.label << ',' << format_double(tr.score) << '\n';
    }
  }
}

std::vector<Trial> read_trials_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  if (table.header.size() < 8) throw DataError("trials.csv: too few columns");
  const int optodes = static_cast<int>(table.header.size()) - 7;
  table.require_header(trials_header(optodes));

  std::vector<Trial> trials;
  std::vector<std::vector<double>> buffer;
  auto flush = [&] {
    if (trials.empty()) return;
    Trial& tr = trials.back();
    tr.hbo = Tensor({buffer.size(), static_cast<std::size_t>(optodes)});
    for (std::size_t t = 0; t < buffer.size(); ++t) {
      for (int o = 0; o < optodes; ++o) tr.hbo(t, static_cast<std::size_t>(o)) = buffer[t][o];
    }
    buffer.clear();
  };
  for (const auto& row : table.rows) {
    const int question = parse_int(row[1]);
    const int t_index = parse_int(row[4]);
    const bool new_trial = trials.empty() || trials.back().participant_id != row[0] ||
                           trials.back().question_id != question;
    if (new_trial) {
      flush();
      Trial tr;
      tr.participant_id = row[0];
      tr.question_id = question;
      tr.session = parse_int(row[2]);
      tr.segment = parse_int(row[3]);
      tr.label = parse_int(row[5 + optodes]);
      tr.score = parse_double(row[6 + optodes]);
      trials.push_back(std::move(tr));
    }
    if (t_index != static_cast<int>(buffer.size())) {
      throw DataError("trials.csv: t_index out of sequence for " + row[0] + " q" + row[1]);
    }
    std::vector<double> sample(static_cast<std::size_t>(optodes));
    for (int o = 0; o < optodes; ++o) sample[o] = parse_double(row[5 + o]);
    buffer.push_back(std::move(sample));
  }
  flush();
  return trials;
}

void write_features_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  const std::size_t width = rows.empty() ? 12 : rows.front().features.size();
  out << "participant_id,question_id,session,segment";
  for (std::size_t j = 1; j <= width; ++j) out << ',' << two_digit("f", static_cast<int>(j));
  out << ",label\n";
  for (const auto& r : rows) {
    if (r.features.size() != width) throw ShapeError("features.csv: ragged rows");
    out << r.participant_id << ',' << r.question_id << ',' << r.session << ',' << r.segment;
    for (double v : r.features) out << ',' << format_double(v);
    out << ',' << r.label << '\n';
  }
}

std::vector<FeatureRow> read_features_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  if (table.header.size() < 6) throw DataError("features.csv: too few columns");
  const std::size_t width = table.header.size() - 5;
  std::vector<std::string> expected{"participant_id", "question_id", "session", "segment"};
  for (std::size_t j = 1; j <= width; ++j) expected.push_back(two_digit("f", static_cast<int>(j)));
  expected.emplace_back("label");
  table.require_header(expected);
  std::vector<FeatureRow> rows;
  for (const auto& cells : table.rows) {
    FeatureRow r;
    r.participant_id = cells[0];
    r.question_id = parse_int(cells[1]);
    r.session = parse_int(cells[2]);
    r.segment = parse_int(cells[3]);
    for (std::size_t j = 0; j < width; ++j) r.features.push_back(parse_double(cells[4 + j]));
    r.label = parse_int(cells[4 + width]);
    r.synthetic = r.participant_id == kSyntheticParticipant;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& preds) {
  out << "participant_id,question_id,session,segment,label,predicted,prob1\n";
  for (const auto& p : preds) {
    out << p.participant_id << ',' << p.question_id << ',' << p.session << ',' << p.segment
        << ',' << p.label << ',' << p.predicted << ',' << format_double(p.prob1) << '\n';
  }
}

std::vector<Prediction> read_predictions_csv(std::istream& in) {
  const CsvTable table = read_csv(in);
  table.require_header(
      {"participant_id", "question_id", "session", "segment", "label", "predicted", "prob1"});
  std::vector<Prediction> out;
  for (const auto& c : table.rows) {
    out.push_back(Prediction{c[0], parse_int(c[1]), parse_int(c[2]), parse_int(c[3]),
                             parse_int(c[4]), parse_int(c[5]), parse_double(c[6])});
  }
  return out;
}

}  // namespace cogeffort
