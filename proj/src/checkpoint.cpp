#include "cogeffort/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cogeffort/csv_io.hpp"
#include "cogeffort/error.hpp"

namespace cogeffort {

namespace {

constexpr const char* kMagic = "cogeffort-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError("checkpoint: bad number '" + s + "'");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Network& net, int best_epoch) {
  const ModelConfig& c = net.config();
  out << kMagic << ' ' << kVersion << '\n';
  out << "architecture " << to_string(c.architecture) << '\n';
  out << "input_width " << c.input_width << '\n';
  out << "conv_filters " << c.conv_filters << '\n';
  out << "conv_kernel " << c.conv_kernel << '\n';
  out << "gru_units " << c.gru_units << '\n';
  out << "dropout_rate " << hex(c.dropout_rate) << '\n';
  out << "dense_units " << c.dense_units << '\n';
  out << "classes " << c.classes << '\n';
  out << "learning_rate " << hex(c.learning_rate) << '\n';
  out << "batch_size " << c.batch_size << '\n';
  out << "max_epochs " << c.max_epochs << '\n';
  out << "patience " << c.patience << '\n';
  out << "bn_position " << to_string(c.bn_position) << '\n';
  out << "bn_identity_fallback " << (c.bn_identity_fallback ? 1 : 0) << '\n';
  out << "seed " << c.seed << '\n';
  out << "best_epoch " << best_epoch << '\n';
  out << "tensors " << net.params().size() << '\n';
  for (const auto& [name, t] : net.params()) {
    out << "tensor " << name << ' ' << t.rank();
    for (auto d : t.shape()) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out << ' ';
      out << hex(t[i]);
    }
    out << '\n';
  }
  out << "end\n";
}

void save_checkpoint(const std::string& path, const Network& net, int best_epoch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_checkpoint(out, net, best_epoch);
}

LoadedCheckpoint read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != kMagic || version != kVersion) throw DataError("not a cogeffort checkpoint");

  ModelConfig c;
  int best_epoch = 0;
  std::size_t n_tensors = 0;
  std::string key;
  while (in >> key) {
    if (key == "tensors") {
      in >> n_tensors;
      break;
    }
    std::string value;
    in >> value;
    if (key == "architecture") c.architecture = parse_architecture(value);
    else if (key == "input_width") c.input_width = std::stoi(value);
    else if (key == "conv_filters") c.conv_filters = std::stoi(value);
    else if (key == "conv_kernel") c.conv_kernel = std::stoi(value);
    else if (key == "gru_units") c.gru_units = std::stoi(value);
    else if (key == "dropout_rate") c.dropout_rate = parse_hex(value);
    else if (key == "dense_units") c.dense_units = std::stoi(value);
    else if (key == "classes") c.classes = std::stoi(value);
    else if (key == "learning_rate") c.learning_rate = parse_hex(value);
    else if (key == "batch_size") c.batch_size = std::stoi(value);
    else if (key == "max_epochs") c.max_epochs = std::stoi(value);
    else if (key == "patience") c.patience = std::stoi(value);
    else if (key == "bn_position") c.bn_position = parse_bn_position(value);
    else if (key == "bn_identity_fallback") c.bn_identity_fallback = value == "1";
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "best_epoch") best_epoch = std::stoi(value);
    else throw DataError("checkpoint: unknown header key '" + key + "'");
  }

  ParamMap params;
  for (std::size_t k = 0; k < n_tensors; ++k) {
    std::string tag, name;
    std::size_t rank = 0;
    in >> tag >> name >> rank;
    if (tag != "tensor") throw DataError("checkpoint: expected tensor record");
    Tensor::Shape shape(rank);
    for (auto& d : shape) in >> d;
    Tensor t(shape);
    std::string token;
    for (std::size_t i = 0; i < t.size(); ++i) {
      in >> token;
      t[i] = parse_hex(token);
    }
    params.emplace(name, std::move(t));
  }
  in >> key;
  if (!in || key != "end") throw DataError("checkpoint: truncated file");
  return LoadedCheckpoint{Network(c, std::move(params)), best_epoch};
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path);
  return read_checkpoint(in);
}

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
  out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << format_double(h.train_loss) << ',' << format_double(h.train_acc)
        << ',' << format_double(h.val_loss) << ',' << format_double(h.val_acc) << '\n';
  }
}

std::vector<EpochStats> read_history_csv(std::istream& in) {
  CsvTable table = read_csv(in);
  table.require_header({"epoch", "train_loss", "train_acc", "val_loss", "val_acc"});
  std::vector<EpochStats> out;
  for (const auto& row : table.rows) {
    EpochStats s;
    s.epoch = std::stoi(row[0]);
    s.train_loss = parse_double(row[1]);
    s.train_acc = parse_double(row[2]);
    s.val_loss = parse_double(row[3]);
    s.val_acc = parse_double(row[4]);
    out.push_back(s);
  }
  return out;
}

}  // namespace cogeffort
