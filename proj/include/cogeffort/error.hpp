#pragma once

#include <stdexcept>
#include <string>

namespace cogeffort {

// Invalid parameters, unknown keys, bad flags. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor or matrix dimensions that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that violates a precondition (empty sets, bad labels, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AllMissingColumn : public DataError {
 public:
  explicit AllMissingColumn(int optode)
      : DataError("optode column " + std::to_string(optode) +
                  " has no finite values"),
        optode_(optode) {}
  int optode() const { return optode_; }

 private:
  int optode_;
};

// Training diverged (non-finite loss) or similar runtime failure.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A stage was asked to run without an upstream file it needs.
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(std::string file)
      : std::runtime_error("missing upstream artifact: " + file),
        file_(std::move(file)) {}
  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

}  // namespace cogeffort
