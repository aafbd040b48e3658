#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cogeffort {

// Dense row-major array of doubles. Rank-2 tensors double as matrices
// (rows x cols) throughout the network code.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * shape_[1] + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  /// Same data, new shape; throws ShapeError if the element count differs.
  Tensor reshaped(Shape shape) const;
  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

using ParamMap = std::map<std::string, Tensor>;
using Matrix = std::vector<std::vector<double>>;

std::string shape_string(const Tensor::Shape& shape);
void require_shape(const Tensor& t, const Tensor::Shape& shape,
                   const char* what);

// Matrix kernels on rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);     // a * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T * b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
void add_row_vector(Tensor& m, const Tensor& v);     // m[r,:] += v
Tensor column_sums(const Tensor& m);
void add_inplace(Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);

/// Rank-2 tensor <-> list of equal-length rows.
Matrix matrix_rows(const Tensor& m);
Tensor matrix_from_rows(const Matrix& rows);

}  // namespace cogeffort
