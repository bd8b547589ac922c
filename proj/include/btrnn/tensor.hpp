#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace btrnn {

// Dense row-major matrix of f64. All training-side numerics run in f64 so
// finite-difference checks stay meaningful; narrower types appear only in the
// packed inference path. With BTRNN_CHECKED defined, constructors that take
// values reject NaN/Inf.
class Tensor2D {
 public:
  Tensor2D() = default;

  Tensor2D(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor2D from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const Tensor2D& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  // Bounds-checked element access; throws std::out_of_range.
  double at(std::size_t i, std::size_t j) const;

  void fill(double v);

  // Throws std::invalid_argument naming `what` and the first offending index.
  // No-op unless BTRNN_CHECKED is defined.
  void check_finite(const char* what = "tensor") const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace btrnn
