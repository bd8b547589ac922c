#include "btrnn/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace btrnn {

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
#ifdef BTRNN_CHECKED
  if (!std::isfinite(fill))
    throw std::invalid_argument("Tensor2D: non-finite fill value");
#endif
}

Tensor2D::Tensor2D(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols)
    throw std::invalid_argument("Tensor2D: " + std::to_string(data_.size()) +
                                " values for shape " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  check_finite("Tensor2D");
}

Tensor2D Tensor2D::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> flat;
  flat.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c)
      throw std::invalid_argument("Tensor2D::from_rows: ragged rows");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return Tensor2D(r, c, std::move(flat));
}

double Tensor2D::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_)
    throw std::out_of_range("Tensor2D::at(" + std::to_string(i) + "," + std::to_string(j) +
                            ") on shape " + std::to_string(rows_) + "x" + std::to_string(cols_));
  return data_[i * cols_ + j];
}

void Tensor2D::fill(double v) {
  for (auto& x : data_) x = v;
}

void Tensor2D::check_finite(const char* what) const {
#ifdef BTRNN_CHECKED
  for (std::size_t idx = 0; idx < data_.size(); ++idx) {
    if (!std::isfinite(data_[idx])) {
      throw std::invalid_argument(std::string(what) + ": non-finite value at (" +
                                  std::to_string(idx / (cols_ ? cols_ : 1)) + "," +
                                  std::to_string(cols_ ? idx % cols_ : 0) + ")");
    }
  }
#else
  (void)what;
#endif
}

}  // namespace btrnn
