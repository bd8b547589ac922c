#include "ewise.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace btrnn::detail {

void scale_inplace(Tensor2D& t, double a) {
  double* p = t.data();
  const std::size_t n = t.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) p[i] *= a;
}

void sigmoid_inplace(Tensor2D& t) {
  double* p = t.data();
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-p[i]));
}

void tanh_inplace(Tensor2D& t) {
  double* p = t.data();
  const std::size_t n = t.size();
  for (std::size_t i = 0; i < n; ++i) p[i] = std::tanh(p[i]);
}

void check_range(const Tensor2D& t, double lo, double hi, const char* name) {
#ifdef BTRNN_CHECKED
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = t.data()[i];
    if (!(v >= lo && v <= hi))
      throw std::runtime_error(std::string("gate range: ") + name + " value " +
                               std::to_string(v) + " outside [" + std::to_string(lo) + "," +
                               std::to_string(hi) + "]");
  }
#else
  (void)t;
  (void)lo;
  (void)hi;
  (void)name;
#endif
}

void add_bias_sum(const Tensor2D& a, const Tensor2D& b, const std::vector<double>& bias,
                  Tensor2D& out) {
  const std::size_t rows = a.rows(), cols = a.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = a.row(r);
    const double* br = b.row(r);
    double* orow = out.row(r);
#pragma omp simd
    for (std::size_t j = 0; j < cols; ++j) orow[j] = ar[j] + br[j] + bias[j];
  }
}

void cell_blend(const Tensor2D& f, const Tensor2D& i, const Tensor2D& g, const Tensor2D& c_prev,
                Tensor2D& c_new) {
  const double* fp = f.data();
  const double* ip = i.data();
  const double* gp = g.data();
  const double* cp = c_prev.data();
  double* cn = c_new.data();
  const std::size_t n = c_new.size();
#pragma omp simd
  for (std::size_t k = 0; k < n; ++k) cn[k] = fp[k] * cp[k] + ip[k] * gp[k];
}

void hadamard(const Tensor2D& a, const Tensor2D& b, Tensor2D& out) {
  const double* ap = a.data();
  const double* bp = b.data();
  double* op = out.data();
  const std::size_t n = out.size();
#pragma omp simd
  for (std::size_t k = 0; k < n; ++k) op[k] = ap[k] * bp[k];
}

}  // namespace btrnn::detail
