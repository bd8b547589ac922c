#include "btrnn/kernels.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace btrnn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string shape_str(const Tensor2D& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

// ---------------------------------------------------------------------------
// parallel kernels
// ---------------------------------------------------------------------------

void matmul(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  require(a.cols() == b.rows(),
          "matmul: inner dimensions differ: " + shape_str(a) + " * " + shape_str(b));
  require(c.rows() == a.rows() && c.cols() == b.cols(),
          "matmul: output shape " + shape_str(c) + " does not match " +
              std::to_string(a.rows()) + "x" + std::to_string(b.cols()));
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::size_t kk = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    const double* arow = a.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < kk; ++k) {
      const double av = arow[k];
      const double* brow = b.row(k);
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_acc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  require(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(),
          "matmul_acc: shape mismatch " + shape_str(a) + " * " + shape_str(b) + " += " +
              shape_str(c));
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::size_t kk = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* crow = c.row(static_cast<std::size_t>(i));
    const double* arow = a.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < kk; ++k) {
      const double av = arow[k];
      const double* brow = b.row(k);
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  require(a.cols() == b.cols(),
          "matmul_nt: inner dimensions differ: " + shape_str(a) + " * (" + shape_str(b) + ")^T");
  require(c.rows() == a.rows() && c.cols() == b.rows(),
          "matmul_nt: output shape " + shape_str(c) + " does not match " +
              std::to_string(a.rows()) + "x" + std::to_string(b.rows()));
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::size_t kk = a.cols(), n = b.rows();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    const double* arow = a.row(static_cast<std::size_t>(i));
    double* crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      crow[j] = lane_sum(kk, [&](std::size_t k) { return arow[k] * brow[k]; });
    }
  }
}

void matmul_tn(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  require(a.rows() == b.rows(),
          "matmul_tn: inner dimensions differ: (" + shape_str(a) + ")^T * " + shape_str(b));
  require(c.rows() == a.cols() && c.cols() == b.cols(),
          "matmul_tn: output shape " + shape_str(c) + " does not match " +
              std::to_string(a.cols()) + "x" + std::to_string(b.cols()));
  c.fill(0.0);
  matmul_tn_acc(a, b, c);
}

void matmul_tn_acc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c) {
  require(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
          "matmul_tn_acc: shape mismatch (" + shape_str(a) + ")^T * " + shape_str(b) + " += " +
              shape_str(c));
  const std::int64_t m = static_cast<std::int64_t>(a.cols());
  const std::size_t bb = a.rows(), n = b.cols();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    double* crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t r = 0; r < bb; ++r) {
      const double av = a(r, static_cast<std::size_t>(i));
      const double* brow = b.row(r);
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
  Tensor2D c(a.rows(), b.cols());
  matmul(a, b, c);
  return c;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
  Tensor2D c(a.rows(), b.rows());
  matmul_nt(a, b, c);
  return c;
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b) {
  Tensor2D c(a.cols(), b.cols());
  matmul_tn(a, b, c);
  return c;
}

void column_stats(const Tensor2D& x, std::vector<double>& mean, std::vector<double>& var) {
  require(x.rows() >= 1, "column_stats: need at least one row");
  const std::size_t n = x.rows(), d = x.cols();
  mean.assign(d, 0.0);
  var.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.row(r);
#pragma omp simd
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) mean[j] *= inv_n;
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.row(r);
#pragma omp simd
    for (std::size_t j = 0; j < d; ++j) {
      const double dlt = row[j] - mean[j];
      var[j] += dlt * dlt;
    }
  }
  for (std::size_t j = 0; j < d; ++j) var[j] *= inv_n;
}

void colsum_acc(const Tensor2D& x, std::vector<double>& out) {
  require(out.size() == x.cols(), "colsum_acc: output has " + std::to_string(out.size()) +
                                      " entries for " + std::to_string(x.cols()) + " columns");
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* row = x.row(r);
#pragma omp simd
    for (std::size_t j = 0; j < x.cols(); ++j) out[j] += row[j];
  }
}

namespace {

void require_indices(const std::vector<std::int32_t>& idx, std::size_t cols, const char* who) {
  for (std::size_t b = 0; b < idx.size(); ++b)
    if (idx[b] < 0 || static_cast<std::size_t>(idx[b]) >= cols)
      throw std::invalid_argument(std::string(who) + ": index " + std::to_string(idx[b]) +
                                  " at position " + std::to_string(b) + " outside [0," +
                                  std::to_string(cols) + ")");
}

}  // namespace

void gather_columns(const Tensor2D& w, const std::vector<std::int32_t>& idx, Tensor2D& out) {
  require(out.rows() == idx.size() && out.cols() == w.rows(),
          "gather_columns: output is " + shape_str(out) + ", want [" +
              std::to_string(idx.size()) + " x " + std::to_string(w.rows()) + "]");
  require_indices(idx, w.cols(), "gather_columns");
  const std::size_t d_out = w.rows(), stride = w.cols();
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const double* src = w.data() + static_cast<std::size_t>(idx[b]);
    double* dst = out.row(b);
    for (std::size_t o = 0; o < d_out; ++o) dst[o] = src[o * stride];
  }
}

void scatter_columns_acc(const Tensor2D& dz, const std::vector<std::int32_t>& idx,
                         Tensor2D& grads) {
  require(dz.rows() == idx.size() && dz.cols() == grads.rows(),
          "scatter_columns_acc: gradient is " + shape_str(dz) + ", want [" +
              std::to_string(idx.size()) + " x " + std::to_string(grads.rows()) + "]");
  require_indices(idx, grads.cols(), "scatter_columns_acc");
  const std::size_t d_out = grads.rows(), batch = idx.size();
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < d_out; ++o) {
    double* grow = grads.row(o);
    for (std::size_t b = 0; b < batch; ++b) grow[idx[b]] += dz(b, o);
  }
}

// ---------------------------------------------------------------------------
// serial reference kernels
// ---------------------------------------------------------------------------

namespace ref {

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
  require(a.cols() == b.rows(), "ref::matmul: inner dimensions differ");
  Tensor2D c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b) {
  require(a.cols() == b.cols(), "ref::matmul_nt: inner dimensions differ");
  Tensor2D c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b) {
  require(a.rows() == b.rows(), "ref::matmul_tn: inner dimensions differ");
  Tensor2D c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * b(r, j);
      c(i, j) = s;
    }
  return c;
}

void column_stats(const Tensor2D& x, std::vector<double>& mean, std::vector<double>& var) {
  require(x.rows() >= 1, "ref::column_stats: need at least one row");
  const std::size_t n = x.rows(), d = x.cols();
  mean.assign(d, 0.0);
  var.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += x(r, j);
    mean[j] = s / static_cast<double>(n);
    double v = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dlt = x(r, j) - mean[j];
      v += dlt * dlt;
    }
    var[j] = v / static_cast<double>(n);
  }
}

}  // namespace ref

}  // namespace btrnn
