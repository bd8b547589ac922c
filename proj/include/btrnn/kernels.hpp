#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "btrnn/tensor.hpp"

namespace btrnn {

// Dense f64 products:
//   matmul     C = A * B      [m x k] * [k x n] -> [m x n]
//   matmul_nt  C = A * B^T    [m x k] * [n x k] -> [m x n]
//   matmul_tn  C = A^T * B    [k x m] * [k x n] -> [m x n]
// The row loop is OpenMP-parallel; each output element is accumulated in a
// fixed order, so results are bit-identical for any thread count. Accumulation
// is f64 throughout.
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
void matmul(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);
void matmul_nt(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b);
void matmul_tn(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);

// Accumulating variants used by backprop: C += A * B, C += A^T * B.
void matmul_acc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);
void matmul_tn_acc(const Tensor2D& a, const Tensor2D& b, Tensor2D& c);

// Per-column mean and biased variance (divide by rows, not rows-1).
// Row count must be >= 1; one row gives variance 0.
void column_stats(const Tensor2D& x, std::vector<double>& mean, std::vector<double>& var);

// out[j] += sum over rows of x(r, j); rows are added in ascending order.
void colsum_acc(const Tensor2D& x, std::vector<double>& out);

// One-hot products. A one-hot row vector times W^T picks a single column of W,
// so the matmul collapses to a gather and its adjoint to a scatter-add:
//   gather_columns       out(b, o)        = w(o, idx[b])
//   scatter_columns_acc  grads(o, idx[b]) += dz(b, o)
// Indices are validated against the column count. scatter adds in ascending b
// per output row, matching matmul_tn's accumulation order bit for bit.
void gather_columns(const Tensor2D& w, const std::vector<std::int32_t>& idx, Tensor2D& out);
void scatter_columns_acc(const Tensor2D& dz, const std::vector<std::int32_t>& idx,
                         Tensor2D& grads);

// Fixed-order dot product: 8 independent partial sums combined in a set tree,
// then a scalar tail. The packed +-1 kernel reuses this exact lane layout so
// the two paths round identically.
template <class Term>
inline double lane_sum(std::size_t n, Term term) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    s0 += term(k + 0);
    s1 += term(k + 1);
    s2 += term(k + 2);
    s3 += term(k + 3);
    s4 += term(k + 4);
    s5 += term(k + 5);
    s6 += term(k + 6);
    s7 += term(k + 7);
  }
  double s = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
  for (; k < n; ++k) s += term(k);
  return s;
}

namespace ref {
// Naive serial kernels: the oracle the parallel paths are tested against and
// the baseline bench_kernels compares with.
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);
Tensor2D matmul_nt(const Tensor2D& a, const Tensor2D& b);
Tensor2D matmul_tn(const Tensor2D& a, const Tensor2D& b);
void column_stats(const Tensor2D& x, std::vector<double>& mean, std::vector<double>& var);
}  // namespace ref

}  // namespace btrnn
