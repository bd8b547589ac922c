// Compares the OpenMP kernels against the serial reference implementations on
// training-relevant shapes. Build with -DBTRNN_NATIVE=ON for honest numbers.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include <vector>

#include "btrnn/kernels.hpp"
#include "btrnn/packed.hpp"
#include "btrnn/rng.hpp"
#include "btrnn/tensor.hpp"

using btrnn::RngStream;
using btrnn::Tensor2D;

static Tensor2D random_tensor(std::size_t r, std::size_t c, RngStream& g) {
  Tensor2D t(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) t(i, j) = 2.0 * g.next_uniform() - 1.0;
  return t;
}

static double time_seconds(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

static void report(const char* name, double flops, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3f ms (%6.2f GFLOP/s)   parallel %8.3f ms (%6.2f GFLOP/s)   speedup %.2fx\n",
              name, serial_s * 1e3, flops / serial_s * 1e-9, parallel_s * 1e3,
              flops / parallel_s * 1e-9, serial_s / parallel_s);
}

static void report_packed(const char* name, double flops, double dense_s, double packed_s) {
  std::printf("%-28s dense  %8.3f ms (%6.2f GFLOP/s)   packed   %8.3f ms (%6.2f GOp/s)      speedup %.2fx\n",
              name, dense_s * 1e3, flops / dense_s * 1e-9, packed_s * 1e3,
              flops / packed_s * 1e-9, dense_s / packed_s);
}

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  RngStream g(1234, 0);

  {
    // gate product shape: batch 64 hidden 256
    Tensor2D a = random_tensor(64, 256, g);
    Tensor2D w = random_tensor(256, 256, g);
    Tensor2D c(64, 256);
    const double flops = 2.0 * 64 * 256 * 256;
    const double s = time_seconds([&] { volatile auto r = btrnn::ref::matmul_nt(a, w); (void)r; }, 20);
    const double p = time_seconds([&] { btrnn::matmul_nt(a, w, c); }, 200);
    report("matmul_nt 64x256 * 256x256T", flops, s, p);
  }
  {
    Tensor2D a = random_tensor(64, 256, g);
    Tensor2D b = random_tensor(256, 256, g);
    Tensor2D c(64, 256);
    const double flops = 2.0 * 64 * 256 * 256;
    const double s = time_seconds([&] { volatile auto r = btrnn::ref::matmul(a, b); (void)r; }, 20);
    const double p = time_seconds([&] { btrnn::matmul(a, b, c); }, 200);
    report("matmul    64x256 * 256x256", flops, s, p);
  }
  {
    // weight gradient shape
    Tensor2D a = random_tensor(64, 256, g);
    Tensor2D b = random_tensor(64, 256, g);
    Tensor2D c(256, 256);
    const double flops = 2.0 * 64 * 256 * 256;
    const double s = time_seconds([&] { volatile auto r = btrnn::ref::matmul_tn(a, b); (void)r; }, 20);
    const double p = time_seconds([&] { btrnn::matmul_tn(a, b, c); }, 200);
    report("matmul_tn 64x256T * 64x256", flops, s, p);
  }

  // Packed recurrence products against the dense gate product on the same
  // shape, row-at-a-time through the public matvec. The op count credits one
  // select-and-add per weight, the same 2NK a dense multiply-add pays.
  {
    Tensor2D a = random_tensor(64, 256, g);
    Tensor2D w(256, 256);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double u = g.next_uniform();
      w.data()[i] = u < 0.25 ? -1.0 : u < 0.5 ? 1.0 : 0.0;
    }
    const btrnn::PackedMatrix p = btrnn::pack_matrix(w, btrnn::QuantMode::kTernary, 0.05);

    std::vector<std::vector<double>> rows(64);
    std::vector<btrnn::FixedPointVector> qrows(64);
    for (std::size_t b = 0; b < 64; ++b) {
      rows[b].assign(a.row(b), a.row(b) + 256);
      qrows[b] = btrnn::quantize_activations(rows[b]);
    }

    Tensor2D c(64, 256);
    const double flops = 2.0 * 64 * 256 * 256;
    const double dense = time_seconds([&] { btrnn::matmul_nt(a, w, c); }, 200);
    const double real = time_seconds(
        [&] {
          for (std::size_t b = 0; b < 64; ++b) {
            volatile auto y = btrnn::packed_matvec(p, rows[b]);
            (void)y;
          }
        },
        200);
    std::size_t sat = 0;
    const double fixed = time_seconds(
        [&] {
          for (std::size_t b = 0; b < 64; ++b) {
            volatile auto y = btrnn::packed_matvec(p, qrows[b], &sat);
            (void)y;
          }
        },
        200);
    report_packed("packed f64 ternary 256x256", flops, dense, real);
    report_packed("packed Q4.8 ternary 256x256", flops, dense, fixed);
  }
  return 0;
}
