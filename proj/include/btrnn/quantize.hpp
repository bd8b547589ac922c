#pragma once

#include <cstddef>

#include "btrnn/rng.hpp"
#include "btrnn/tensor.hpp"

namespace btrnn {

enum class QuantMode { kNone, kBinary, kTernary };
enum class Sampling { kStochastic, kDeterministic };

// How one weight matrix is quantized. alpha is fixed per matrix at init time
// (glorot_alpha) and never trained; it bounds the full-precision weights and
// scales the sampled realization.
struct QuantSpec {
  QuantMode mode = QuantMode::kNone;
  double alpha = 1.0;
  Sampling sampling = Sampling::kStochastic;
};

const char* to_string(QuantMode m);
const char* to_string(Sampling s);

// sqrt(6 / (fan_in + fan_out)); throws when both fans are zero.
double glorot_alpha(std::size_t fan_in, std::size_t fan_out);

// clip(w / alpha, -1, 1) elementwise; alpha must be > 0.
Tensor2D normalize_weights(const Tensor2D& w, double alpha);

// P(+1) = (wn + 1) / 2 elementwise; throws std::domain_error outside [-1, 1].
Tensor2D binary_prob(const Tensor2D& wn);

// Stochastic: +1 with probability (wn+1)/2, else -1. Deterministic: sign(wn)
// with sign(0) = +1. Stochastic consumes exactly rows*cols counter increments
// in row-major order; deterministic consumes none.
Tensor2D sample_binary(const Tensor2D& wn, Sampling sampling, RngStream& rng);

// Stochastic: sign(wn) with probability |wn|, else 0. Deterministic: sign(wn)
// where |wn| >= 0.5, else 0. Counter consumption as in sample_binary.
Tensor2D sample_ternary(const Tensor2D& wn, Sampling sampling, RngStream& rng);

// normalize + sample per spec.mode. spec.mode == kNone is a misuse error.
Tensor2D sample_quantized(const Tensor2D& w, const QuantSpec& spec, RngStream& rng);

// Straight-through estimator: the gradient recorded for the full-precision
// weights is the gradient w.r.t. the quantized realization, unchanged.
Tensor2D ste_backward(Tensor2D grad_wrt_quantized);

}  // namespace btrnn
