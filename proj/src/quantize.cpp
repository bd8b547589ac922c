#include "btrnn/quantize.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace btrnn {

const char* to_string(QuantMode m) {
  switch (m) {
    case QuantMode::kNone: return "none";
    case QuantMode::kBinary: return "binary";
    case QuantMode::kTernary: return "ternary";
  }
  return "?";
}

const char* to_string(Sampling s) {
  return s == Sampling::kStochastic ? "stochastic" : "deterministic";
}

double glorot_alpha(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in + fan_out == 0)
    throw std::invalid_argument("glorot_alpha: fan_in + fan_out is zero");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Tensor2D normalize_weights(const Tensor2D& w, double alpha) {
  if (!(alpha > 0.0))
    throw std::invalid_argument("normalize_weights: alpha must be > 0, got " +
                                std::to_string(alpha));
  Tensor2D out(w.rows(), w.cols());
  const double inv = 1.0 / alpha;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double v = w.data()[i] * inv;
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    out.data()[i] = v;
  }
  return out;
}

Tensor2D binary_prob(const Tensor2D& wn) {
  Tensor2D out(wn.rows(), wn.cols());
  for (std::size_t i = 0; i < wn.size(); ++i) {
    const double v = wn.data()[i];
    if (v < -1.0 || v > 1.0)
      throw std::domain_error("binary_prob: normalized weight " + std::to_string(v) +
                              " outside [-1, 1]");
    out.data()[i] = (v + 1.0) * 0.5;
  }
  return out;
}

namespace {

void check_normalized(const Tensor2D& wn, const char* who) {
#ifdef BTRNN_CHECKED
  for (std::size_t i = 0; i < wn.size(); ++i) {
    const double v = wn.data()[i];
    if (v < -1.0 || v > 1.0)
      throw std::domain_error(std::string(who) + ": normalized weight " + std::to_string(v) +
                              " outside [-1, 1]");
  }
#else
  (void)wn;
  (void)who;
#endif
}

}  // namespace

Tensor2D sample_binary(const Tensor2D& wn, Sampling sampling, RngStream& rng) {
  check_normalized(wn, "sample_binary");
  Tensor2D out(wn.rows(), wn.cols());
  if (sampling == Sampling::kDeterministic) {
    for (std::size_t i = 0; i < wn.size(); ++i)
      out.data()[i] = wn.data()[i] >= 0.0 ? 1.0 : -1.0;
    return out;
  }
  // counters assigned row-major from the stream's current position
  const std::uint64_t base = rng.counter;
  const std::size_t n = wn.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = (wn.data()[i] + 1.0) * 0.5;
    out.data()[i] = rng.uniform_at(base + i) < p ? 1.0 : -1.0;
  }
  rng.advance(n);
  return out;
}

Tensor2D sample_ternary(const Tensor2D& wn, Sampling sampling, RngStream& rng) {
  check_normalized(wn, "sample_ternary");
  Tensor2D out(wn.rows(), wn.cols());
  if (sampling == Sampling::kDeterministic) {
    for (std::size_t i = 0; i < wn.size(); ++i) {
      const double v = wn.data()[i];
      out.data()[i] = std::fabs(v) >= 0.5 ? (v >= 0.0 ? 1.0 : -1.0) : 0.0;
    }
    return out;
  }
  const std::uint64_t base = rng.counter;
  const std::size_t n = wn.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = wn.data()[i];
    const double sign = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    out.data()[i] = rng.uniform_at(base + i) < std::fabs(v) ? sign : 0.0;
  }
  rng.advance(n);
  return out;
}

Tensor2D sample_quantized(const Tensor2D& w, const QuantSpec& spec, RngStream& rng) {
  Tensor2D wn = normalize_weights(w, spec.alpha);
  switch (spec.mode) {
    case QuantMode::kBinary: return sample_binary(wn, spec.sampling, rng);
    case QuantMode::kTernary: return sample_ternary(wn, spec.sampling, rng);
    case QuantMode::kNone: break;
  }
  throw std::invalid_argument("sample_quantized: mode 'none' has nothing to sample");
}

Tensor2D ste_backward(Tensor2D grad_wrt_quantized) {
  return grad_wrt_quantized;
}

}  // namespace btrnn
