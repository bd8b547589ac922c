#pragma once

#include <cstddef>
#include <vector>

#include "btrnn/tensor.hpp"

namespace btrnn {

// One normalization instance: y = gamma + phi .* (x - mean) / sqrt(var + eps).
// Statistics are kept per timestep: slot min(t, t_max-1) of the running
// tables, so evaluation beyond the trained length reuses the last slot.
// Gate instances pin gamma to zero (gamma_trainable = false); the optional
// cell-state instance trains both phi and gamma.
struct BatchNormState {
  std::vector<double> phi;    // scale, trainable, init 0.1
  std::vector<double> gamma;  // shift, init 0
  bool gamma_trainable = false;
  double eps = 1e-4;
  double momentum = 0.1;  // running = (1 - momentum) * running + momentum * batch
  std::size_t t_max = 1;
  Tensor2D running_mean;  // [t_max x d], init 0
  Tensor2D running_var;   // [t_max x d], init 1

  std::size_t dim() const { return phi.size(); }
  std::size_t slot(std::size_t t) const { return t < t_max ? t : t_max - 1; }

  static BatchNormState make(std::size_t d, std::size_t t_max, bool gamma_trainable);
};

enum class BnMode { kTrain, kInfer };

// Everything bn_backward needs, captured at forward time.
struct BnCache {
  Tensor2D xhat;                // (x - mean) / sqrt(var + eps), [B x d]
  std::vector<double> inv_std;  // [d]
  std::vector<double> phi;      // phi as of the forward pass
};

// Train mode normalizes with batch statistics (biased variance) and updates
// the running tables at slot min(t, t_max-1); it requires batch >= 2 because
// a single sample normalizes to an all-zero output. Infer mode applies the
// running statistics as a per-feature affine and never touches state; the
// same fold (scale = phi/sqrt(var+eps), shift = gamma - mean*scale) backs the
// packed inference path so the two stay bit-identical.
Tensor2D bn_forward(const Tensor2D& x, BatchNormState& state, std::size_t t, BnMode mode,
                    BnCache* cache = nullptr);

// Per-feature affine equivalent of infer mode at timestep slot `t`.
void bn_infer_affine(const BatchNormState& state, std::size_t t,
                     std::vector<double>& scale, std::vector<double>& shift);

// y[j] = scale[j] * x[j] + shift[j]. Single definition shared by bn_forward
// infer mode and the packed inference path, so both round identically.
void apply_affine(const double* x, double* y, const double* scale, const double* shift,
                  std::size_t n);

// Exact gradients of the train-mode forward. dgamma is always produced; the
// caller ignores it for instances whose gamma is pinned.
void bn_backward(const Tensor2D& dy, const BnCache& cache, Tensor2D& dx,
                 std::vector<double>& dphi, std::vector<double>& dgamma);

}  // namespace btrnn
