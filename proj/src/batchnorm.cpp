#include "btrnn/batchnorm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "btrnn/kernels.hpp"

namespace btrnn {

BatchNormState BatchNormState::make(std::size_t d, std::size_t t_max, bool gamma_trainable) {
  if (d == 0 || t_max == 0)
    throw std::invalid_argument("BatchNormState: dimension and t_max must be positive");
  BatchNormState s;
  s.phi.assign(d, 0.1);
  s.gamma.assign(d, 0.0);
  s.gamma_trainable = gamma_trainable;
  s.t_max = t_max;
  s.running_mean = Tensor2D(t_max, d, 0.0);
  s.running_var = Tensor2D(t_max, d, 1.0);
  return s;
}

void bn_infer_affine(const BatchNormState& state, std::size_t t, std::vector<double>& scale,
                     std::vector<double>& shift) {
  const std::size_t d = state.dim();
  const std::size_t s = state.slot(t);
  scale.resize(d);
  shift.resize(d);
  const double* mu = state.running_mean.row(s);
  const double* var = state.running_var.row(s);
  for (std::size_t j = 0; j < d; ++j) {
    scale[j] = state.phi[j] / std::sqrt(var[j] + state.eps);
    shift[j] = state.gamma[j] - mu[j] * scale[j];
  }
}

void apply_affine(const double* x, double* y, const double* scale, const double* shift,
                  std::size_t n) {
#pragma omp simd
  for (std::size_t j = 0; j < n; ++j) y[j] = scale[j] * x[j] + shift[j];
}

Tensor2D bn_forward(const Tensor2D& x, BatchNormState& state, std::size_t t, BnMode mode,
                    BnCache* cache) {
  const std::size_t d = state.dim();
  if (x.cols() != d)
    throw std::invalid_argument("bn_forward: input width " + std::to_string(x.cols()) +
                                " does not match instance dimension " + std::to_string(d));
  const std::size_t batch = x.rows();
  Tensor2D y(batch, d);

  if (mode == BnMode::kInfer) {
    std::vector<double> scale, shift;
    bn_infer_affine(state, t, scale, shift);
    for (std::size_t b = 0; b < batch; ++b)
      apply_affine(x.row(b), y.row(b), scale.data(), shift.data(), d);
    return y;
  }

  if (batch < 2)
    throw std::invalid_argument(
        "bn_forward: train mode needs batch >= 2; normalizing a single sample "
        "degenerates to an all-zero output");

  std::vector<double> mean, var;
  column_stats(x, mean, var);

  std::vector<double> inv_std(d);
  for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + state.eps);

  Tensor2D xhat(batch, d);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xr = x.row(b);
    double* hr = xhat.row(b);
    double* yr = y.row(b);
#pragma omp simd
    for (std::size_t j = 0; j < d; ++j) {
      hr[j] = (xr[j] - mean[j]) * inv_std[j];
      yr[j] = state.gamma[j] + state.phi[j] * hr[j];
    }
  }

  // exponential moving average of the per-timestep statistics
  const std::size_t s = state.slot(t);
  double* rmu = state.running_mean.row(s);
  double* rvar = state.running_var.row(s);
  const double m = state.momentum;
  for (std::size_t j = 0; j < d; ++j) {
    rmu[j] = (1.0 - m) * rmu[j] + m * mean[j];
    rvar[j] = (1.0 - m) * rvar[j] + m * var[j];
  }

  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->phi = state.phi;
  }
  return y;
}

void bn_backward(const Tensor2D& dy, const BnCache& cache, Tensor2D& dx,
                 std::vector<double>& dphi, std::vector<double>& dgamma) {
  const std::size_t batch = dy.rows(), d = dy.cols();
  if (!dy.same_shape(cache.xhat))
    throw std::invalid_argument("bn_backward: dy shape does not match the cached forward");

  dphi.assign(d, 0.0);
  dgamma.assign(d, 0.0);
  std::vector<double> sum_dxhat(d, 0.0), sum_dxhat_xhat(d, 0.0);

  for (std::size_t b = 0; b < batch; ++b) {
    const double* dyr = dy.row(b);
    const double* hr = cache.xhat.row(b);
#pragma omp simd
    for (std::size_t j = 0; j < d; ++j) {
      dgamma[j] += dyr[j];
      dphi[j] += dyr[j] * hr[j];
      const double dxh = dyr[j] * cache.phi[j];
      sum_dxhat[j] += dxh;
      sum_dxhat_xhat[j] += dxh * hr[j];
    }
  }

  dx = Tensor2D(batch, d);
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* dyr = dy.row(b);
    const double* hr = cache.xhat.row(b);
    double* dxr = dx.row(b);
#pragma omp simd
    for (std::size_t j = 0; j < d; ++j) {
      const double dxh = dyr[j] * cache.phi[j];
      dxr[j] = cache.inv_std[j] * inv_b *
               (static_cast<double>(batch) * dxh - sum_dxhat[j] - hr[j] * sum_dxhat_xhat[j]);
    }
  }
}

}  // namespace btrnn
