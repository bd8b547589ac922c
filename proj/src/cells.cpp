#include "btrnn/cells.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "btrnn/kernels.hpp"
#include "ewise.hpp"

namespace btrnn {

using detail::add_bias_sum;
using detail::cell_blend;
using detail::check_range;
using detail::hadamard;
using detail::scale_inplace;
using detail::sigmoid_inplace;
using detail::tanh_inplace;

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void vec_acc(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// z = alpha * (v * S^T) for the quantized path, z = v * W^T otherwise.
Tensor2D gate_product(const Tensor2D& v, const Tensor2D* sampled, const Tensor2D& full,
                      double alpha) {
  Tensor2D z(v.rows(), sampled ? sampled->rows() : full.rows());
  if (sampled) {
    matmul_nt(v, *sampled, z);
    scale_inplace(z, alpha);
  } else {
    matmul_nt(v, full, z);
  }
  return z;
}

void validate_step_input(const StepInput& x, const CellState& prev, std::size_t d_x,
                         std::size_t d_h, bool with_c) {
  require(x.dense != nullptr || x.tokens != nullptr, "cell step: empty input");
  require(x.batch() == prev.h.rows(),
          "cell step: batch mismatch between input (" + std::to_string(x.batch()) +
              ") and state (" + std::to_string(prev.h.rows()) + ")");
  if (x.dense)
    require(x.dense->cols() == d_x, "cell step: input width " +
                                        std::to_string(x.dense->cols()) +
                                        " does not match d_x " + std::to_string(d_x));
  require(prev.h.cols() == d_h, "cell step: state width does not match d_h");
  require(x.batch() >= 1, "cell step: empty batch");
  if (with_c)
    require(prev.c.same_shape(prev.h), "cell step: cell state shape does not match h");
}

// Input-path product: dense inputs multiply, token inputs gather the id's
// column (token validity is checked by the gather itself).
Tensor2D input_product(const StepInput& in, const Tensor2D* sampled, const Tensor2D& full,
                       double alpha) {
  if (in.dense) return gate_product(*in.dense, sampled, full, alpha);
  const Tensor2D& m = sampled ? *sampled : full;
  Tensor2D z(in.tokens->size(), m.rows());
  gather_columns(m, *in.tokens, z);
  if (sampled) scale_inplace(z, alpha);
  return z;
}

}  // namespace

CellState make_zero_state(std::size_t batch, std::size_t d_h, bool with_c) {
  CellState s;
  s.h = Tensor2D(batch, d_h, 0.0);
  if (with_c) s.c = Tensor2D(batch, d_h, 0.0);
  return s;
}

// ---------------------------------------------------------------------------
// realization sampling
// ---------------------------------------------------------------------------

LstmRealization sample_lstm_realization(const LstmParams& p, RngStream& rng) {
  require(p.quantized(), "sample_lstm_realization: mode 'none' has nothing to sample");
  LstmRealization r;
  for (std::size_t g = 0; g < 4; ++g) r.wh[g] = sample_quantized(p.wh[g], p.quant_h[g], rng);
  for (std::size_t g = 0; g < 4; ++g) r.wx[g] = sample_quantized(p.wx[g], p.quant_x[g], rng);
  return r;
}

GruRealization sample_gru_realization(const GruParams& p, RngStream& rng) {
  require(p.quantized(), "sample_gru_realization: mode 'none' has nothing to sample");
  GruRealization r;
  for (std::size_t g = 0; g < 3; ++g) r.wh[g] = sample_quantized(p.wh[g], p.quant_h[g], rng);
  for (std::size_t g = 0; g < 3; ++g) r.wx[g] = sample_quantized(p.wx[g], p.quant_x[g], rng);
  return r;
}

// ---------------------------------------------------------------------------
// LSTM forward
// ---------------------------------------------------------------------------

namespace {

CellState lstm_step_core(LstmParams& p, std::shared_ptr<const LstmRealization> real,
                         const StepInput& x, const CellState& prev, std::size_t t, BnMode mode,
                         LstmStepCache* cache) {
  validate_step_input(x, prev, p.d_x, p.d_h, /*with_c=*/true);
  const std::size_t batch = x.batch(), d_h = p.d_h;

  std::array<Tensor2D, 4> u;
  for (std::size_t g = 0; g < 4; ++g) {
    Tensor2D zh = gate_product(prev.h, real ? &real->wh[g] : nullptr, p.wh[g],
                               p.quant_h[g].alpha);
    Tensor2D uh = p.use_bn
                      ? bn_forward(zh, p.bn_h[g], t, mode, cache ? &cache->bn_h[g] : nullptr)
                      : std::move(zh);
    Tensor2D zx = input_product(x, real ? &real->wx[g] : nullptr, p.wx[g], p.quant_x[g].alpha);
    Tensor2D ux = p.use_bn
                      ? bn_forward(zx, p.bn_x[g], t, mode, cache ? &cache->bn_x[g] : nullptr)
                      : std::move(zx);
    u[g] = Tensor2D(batch, d_h);
    add_bias_sum(uh, ux, p.bias[g], u[g]);
  }

  sigmoid_inplace(u[kGateF]);
  sigmoid_inplace(u[kGateI]);
  sigmoid_inplace(u[kGateO]);
  tanh_inplace(u[kGateG]);
  check_range(u[kGateF], 0.0, 1.0, "forget");
  check_range(u[kGateI], 0.0, 1.0, "input");
  check_range(u[kGateO], 0.0, 1.0, "output");
  check_range(u[kGateG], -1.0, 1.0, "candidate");

  Tensor2D c_new(batch, d_h);
  cell_blend(u[kGateF], u[kGateI], u[kGateG], prev.c, c_new);

  Tensor2D c_for_h = p.bn_cell
                         ? bn_forward(c_new, p.bn_c, t, mode, cache ? &cache->bn_c : nullptr)
                         : c_new;
  tanh_inplace(c_for_h);  // c_for_h now holds tanh(...)

  CellState out;
  out.c = c_new;
  out.h = Tensor2D(batch, d_h);
  hadamard(u[kGateO], c_for_h, out.h);

  if (cache) {
    cache->t = t;
    cache->used_bn = p.use_bn;
    cache->used_cell_bn = p.bn_cell;
    cache->quantized = static_cast<bool>(real);
    cache->realization = std::move(real);
    if (x.dense)
      cache->x = *x.dense;
    else
      cache->tokens = *x.tokens;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->gates = std::move(u);
    cache->c_new = out.c;
    cache->tanh_c = std::move(c_for_h);
  }
  return out;
}

}  // namespace

CellState lstm_step_fp(LstmParams& p, const StepInput& x, const CellState& prev,
                       LstmStepCache* cache) {
  require(!p.quantized(), "lstm_step_fp: params carry a quantization mode; use the quantized step");
  require(!p.use_bn, "lstm_step_fp: params enable BN; use lstm_step_bn_fp");
  return lstm_step_core(p, nullptr, x, prev, 0, BnMode::kTrain, cache);
}

CellState lstm_step_bn_fp(LstmParams& p, const StepInput& x, const CellState& prev, std::size_t t,
                          BnMode mode, LstmStepCache* cache) {
  require(!p.quantized(), "lstm_step_bn_fp: params carry a quantization mode");
  require(p.use_bn, "lstm_step_bn_fp: params have BN disabled");
  return lstm_step_core(p, nullptr, x, prev, t, mode, cache);
}

CellState lstm_step_quantized(LstmParams& p, const std::shared_ptr<const LstmRealization>& real,
                              const StepInput& x, const CellState& prev, std::size_t t, BnMode mode,
                              LstmStepCache* cache) {
  require(p.quantized(), "lstm_step_quantized: quantization mode is 'none'");
  require(static_cast<bool>(real), "lstm_step_quantized: missing realization");
  return lstm_step_core(p, real, x, prev, t, mode, cache);
}

CellState lstm_step_quantized(LstmParams& p, const StepInput& x, const CellState& prev,
                              std::size_t t, RngStream& rng, BnMode mode, LstmStepCache* cache) {
  require(p.quantized(), "lstm_step_quantized: quantization mode is 'none'");
  auto real = std::make_shared<LstmRealization>(sample_lstm_realization(p, rng));
  return lstm_step_core(p, std::move(real), x, prev, t, mode, cache);
}

// ---------------------------------------------------------------------------
// LSTM backward
// ---------------------------------------------------------------------------

void LstmGrads::init(const LstmParams& p) {
  for (std::size_t g = 0; g < 4; ++g) {
    wh[g] = Tensor2D(p.d_h, p.d_h, 0.0);
    wx[g] = Tensor2D(p.d_h, p.d_x, 0.0);
    bias[g].assign(p.d_h, 0.0);
    bn_h_phi[g].assign(p.d_h, 0.0);
    bn_x_phi[g].assign(p.d_h, 0.0);
  }
  bn_c_phi.assign(p.d_h, 0.0);
  bn_c_gamma.assign(p.d_h, 0.0);
}

void LstmGrads::zero() {
  for (std::size_t g = 0; g < 4; ++g) {
    wh[g].fill(0.0);
    wx[g].fill(0.0);
    bias[g].assign(bias[g].size(), 0.0);
    bn_h_phi[g].assign(bn_h_phi[g].size(), 0.0);
    bn_x_phi[g].assign(bn_x_phi[g].size(), 0.0);
  }
  bn_c_phi.assign(bn_c_phi.size(), 0.0);
  bn_c_gamma.assign(bn_c_gamma.size(), 0.0);
}

void lstm_backward_step(const LstmParams& p, const LstmStepCache& cache, const Tensor2D& dh,
                        const Tensor2D& dc_carry, Tensor2D& dh_prev, Tensor2D& dc_prev,
                        Tensor2D* dx, LstmGrads& grads) {
  const std::size_t batch = dh.rows(), d_h = p.d_h, n = batch * d_h;
  require(dh.cols() == d_h && dc_carry.same_shape(dh), "lstm_backward_step: shape mismatch");

  const Tensor2D& f = cache.gates[kGateF];
  const Tensor2D& i = cache.gates[kGateI];
  const Tensor2D& o = cache.gates[kGateO];
  const Tensor2D& g = cache.gates[kGateG];

  // output gate and cell-path split of dh
  Tensor2D du_o(batch, d_h), dcb(batch, d_h);
  {
    const double* dhp = dh.data();
    const double* op = o.data();
    const double* th = cache.tanh_c.data();
    double* duo = du_o.data();
    double* dcbp = dcb.data();
#pragma omp simd
    for (std::size_t k = 0; k < n; ++k) {
      duo[k] = dhp[k] * th[k] * op[k] * (1.0 - op[k]);
      dcbp[k] = dhp[k] * op[k] * (1.0 - th[k] * th[k]);
    }
  }

  Tensor2D dc_total;
  if (cache.used_cell_bn) {
    std::vector<double> dphi, dgamma;
    bn_backward(dcb, cache.bn_c, dc_total, dphi, dgamma);
    vec_acc(grads.bn_c_phi, dphi);
    vec_acc(grads.bn_c_gamma, dgamma);
  } else {
    dc_total = std::move(dcb);
  }
  {
    double* dct = dc_total.data();
    const double* carry = dc_carry.data();
#pragma omp simd
    for (std::size_t k = 0; k < n; ++k) dct[k] += carry[k];
  }

  // gate pre-activation gradients and the cell-state carry to t-1
  Tensor2D du_f(batch, d_h), du_i(batch, d_h), du_g(batch, d_h);
  dc_prev = Tensor2D(batch, d_h);
  {
    const double* dct = dc_total.data();
    const double* fp = f.data();
    const double* ip = i.data();
    const double* gp = g.data();
    const double* cp = cache.c_prev.data();
    double* duf = du_f.data();
    double* dui = du_i.data();
    double* dug = du_g.data();
    double* dcp = dc_prev.data();
#pragma omp simd
    for (std::size_t k = 0; k < n; ++k) {
      duf[k] = dct[k] * cp[k] * fp[k] * (1.0 - fp[k]);
      dui[k] = dct[k] * gp[k] * ip[k] * (1.0 - ip[k]);
      dug[k] = dct[k] * ip[k] * (1.0 - gp[k] * gp[k]);
      dcp[k] = dct[k] * fp[k];
    }
  }

  dh_prev = Tensor2D(batch, d_h, 0.0);
  if (dx) *dx = Tensor2D(batch, p.d_x, 0.0);

  const std::array<Tensor2D*, 4> du = {&du_f, &du_i, &du_o, &du_g};
  for (std::size_t gi = 0; gi < 4; ++gi) {
    colsum_acc(*du[gi], grads.bias[gi]);

    // recurrent path
    Tensor2D dz_h;
    if (cache.used_bn) {
      std::vector<double> dphi, dgamma_unused;
      bn_backward(*du[gi], cache.bn_h[gi], dz_h, dphi, dgamma_unused);
      vec_acc(grads.bn_h_phi[gi], dphi);  // gate shift is pinned; dgamma discarded
    } else {
      dz_h = *du[gi];
    }
    if (cache.quantized) {
      scale_inplace(dz_h, p.quant_h[gi].alpha);
      matmul_tn_acc(dz_h, cache.h_prev, grads.wh[gi]);
      matmul_acc(dz_h, cache.realization->wh[gi], dh_prev);
    } else {
      matmul_tn_acc(dz_h, cache.h_prev, grads.wh[gi]);
      matmul_acc(dz_h, p.wh[gi], dh_prev);
    }

    // input path
    Tensor2D dz_x;
    if (cache.used_bn) {
      std::vector<double> dphi, dgamma_unused;
      bn_backward(*du[gi], cache.bn_x[gi], dz_x, dphi, dgamma_unused);
      vec_acc(grads.bn_x_phi[gi], dphi);
    } else {
      dz_x = *du[gi];
    }
    if (cache.quantized) scale_inplace(dz_x, p.quant_x[gi].alpha);
    if (!cache.tokens.empty()) {
      require(dx == nullptr, "lstm_backward_step: token inputs have no input gradient");
      scatter_columns_acc(dz_x, cache.tokens, grads.wx[gi]);
    } else if (cache.quantized) {
      matmul_tn_acc(dz_x, cache.x, grads.wx[gi]);
      if (dx) matmul_acc(dz_x, cache.realization->wx[gi], *dx);
    } else {
      matmul_tn_acc(dz_x, cache.x, grads.wx[gi]);
      if (dx) matmul_acc(dz_x, p.wx[gi], *dx);
    }
  }
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

namespace {

CellState gru_step_core(GruParams& p, std::shared_ptr<const GruRealization> real,
                        const StepInput& x, const CellState& prev, std::size_t t, BnMode mode,
                        GruStepCache* cache) {
  validate_step_input(x, prev, p.d_x, p.d_h, /*with_c=*/false);
  const std::size_t batch = x.batch(), d_h = p.d_h;

  auto gate_u = [&](std::size_t g, const Tensor2D& hin) {
    Tensor2D zh = gate_product(hin, real ? &real->wh[g] : nullptr, p.wh[g], p.quant_h[g].alpha);
    Tensor2D uh = p.use_bn
                      ? bn_forward(zh, p.bn_h[g], t, mode, cache ? &cache->bn_h[g] : nullptr)
                      : std::move(zh);
    Tensor2D zx = input_product(x, real ? &real->wx[g] : nullptr, p.wx[g], p.quant_x[g].alpha);
    Tensor2D ux = p.use_bn
                      ? bn_forward(zx, p.bn_x[g], t, mode, cache ? &cache->bn_x[g] : nullptr)
                      : std::move(zx);
    Tensor2D u(batch, d_h);
    add_bias_sum(uh, ux, p.bias[g], u);
    return u;
  };

  Tensor2D z = gate_u(kGruZ, prev.h);
  sigmoid_inplace(z);
  Tensor2D r = gate_u(kGruR, prev.h);
  sigmoid_inplace(r);
  check_range(z, 0.0, 1.0, "update");
  check_range(r, 0.0, 1.0, "reset");

  Tensor2D rh(batch, d_h);
  hadamard(r, prev.h, rh);

  Tensor2D ncand = gate_u(kGruN, rh);
  tanh_inplace(ncand);
  check_range(ncand, -1.0, 1.0, "candidate");

  CellState out;
  out.h = Tensor2D(batch, d_h);
  {
    const double* zp = z.data();
    const double* hp = prev.h.data();
    const double* np = ncand.data();
    double* hn = out.h.data();
#pragma omp simd
    for (std::size_t k = 0; k < out.h.size(); ++k)
      hn[k] = zp[k] * hp[k] + (1.0 - zp[k]) * np[k];
  }

  if (cache) {
    cache->t = t;
    cache->used_bn = p.use_bn;
    cache->quantized = static_cast<bool>(real);
    cache->realization = std::move(real);
    if (x.dense)
      cache->x = *x.dense;
    else
      cache->tokens = *x.tokens;
    cache->h_prev = prev.h;
    cache->rh = std::move(rh);
    cache->gates[kGruZ] = std::move(z);
    cache->gates[kGruR] = std::move(r);
    cache->gates[kGruN] = std::move(ncand);
  }
  return out;
}

}  // namespace

CellState gru_step_fp(GruParams& p, const StepInput& x, const CellState& prev,
                      GruStepCache* cache) {
  require(!p.quantized(), "gru_step_fp: params carry a quantization mode");
  require(!p.use_bn, "gru_step_fp: params enable BN");
  return gru_step_core(p, nullptr, x, prev, 0, BnMode::kTrain, cache);
}

CellState gru_step_bn_fp(GruParams& p, const StepInput& x, const CellState& prev, std::size_t t,
                         BnMode mode, GruStepCache* cache) {
  require(!p.quantized(), "gru_step_bn_fp: params carry a quantization mode");
  require(p.use_bn, "gru_step_bn_fp: params have BN disabled");
  return gru_step_core(p, nullptr, x, prev, t, mode, cache);
}

CellState gru_step_quantized(GruParams& p, const std::shared_ptr<const GruRealization>& real,
                             const StepInput& x, const CellState& prev, std::size_t t, BnMode mode,
                             GruStepCache* cache) {
  require(p.quantized(), "gru_step_quantized: quantization mode is 'none'");
  require(static_cast<bool>(real), "gru_step_quantized: missing realization");
  return gru_step_core(p, real, x, prev, t, mode, cache);
}

CellState gru_step_quantized(GruParams& p, const StepInput& x, const CellState& prev, std::size_t t,
                             RngStream& rng, BnMode mode, GruStepCache* cache) {
  require(p.quantized(), "gru_step_quantized: quantization mode is 'none'");
  auto real = std::make_shared<GruRealization>(sample_gru_realization(p, rng));
  return gru_step_core(p, std::move(real), x, prev, t, mode, cache);
}

void GruGrads::init(const GruParams& p) {
  for (std::size_t g = 0; g < 3; ++g) {
    wh[g] = Tensor2D(p.d_h, p.d_h, 0.0);
    wx[g] = Tensor2D(p.d_h, p.d_x, 0.0);
    bias[g].assign(p.d_h, 0.0);
    bn_h_phi[g].assign(p.d_h, 0.0);
    bn_x_phi[g].assign(p.d_h, 0.0);
  }
}

void GruGrads::zero() {
  for (std::size_t g = 0; g < 3; ++g) {
    wh[g].fill(0.0);
    wx[g].fill(0.0);
    bias[g].assign(bias[g].size(), 0.0);
    bn_h_phi[g].assign(bn_h_phi[g].size(), 0.0);
    bn_x_phi[g].assign(bn_x_phi[g].size(), 0.0);
  }
}

void gru_backward_step(const GruParams& p, const GruStepCache& cache, const Tensor2D& dh,
                       Tensor2D& dh_prev, Tensor2D* dx, GruGrads& grads) {
  const std::size_t batch = dh.rows(), d_h = p.d_h, n = batch * d_h;
  require(dh.cols() == d_h, "gru_backward_step: shape mismatch");

  const Tensor2D& z = cache.gates[kGruZ];
  const Tensor2D& r = cache.gates[kGruR];
  const Tensor2D& nc = cache.gates[kGruN];

  dh_prev = Tensor2D(batch, d_h);
  if (dx) *dx = Tensor2D(batch, p.d_x, 0.0);

  // h' = z.*h + (1-z).*n
  Tensor2D dz(batch, d_h), du_n(batch, d_h);
  {
    const double* dhp = dh.data();
    const double* zp = z.data();
    const double* hp = cache.h_prev.data();
    const double* np = nc.data();
    double* dzp = dz.data();
    double* dun = du_n.data();
    double* dhprev = dh_prev.data();
#pragma omp simd
    for (std::size_t k = 0; k < n; ++k) {
      dzp[k] = dhp[k] * (hp[k] - np[k]);
      dhprev[k] = dhp[k] * zp[k];
      dun[k] = dhp[k] * (1.0 - zp[k]) * (1.0 - np[k] * np[k]);
    }
  }

  // one gate's two paths; returns nothing, accumulates everything
  auto backprop_gate = [&](std::size_t gi, Tensor2D& du, const Tensor2D& hin, Tensor2D* dhin) {
    colsum_acc(du, grads.bias[gi]);
    Tensor2D dz_h;
    if (cache.used_bn) {
      std::vector<double> dphi, dgamma_unused;
      bn_backward(du, cache.bn_h[gi], dz_h, dphi, dgamma_unused);
      vec_acc(grads.bn_h_phi[gi], dphi);
    } else {
      dz_h = du;
    }
    if (cache.quantized) {
      scale_inplace(dz_h, p.quant_h[gi].alpha);
      matmul_tn_acc(dz_h, hin, grads.wh[gi]);
      if (dhin) matmul_acc(dz_h, cache.realization->wh[gi], *dhin);
    } else {
      matmul_tn_acc(dz_h, hin, grads.wh[gi]);
      if (dhin) matmul_acc(dz_h, p.wh[gi], *dhin);
    }
    Tensor2D dz_x;
    if (cache.used_bn) {
      std::vector<double> dphi, dgamma_unused;
      bn_backward(du, cache.bn_x[gi], dz_x, dphi, dgamma_unused);
      vec_acc(grads.bn_x_phi[gi], dphi);
    } else {
      dz_x = du;
    }
    if (cache.quantized) scale_inplace(dz_x, p.quant_x[gi].alpha);
    if (!cache.tokens.empty()) {
      require(dx == nullptr, "gru_backward_step: token inputs have no input gradient");
      scatter_columns_acc(dz_x, cache.tokens, grads.wx[gi]);
    } else if (cache.quantized) {
      matmul_tn_acc(dz_x, cache.x, grads.wx[gi]);
      if (dx) matmul_acc(dz_x, cache.realization->wx[gi], *dx);
    } else {
      matmul_tn_acc(dz_x, cache.x, grads.wx[gi]);
      if (dx) matmul_acc(dz_x, p.wx[gi], *dx);
    }
  };

  // candidate gate feeds r.*h, so its backward produces the reset-gate signal
  Tensor2D drh(batch, d_h, 0.0);
  backprop_gate(kGruN, du_n, cache.rh, &drh);

  Tensor2D du_r(batch, d_h), du_z(batch, d_h);
  {
    const double* drhp = drh.data();
    const double* hp = cache.h_prev.data();
    const double* rp = r.data();
    const double* zp = z.data();
    const double* dzp = dz.data();
    double* dur = du_r.data();
    double* duz = du_z.data();
    double* dhprev = dh_prev.data();
#pragma omp simd
    for (std::size_t k = 0; k < n; ++k) {
      dhprev[k] += drhp[k] * rp[k];
      dur[k] = drhp[k] * hp[k] * rp[k] * (1.0 - rp[k]);
      duz[k] = dzp[k] * zp[k] * (1.0 - zp[k]);
    }
  }

  backprop_gate(kGruR, du_r, cache.h_prev, &dh_prev);
  backprop_gate(kGruZ, du_z, cache.h_prev, &dh_prev);
}

// ---------------------------------------------------------------------------
// initialization
// ---------------------------------------------------------------------------

namespace {

Tensor2D glorot_uniform(std::size_t rows, std::size_t cols, double alpha, RngStream& rng) {
  Tensor2D w(rows, cols);
  const std::uint64_t base = rng.counter;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      w(i, j) = alpha * (2.0 * rng.uniform_at(base + i * cols + j) - 1.0);
  rng.advance(rows * cols);
  return w;
}

}  // namespace

LstmParams make_lstm_params(std::size_t d_x, std::size_t d_h, QuantMode mode, Sampling sampling,
                            bool use_bn, bool bn_cell, std::size_t t_max, RngStream& rng) {
  require(d_x > 0 && d_h > 0, "make_lstm_params: dimensions must be positive");
  LstmParams p;
  p.d_x = d_x;
  p.d_h = d_h;
  p.use_bn = use_bn;
  p.bn_cell = bn_cell;
  const double ah = glorot_alpha(d_h, d_h);
  const double ax = glorot_alpha(d_x, d_h);
  for (std::size_t g = 0; g < 4; ++g) {
    p.quant_h[g] = QuantSpec{mode, ah, sampling};
    p.quant_x[g] = QuantSpec{mode, ax, sampling};
    p.wh[g] = glorot_uniform(d_h, d_h, ah, rng);
    p.bias[g].assign(d_h, g == kGateF ? 1.0 : 0.0);  // forget bias 1 helps long carries
    p.bn_h[g] = BatchNormState::make(d_h, t_max, false);
    p.bn_x[g] = BatchNormState::make(d_h, t_max, false);
  }
  for (std::size_t g = 0; g < 4; ++g) p.wx[g] = glorot_uniform(d_h, d_x, ax, rng);
  p.bn_c = BatchNormState::make(d_h, t_max, /*gamma_trainable=*/true);
  return p;
}

GruParams make_gru_params(std::size_t d_x, std::size_t d_h, QuantMode mode, Sampling sampling,
                          bool use_bn, std::size_t t_max, RngStream& rng) {
  require(d_x > 0 && d_h > 0, "make_gru_params: dimensions must be positive");
  GruParams p;
  p.d_x = d_x;
  p.d_h = d_h;
  p.use_bn = use_bn;
  const double ah = glorot_alpha(d_h, d_h);
  const double ax = glorot_alpha(d_x, d_h);
  for (std::size_t g = 0; g < 3; ++g) {
    p.quant_h[g] = QuantSpec{mode, ah, sampling};
    p.quant_x[g] = QuantSpec{mode, ax, sampling};
    p.wh[g] = glorot_uniform(d_h, d_h, ah, rng);
    p.bias[g].assign(d_h, 0.0);
    p.bn_h[g] = BatchNormState::make(d_h, t_max, false);
    p.bn_x[g] = BatchNormState::make(d_h, t_max, false);
  }
  for (std::size_t g = 0; g < 3; ++g) p.wx[g] = glorot_uniform(d_h, d_x, ax, rng);
  return p;
}

}  // namespace btrnn
