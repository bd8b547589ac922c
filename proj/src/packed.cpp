#include "btrnn/packed.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "btrnn/kernels.hpp"
#include "ewise.hpp"

namespace btrnn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

const char* support_name(QuantMode mode) {
  return mode == QuantMode::kBinary ? "{-1,+1}" : "{-1,0,+1}";
}

}  // namespace

// ---------------------------------------------------------------------------
// packing
// ---------------------------------------------------------------------------

PackedMatrix pack_matrix(const Tensor2D& w, QuantMode mode, double alpha) {
  require(mode == QuantMode::kBinary || mode == QuantMode::kTernary,
          "pack_matrix: mode must be binary or ternary");
  PackedMatrix p;
  p.rows = w.rows();
  p.cols = w.cols();
  p.mode = mode;
  p.alpha = alpha;
  p.words_per_row = (w.cols() + 63) / 64;
  p.sign_plane.assign(p.rows * p.words_per_row, 0);
  const bool ternary = mode == QuantMode::kTernary;
  if (ternary) p.mask_plane.assign(p.sign_plane.size(), 0);

  for (std::size_t r = 0; r < p.rows; ++r) {
    std::uint64_t* sr = p.sign_plane.data() + r * p.words_per_row;
    std::uint64_t* mr = ternary ? p.mask_plane.data() + r * p.words_per_row : nullptr;
    for (std::size_t j = 0; j < p.cols; ++j) {
      const double v = w(r, j);
      const std::uint64_t bit = std::uint64_t{1} << (j & 63);
      if (v == -1.0) {
        sr[j >> 6] |= bit;
        if (mr) mr[j >> 6] |= bit;
      } else if (v == 1.0) {
        if (mr) mr[j >> 6] |= bit;
      } else if (!(v == 0.0 && ternary)) {
        throw std::invalid_argument("pack_matrix: entry (" + std::to_string(r) + "," +
                                    std::to_string(j) + ") = " + std::to_string(v) +
                                    " is outside the " + support_name(mode) + " support");
      }
    }
  }
  return p;
}

Tensor2D unpack_matrix(const PackedMatrix& p) {
  Tensor2D w(p.rows, p.cols);
  const bool ternary = p.mode == QuantMode::kTernary;
  for (std::size_t r = 0; r < p.rows; ++r) {
    const std::uint64_t* sr = p.sign_row(r);
    const std::uint64_t* mr = ternary ? p.mask_row(r) : nullptr;
    for (std::size_t j = 0; j < p.cols; ++j) {
      const std::uint64_t bit = std::uint64_t{1} << (j & 63);
      if (mr && !(mr[j >> 6] & bit))
        w(r, j) = 0.0;
      else
        w(r, j) = sr[j >> 6] & bit ? -1.0 : 1.0;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// products
// ---------------------------------------------------------------------------

namespace {

// One output row of the select-and-add datapath: no multiplies, just a sign
// flip chosen by the plane bits. The decode is branchless bit surgery on the
// double: XOR of the sign bit is exactly negation, AND with an all-ones or
// all-zeros word is exactly select-or-plus-zero. Decoded terms land in
// `scratch` (caller-provided, at least cols long) and are then summed through
// the same lane_sum the dense kernels use; with weights in {-1,0,+1} every
// dense product term is exact, so the two accumulations agree bit for bit.
double packed_row_sum(const PackedMatrix& p, std::size_t r, const double* x, double* scratch) {
  const std::uint64_t* sr = p.sign_row(r);
  const std::uint64_t* mr = p.mode == QuantMode::kTernary ? p.mask_row(r) : nullptr;
  for (std::size_t wd = 0; wd < p.words_per_row; ++wd) {
    const std::uint64_t sw = sr[wd];
    const std::uint64_t mw = mr ? mr[wd] : ~std::uint64_t{0};
    const std::size_t base = wd * 64;
    const std::size_t n = std::min<std::size_t>(64, p.cols - base);
#pragma omp simd
    for (std::size_t b = 0; b < n; ++b) {
      const std::uint64_t v = std::bit_cast<std::uint64_t>(x[base + b]);
      const std::uint64_t sel = (v ^ (sw >> b & 1) << 63) & (std::uint64_t{0} - (mw >> b & 1));
      scratch[base + b] = std::bit_cast<double>(sel);
    }
  }
  return lane_sum(p.cols, [scratch](std::size_t k) { return scratch[k]; });
}

// Integer form: saturating 32-bit accumulation over the selected raw values.
// Iterates set mask bits word by word, which is order-free because the sum is
// exact until it clips.
std::int32_t packed_row_acc(const PackedMatrix& p, std::size_t r, const std::int16_t* raw,
                            bool& clipped) {
  constexpr std::int64_t kMax = std::numeric_limits<std::int32_t>::max();
  constexpr std::int64_t kMin = std::numeric_limits<std::int32_t>::min();
  const std::uint64_t* sr = p.sign_row(r);
  const std::uint64_t* mr = p.mode == QuantMode::kTernary ? p.mask_row(r) : nullptr;
  std::int64_t acc = 0;
  for (std::size_t wd = 0; wd < p.words_per_row; ++wd) {
    std::uint64_t live;
    if (mr) {
      live = mr[wd];
    } else {
      // binary: every real column is live; keep the pad bits out
      const std::size_t base = wd * 64;
      const std::size_t width = std::min<std::size_t>(64, p.cols - base);
      live = width == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
    }
    const std::uint64_t signs = sr[wd];
    while (live) {
      const int b = std::countr_zero(live);
      live &= live - 1;
      const std::int32_t v = raw[wd * 64 + static_cast<std::size_t>(b)];
      acc += signs >> b & 1 ? -v : v;
      if (acc > kMax) {
        acc = kMax;
        clipped = true;
      } else if (acc < kMin) {
        acc = kMin;
        clipped = true;
      }
    }
  }
  return static_cast<std::int32_t>(acc);
}

}  // namespace

std::vector<double> packed_matvec(const PackedMatrix& p, const std::vector<double>& x) {
  require(x.size() == p.cols, "packed_matvec: input length " + std::to_string(x.size()) +
                                  " does not match " + std::to_string(p.cols) + " columns");
  std::vector<double> y(p.rows);
  std::vector<double> scratch(p.words_per_row * 64);
  for (std::size_t i = 0; i < p.rows; ++i)
    y[i] = packed_row_sum(p, i, x.data(), scratch.data()) * p.alpha;
  return y;
}

std::vector<double> packed_matvec(const PackedMatrix& p, const FixedPointVector& x,
                                  std::size_t* saturated) {
  require(x.raw.size() == p.cols, "packed_matvec: input length " + std::to_string(x.raw.size()) +
                                      " does not match " + std::to_string(p.cols) + " columns");
  std::vector<double> y(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) {
    bool clipped = false;
    const std::int32_t acc = packed_row_acc(p, i, x.raw.data(), clipped);
    y[i] = p.alpha * (static_cast<double>(acc) / 256.0);
    if (clipped && saturated) ++*saturated;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Q4.8 activations
// ---------------------------------------------------------------------------

FixedPointVector quantize_activations(const double* x, std::size_t n) {
  FixedPointVector q;
  q.raw.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // nearbyint under the default rounding mode is round-to-nearest-even
    const double scaled = std::nearbyint(x[i] * 256.0);
    if (scaled > static_cast<double>(kQ48Max)) {
      q.raw[i] = static_cast<std::int16_t>(kQ48Max);
      ++q.saturated;
    } else if (scaled < static_cast<double>(kQ48Min)) {
      q.raw[i] = static_cast<std::int16_t>(kQ48Min);
      ++q.saturated;
    } else {
      q.raw[i] = static_cast<std::int16_t>(scaled);
    }
  }
  return q;
}

FixedPointVector quantize_activations(const std::vector<double>& x) {
  return quantize_activations(x.data(), x.size());
}

std::vector<double> dequantize_activations(const FixedPointVector& q) {
  std::vector<double> x(q.raw.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = q.value(i);
  return x;
}

// ---------------------------------------------------------------------------
// folded normalization
// ---------------------------------------------------------------------------

BnAffineTable fold_bn_affine(const BatchNormState& state) {
  BnAffineTable tb;
  tb.t_max = state.t_max;
  tb.dim = state.dim();
  tb.scale.resize(tb.t_max * tb.dim);
  tb.shift.resize(tb.t_max * tb.dim);
  std::vector<double> sc, sh;
  for (std::size_t slot = 0; slot < tb.t_max; ++slot) {
    bn_infer_affine(state, slot, sc, sh);
    std::copy(sc.begin(), sc.end(), tb.scale.begin() + slot * tb.dim);
    std::copy(sh.begin(), sh.end(), tb.shift.begin() + slot * tb.dim);
  }
  return tb;
}

namespace {

void apply_bn_table(const BnAffineTable& tb, std::size_t t, Tensor2D& z) {
  const std::size_t slot = t < tb.t_max ? t : tb.t_max - 1;
  for (std::size_t b = 0; b < z.rows(); ++b)
    apply_affine(z.row(b), z.row(b), tb.scale_row(slot), tb.shift_row(slot), tb.dim);
}

}  // namespace

// ---------------------------------------------------------------------------
// packing a network
// ---------------------------------------------------------------------------

PackedModel pack_network(const Network& net, const NetworkRealization& real) {
  require(net.cfg.cell == CellKind::kLstm, "pack_network: packed inference covers LSTM cells only");
  require(net.cfg.mode != QuantMode::kNone,
          "pack_network: the network is full precision; nothing to pack");
  require(real.lstm.size() == net.lstm.size(),
          "pack_network: realization has " + std::to_string(real.lstm.size()) + " layers, network " +
              std::to_string(net.lstm.size()));

  PackedModel pm;
  pm.cfg = net.cfg;
  pm.head = net.head;
  pm.layers.resize(net.lstm.size());
  for (std::size_t l = 0; l < net.lstm.size(); ++l) {
    const LstmParams& p = net.lstm[l];
    require(real.lstm[l] != nullptr,
            "pack_network: missing realization for layer " + std::to_string(l));
    PackedLstmLayer& L = pm.layers[l];
    L.d_x = p.d_x;
    L.d_h = p.d_h;
    L.use_bn = p.use_bn;
    L.bn_cell = p.bn_cell;
    for (std::size_t g = 0; g < 4; ++g) {
      L.wh[g] = pack_matrix(real.lstm[l]->wh[g], net.cfg.mode, p.quant_h[g].alpha);
      L.wx[g] = pack_matrix(real.lstm[l]->wx[g], net.cfg.mode, p.quant_x[g].alpha);
      L.bias[g] = p.bias[g];
      if (p.use_bn) {
        L.bn_h[g] = fold_bn_affine(p.bn_h[g]);
        L.bn_x[g] = fold_bn_affine(p.bn_x[g]);
      }
    }
    if (p.bn_cell) L.bn_c = fold_bn_affine(p.bn_c);
  }
  return pm;
}

std::vector<CellState> make_packed_states(const PackedModel& pm, std::size_t batch) {
  std::vector<CellState> states;
  states.reserve(pm.layers.size());
  for (const PackedLstmLayer& L : pm.layers)
    states.push_back(make_zero_state(batch, L.d_h, /*with_c=*/true));
  return states;
}

// ---------------------------------------------------------------------------
// inference engine
// ---------------------------------------------------------------------------

namespace {

using detail::add_bias_sum;
using detail::cell_blend;
using detail::check_range;
using detail::hadamard;
using detail::scale_inplace;
using detail::sigmoid_inplace;
using detail::tanh_inplace;

// z = alpha * (v * S^T), the packed mirror of the dense gate product.
Tensor2D packed_product(const Tensor2D& v, const PackedMatrix& p) {
  Tensor2D z(v.rows(), p.rows);
#pragma omp parallel
  {
    std::vector<double> scratch(p.words_per_row * 64);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < v.rows(); ++b) {
      const double* x = v.row(b);
      double* out = z.row(b);
      for (std::size_t i = 0; i < p.rows; ++i) out[i] = packed_row_sum(p, i, x, scratch.data());
    }
  }
  scale_inplace(z, p.alpha);
  return z;
}

// Token rows decode one plane column each: z(b, i) = alpha * s_i,token.
Tensor2D packed_gather(const std::vector<std::int32_t>& tokens, const PackedMatrix& p) {
  Tensor2D z(tokens.size(), p.rows);
  const bool ternary = p.mode == QuantMode::kTernary;
  for (std::size_t b = 0; b < tokens.size(); ++b) {
    const auto tok = tokens[b];
    if (tok < 0 || static_cast<std::size_t>(tok) >= p.cols)
      throw std::invalid_argument("packed_forward: token id " + std::to_string(tok) +
                                  " out of range for " + std::to_string(p.cols) + " columns");
    const std::size_t wd = static_cast<std::size_t>(tok) >> 6;
    const std::uint64_t bit = std::uint64_t{1} << (static_cast<std::size_t>(tok) & 63);
    double* out = z.row(b);
    for (std::size_t i = 0; i < p.rows; ++i) {
      if (ternary && !(p.mask_row(i)[wd] & bit))
        out[i] = 0.0;
      else
        out[i] = p.sign_row(i)[wd] & bit ? -1.0 : 1.0;
    }
  }
  scale_inplace(z, p.alpha);
  return z;
}

std::vector<FixedPointVector> quantize_rows(const Tensor2D& v, std::size_t& sat) {
  std::vector<FixedPointVector> rows(v.rows());
  for (std::size_t b = 0; b < v.rows(); ++b) {
    rows[b] = quantize_activations(v.row(b), v.cols());
    sat += rows[b].saturated;
  }
  return rows;
}

Tensor2D packed_product_fixed(const std::vector<FixedPointVector>& xs, const PackedMatrix& p,
                              std::size_t& sat) {
  Tensor2D z(xs.size(), p.rows);
  for (std::size_t b = 0; b < xs.size(); ++b) {
    double* out = z.row(b);
    for (std::size_t i = 0; i < p.rows; ++i) {
      bool clipped = false;
      const std::int32_t acc = packed_row_acc(p, i, xs[b].raw.data(), clipped);
      out[i] = p.alpha * (static_cast<double>(acc) / 256.0);
      if (clipped) ++sat;
    }
  }
  return z;
}

// One step with f64 activations; follows the dense step operation for
// operation, so the outputs are bit-identical on the same realization.
CellState packed_lstm_step(const PackedLstmLayer& L, const StepInput& x, const CellState& prev,
                           std::size_t t) {
  const std::size_t batch = x.batch(), d_h = L.d_h;
  std::array<Tensor2D, 4> u;
  for (std::size_t g = 0; g < 4; ++g) {
    Tensor2D zh = packed_product(prev.h, L.wh[g]);
    if (L.use_bn) apply_bn_table(L.bn_h[g], t, zh);
    Tensor2D zx = x.tokens ? packed_gather(*x.tokens, L.wx[g]) : packed_product(*x.dense, L.wx[g]);
    if (L.use_bn) apply_bn_table(L.bn_x[g], t, zx);
    u[g] = Tensor2D(batch, d_h);
    add_bias_sum(zh, zx, L.bias[g], u[g]);
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
  Tensor2D c_for_h = c_new;
  if (L.bn_cell) apply_bn_table(L.bn_c, t, c_for_h);
  tanh_inplace(c_for_h);

  CellState out;
  out.c = std::move(c_new);
  out.h = Tensor2D(batch, d_h);
  hadamard(u[kGateO], c_for_h, out.h);
  return out;
}

// One step with Q4.8 activations: the recurrent and input products run on raw
// integers, the gate math stays f64, and the produced h is requantized.
// `x_raw` is null for token input (a one-hot needs no quantizing).
CellState packed_lstm_step_fixed(const PackedLstmLayer& L, const StepInput& x,
                                 const std::vector<FixedPointVector>* x_raw,
                                 const std::vector<FixedPointVector>& h_raw,
                                 const CellState& prev, std::size_t t, std::size_t& sat,
                                 std::vector<FixedPointVector>& h_raw_out) {
  const std::size_t batch = x.batch(), d_h = L.d_h;
  std::array<Tensor2D, 4> u;
  for (std::size_t g = 0; g < 4; ++g) {
    Tensor2D zh = packed_product_fixed(h_raw, L.wh[g], sat);
    if (L.use_bn) apply_bn_table(L.bn_h[g], t, zh);
    Tensor2D zx =
        x.tokens ? packed_gather(*x.tokens, L.wx[g]) : packed_product_fixed(*x_raw, L.wx[g], sat);
    if (L.use_bn) apply_bn_table(L.bn_x[g], t, zx);
    u[g] = Tensor2D(batch, d_h);
    add_bias_sum(zh, zx, L.bias[g], u[g]);
  }

  sigmoid_inplace(u[kGateF]);
  sigmoid_inplace(u[kGateI]);
  sigmoid_inplace(u[kGateO]);
  tanh_inplace(u[kGateG]);

  Tensor2D c_new(batch, d_h);
  cell_blend(u[kGateF], u[kGateI], u[kGateG], prev.c, c_new);
  Tensor2D c_for_h = c_new;
  if (L.bn_cell) apply_bn_table(L.bn_c, t, c_for_h);
  tanh_inplace(c_for_h);

  CellState out;
  out.c = std::move(c_new);
  out.h = Tensor2D(batch, d_h);
  hadamard(u[kGateO], c_for_h, out.h);

  h_raw_out.resize(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    h_raw_out[b] = quantize_activations(out.h.row(b), d_h);
    sat += h_raw_out[b].saturated;
    for (std::size_t i = 0; i < d_h; ++i) out.h(b, i) = h_raw_out[b].value(i);
  }
  return out;
}

void validate_packed_batch(const PackedModel& pm, const SequenceBatch& batch,
                           const std::vector<CellState>& states) {
  require(!pm.layers.empty(), "packed_forward: model has no layers");
  require(batch.steps() >= 1, "packed_forward: empty window");
  require(batch.batch() >= 1, "packed_forward: empty batch");
  require(batch.targets.size() == batch.steps(),
          "packed_forward: need one target row per step (empty rows for unscored steps)");
  if (pm.cfg.token_input())
    require(!batch.tokens.empty() && batch.dense.empty(),
            "packed_forward: this model takes token input");
  else
    require(!batch.dense.empty() && batch.tokens.empty(),
            "packed_forward: this model takes dense input");
  require(states.size() == pm.layers.size(), "packed_forward: need one state per layer");
  for (std::size_t l = 0; l < states.size(); ++l)
    require(states[l].h.rows() == batch.batch() && states[l].h.cols() == pm.layers[l].d_h &&
                states[l].c.same_shape(states[l].h),
            "packed_forward: state " + std::to_string(l) + " does not match the batch");
}

}  // namespace

ForwardStats packed_forward(const PackedModel& pm, const SequenceBatch& batch,
                            std::vector<CellState>& states, ActivationMode act,
                            std::size_t* saturated) {
  validate_packed_batch(pm, batch, states);
  const std::size_t T = batch.steps(), L = pm.layers.size();
  const bool fixed = act == ActivationMode::kFixedQ48;
  std::size_t sat = 0;

  std::vector<Tensor2D> hs(T);
  std::vector<std::vector<FixedPointVector>> hs_raw(fixed && L > 1 ? T : 0);
  for (std::size_t l = 0; l < L; ++l) {
    const PackedLstmLayer& layer = pm.layers[l];
    CellState s = std::move(states[l]);
    std::vector<FixedPointVector> s_raw;
    if (fixed) s_raw = quantize_rows(s.h, sat);

    for (std::size_t t = 0; t < T; ++t) {
      const StepInput in = l > 0 ? StepInput(hs[t])
                                 : (pm.cfg.token_input() ? StepInput(batch.tokens[t])
                                                         : StepInput(batch.dense[t]));
      if (!fixed) {
        s = packed_lstm_step(layer, in, s, t);
      } else {
        const std::vector<FixedPointVector>* x_raw = nullptr;
        std::vector<FixedPointVector> x_q;
        if (l > 0) {
          x_raw = &hs_raw[t];
        } else if (!pm.cfg.token_input()) {
          x_q = quantize_rows(batch.dense[t], sat);
          x_raw = &x_q;
        }
        std::vector<FixedPointVector> next_raw;
        s = packed_lstm_step_fixed(layer, in, x_raw, s_raw, s, t, sat, next_raw);
        s_raw = std::move(next_raw);
        if (l + 1 < L) hs_raw[t] = s_raw;
      }
      hs[t] = s.h;
    }
    states[l] = std::move(s);
  }

  ForwardStats stats;
  for (std::size_t t = 0; t < T; ++t)
    if (!batch.targets[t].empty()) score_step(pm.head, hs[t], batch.targets[t], stats);
  if (saturated) *saturated += sat;
  return stats;
}

ForwardStats packed_evaluate(const PackedModel& pm, const std::vector<SequenceBatch>& batches,
                             ActivationMode act, std::size_t* saturated) {
  require(!batches.empty(), "packed_evaluate: no batches");
  const std::size_t B = batches.front().batch();
  for (const auto& b : batches)
    require(b.batch() == B, "packed_evaluate: all batches must share one batch size");
  auto states = make_packed_states(pm, B);
  ForwardStats total;
  for (const auto& b : batches) {
    const ForwardStats st = packed_forward(pm, b, states, act, saturated);
    total.loss_sum += st.loss_sum;
    total.scored += st.scored;
    total.correct += st.correct;
  }
  return total;
}

// ---------------------------------------------------------------------------
// footprint accounting
// ---------------------------------------------------------------------------

const char* to_string(WeightPrecision p) {
  switch (p) {
    case WeightPrecision::kFull: return "full";
    case WeightPrecision::kBinary: return "binary";
    case WeightPrecision::kTernary: return "ternary";
  }
  return "?";
}

namespace {

std::size_t bits_per_weight(WeightPrecision p) {
  switch (p) {
    case WeightPrecision::kFull: return 32;
    case WeightPrecision::kBinary: return 1;
    case WeightPrecision::kTernary: return 2;
  }
  return 0;
}

}  // namespace

FootprintReport memory_footprint(std::size_t weight_count, WeightPrecision p) {
  FootprintReport r;
  r.weight_count = weight_count;
  r.bytes = (weight_count * bits_per_weight(p) + 7) / 8;
  r.padded_bytes = r.bytes;
  return r;
}

FootprintReport memory_footprint(const Network& net, WeightPrecision p) {
  FootprintReport r = memory_footprint(net.cell_param_count(), p);
  if (p == WeightPrecision::kFull) return r;

  const std::size_t planes = p == WeightPrecision::kTernary ? 2 : 1;
  std::size_t padded = 0, bias_count = 0;
  const auto matrix_bytes = [&](const Tensor2D& m) {
    padded += m.rows() * ((m.cols() + 63) / 64) * 8 * planes;
  };
  for (const auto& layer : net.lstm)
    for (std::size_t g = 0; g < 4; ++g) {
      matrix_bytes(layer.wh[g]);
      matrix_bytes(layer.wx[g]);
      bias_count += layer.bias[g].size();
    }
  for (const auto& layer : net.gru)
    for (std::size_t g = 0; g < 3; ++g) {
      matrix_bytes(layer.wh[g]);
      matrix_bytes(layer.wx[g]);
      bias_count += layer.bias[g].size();
    }
  r.padded_bytes = padded + (bias_count * bits_per_weight(p) + 7) / 8;
  return r;
}

// ---------------------------------------------------------------------------
// packed model file
// ---------------------------------------------------------------------------

std::uint32_t crc32(const void* data, std::size_t n) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = c & 1 ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kMagic[4] = {'B', 'T', 'P', 'K'};
constexpr std::uint8_t kVersion = 1;

struct PackWriter {
  std::vector<std::uint8_t> buf;

  void u8(std::uint8_t v) { buf.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void words(const std::vector<std::uint64_t>& v) {
    u64(v.size());
    for (std::uint64_t x : v) u64(x);
  }
  void tensor(const Tensor2D& t) {
    u64(t.rows());
    u64(t.cols());
    for (std::size_t k = 0; k < t.size(); ++k) f64(t.data()[k]);
  }
  void matrix(const PackedMatrix& m) {
    u64(m.rows);
    u64(m.cols);
    u8(static_cast<std::uint8_t>(m.mode));
    f64(m.alpha);
    words(m.sign_plane);
    words(m.mask_plane);
  }
  void table(const BnAffineTable& t) {
    u64(t.t_max);
    u64(t.dim);
    vec(t.scale);
    vec(t.shift);
  }
};

struct PackReader {
  const std::uint8_t* p;
  const std::uint8_t* end;  // payload end: the CRC is excluded
  const std::string& path;

  std::size_t remaining() const { return static_cast<std::size_t>(end - p); }
  void need(std::size_t n) {
    if (remaining() < n) throw std::runtime_error("packed model truncated: " + path);
  }
  std::uint8_t u8() {
    need(1);
    return *p++;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> vec() {
    const std::uint64_t n = u64();
    if (n > remaining() / 8) throw std::runtime_error("packed model truncated: " + path);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  std::vector<std::uint64_t> words() {
    const std::uint64_t n = u64();
    if (n > remaining() / 8) throw std::runtime_error("packed model truncated: " + path);
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = u64();
    return v;
  }
  Tensor2D tensor() {
    const std::uint64_t rows = u64();
    const std::uint64_t cols = u64();
    if (rows != 0 && cols > remaining() / 8 / rows)
      throw std::runtime_error("packed model truncated: " + path);
    Tensor2D t(rows, cols);
    for (std::size_t k = 0; k < t.size(); ++k) t.data()[k] = f64();
    return t;
  }
  PackedMatrix matrix() {
    PackedMatrix m;
    m.rows = u64();
    m.cols = u64();
    const std::uint8_t mode = u8();
    if (mode != static_cast<std::uint8_t>(QuantMode::kBinary) &&
        mode != static_cast<std::uint8_t>(QuantMode::kTernary))
      throw std::runtime_error("packed model: unknown quantization mode byte " +
                               std::to_string(mode) + ": " + path);
    m.mode = static_cast<QuantMode>(mode);
    m.alpha = f64();
    m.words_per_row = (m.cols + 63) / 64;
    m.sign_plane = words();
    m.mask_plane = words();
    const std::size_t want = m.rows * m.words_per_row;
    if (m.sign_plane.size() != want ||
        m.mask_plane.size() != (m.mode == QuantMode::kTernary ? want : 0))
      throw std::runtime_error("packed model corrupted (plane size mismatch): " + path);
    return m;
  }
  BnAffineTable table() {
    BnAffineTable t;
    t.t_max = u64();
    t.dim = u64();
    t.scale = vec();
    t.shift = vec();
    if (t.scale.size() != t.t_max * t.dim || t.shift.size() != t.scale.size())
      throw std::runtime_error("packed model corrupted (affine table size mismatch): " + path);
    return t;
  }
  void expect_eof() {
    if (p != end)
      throw std::runtime_error("trailing bytes after packed model payload: " + path);
  }
};

void write_config(PackWriter& w, const ModelConfig& c) {
  w.u8(static_cast<std::uint8_t>(c.cell));
  w.u64(c.d_in);
  w.u64(c.vocab);
  w.u64(c.n_classes);
  w.u64(c.d_h);
  w.u64(c.layers);
  w.u8(static_cast<std::uint8_t>(c.mode));
  w.u8(static_cast<std::uint8_t>(c.sampling));
  w.u8(c.use_bn ? 1 : 0);
  w.u8(c.bn_cell ? 1 : 0);
  w.u64(c.t_max);
  w.f64(c.dropout);
}

ModelConfig read_config(PackReader& r) {
  ModelConfig c;
  c.cell = static_cast<CellKind>(r.u8());
  c.d_in = r.u64();
  c.vocab = r.u64();
  c.n_classes = r.u64();
  c.d_h = r.u64();
  c.layers = r.u64();
  c.mode = static_cast<QuantMode>(r.u8());
  c.sampling = static_cast<Sampling>(r.u8());
  c.use_bn = r.u8() != 0;
  c.bn_cell = r.u8() != 0;
  c.t_max = r.u64();
  c.dropout = r.f64();
  return c;
}

}  // namespace

void save_packed_model(const std::string& path, const PackedModel& pm) {
  PackWriter w;
  w.buf.insert(w.buf.end(), kMagic, kMagic + 4);
  w.u8(kVersion);
  write_config(w, pm.cfg);
  w.u64(pm.layers.size());
  for (const PackedLstmLayer& L : pm.layers) {
    w.u64(L.d_x);
    w.u64(L.d_h);
    w.u8(L.use_bn ? 1 : 0);
    w.u8(L.bn_cell ? 1 : 0);
    for (std::size_t g = 0; g < 4; ++g) w.matrix(L.wh[g]);
    for (std::size_t g = 0; g < 4; ++g) w.matrix(L.wx[g]);
    for (std::size_t g = 0; g < 4; ++g) w.vec(L.bias[g]);
    if (L.use_bn)
      for (std::size_t g = 0; g < 4; ++g) {
        w.table(L.bn_h[g]);
        w.table(L.bn_x[g]);
      }
    if (L.bn_cell) w.table(L.bn_c);
  }
  w.tensor(pm.head.w);
  w.vec(pm.head.bias);
  w.u32(crc32(w.buf.data(), w.buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open packed model for writing: " + path);
  out.write(reinterpret_cast<const char*>(w.buf.data()),
            static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw std::runtime_error("short write while saving packed model: " + path);
}

PackedModel load_packed_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open packed model: " + path);
  std::vector<std::uint8_t> buf{std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>()};

  if (buf.size() < 4) throw std::runtime_error("packed model truncated: " + path);
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    throw std::runtime_error("not a packed model file (bad magic): " + path);
  if (buf.size() < 9) throw std::runtime_error("packed model truncated: " + path);

  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(buf[buf.size() - 4 + static_cast<std::size_t>(i)])
              << (8 * i);
  if (crc32(buf.data(), buf.size() - 4) != stored)
    throw std::runtime_error("packed model corrupted (checksum mismatch): " + path);

  PackReader r{buf.data() + 4, buf.data() + buf.size() - 4, path};
  const std::uint8_t version = r.u8();
  if (version != kVersion)
    throw std::runtime_error("unsupported packed model version " + std::to_string(version) +
                             ": " + path);

  PackedModel pm;
  pm.cfg = read_config(r);
  pm.layers.resize(r.u64());
  for (PackedLstmLayer& L : pm.layers) {
    L.d_x = r.u64();
    L.d_h = r.u64();
    L.use_bn = r.u8() != 0;
    L.bn_cell = r.u8() != 0;
    for (std::size_t g = 0; g < 4; ++g) L.wh[g] = r.matrix();
    for (std::size_t g = 0; g < 4; ++g) L.wx[g] = r.matrix();
    for (std::size_t g = 0; g < 4; ++g) L.bias[g] = r.vec();
    if (L.use_bn)
      for (std::size_t g = 0; g < 4; ++g) {
        L.bn_h[g] = r.table();
        L.bn_x[g] = r.table();
      }
    if (L.bn_cell) L.bn_c = r.table();
  }
  pm.head.w = r.tensor();
  pm.head.bias = r.vec();
  r.expect_eof();
  return pm;
}

}  // namespace btrnn
