#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "btrnn/batchnorm.hpp"
#include "btrnn/quantize.hpp"
#include "btrnn/rng.hpp"
#include "btrnn/tensor.hpp"

namespace btrnn {

// Gate order used everywhere: forget, input, output, candidate.
enum GateIndex : std::size_t { kGateF = 0, kGateI = 1, kGateO = 2, kGateG = 3 };

// Weights are stored [d_out x d_in] and act on column vectors; a batch is a
// row-per-sample matrix, so products are computed as X * W^T.
//
// Four weight layouts drive one step implementation:
//   mode none,   use_bn false : plain cell
//   mode none,   use_bn true  : full-precision counterpart of the quantized cell
//   mode b/t,    use_bn true  : batch-normalized quantized cell
//   mode b/t,    use_bn false : no-BN diagnostic (the known failure mode)
// Quantized products are alpha * (S * v) with S the sampled {-1,0,+1} matrix;
// each product gets its own BN instance with the shift pinned to zero, and the
// bias is added outside BN.
struct LstmParams {
  std::size_t d_x = 0, d_h = 0;
  std::array<Tensor2D, 4> wh;                 // [d_h x d_h]
  std::array<Tensor2D, 4> wx;                 // [d_h x d_x]
  std::array<std::vector<double>, 4> bias;    // [d_h]
  std::array<QuantSpec, 4> quant_h, quant_x;  // alpha per matrix; mode/sampling uniform
  bool use_bn = true;
  bool bn_cell = false;
  std::array<BatchNormState, 4> bn_h, bn_x;
  BatchNormState bn_c;

  QuantMode mode() const { return quant_h[0].mode; }
  Sampling sampling() const { return quant_h[0].sampling; }
  bool quantized() const { return mode() != QuantMode::kNone; }
};

// Update (z), reset (r), candidate (n); the reset gate multiplies h before
// the candidate's recurrent product, and h' = z .* h + (1 - z) .* n.
enum GruGateIndex : std::size_t { kGruZ = 0, kGruR = 1, kGruN = 2 };

struct GruParams {
  std::size_t d_x = 0, d_h = 0;
  std::array<Tensor2D, 3> wh;
  std::array<Tensor2D, 3> wx;
  std::array<std::vector<double>, 3> bias;
  std::array<QuantSpec, 3> quant_h, quant_x;
  bool use_bn = true;
  std::array<BatchNormState, 3> bn_h, bn_x;

  QuantMode mode() const { return quant_h[0].mode; }
  Sampling sampling() const { return quant_h[0].sampling; }
  bool quantized() const { return mode() != QuantMode::kNone; }
};

struct CellState {
  Tensor2D h;  // [batch x d_h]
  Tensor2D c;  // [batch x d_h]; unused by GRU
};

CellState make_zero_state(std::size_t batch, std::size_t d_h, bool with_c = true);

// A step input is either a dense [batch x d_x] matrix or one token id per
// batch row (a one-hot column index into wx). Token inputs replace the input
// matmul with a column gather; the gather is exact, so the two forms agree
// bit for bit on matching data.
struct StepInput {
  const Tensor2D* dense = nullptr;
  const std::vector<std::int32_t>* tokens = nullptr;

  StepInput(const Tensor2D& d) : dense(&d) {}
  StepInput(const std::vector<std::int32_t>& t) : tokens(&t) {}
  std::size_t batch() const { return dense ? dense->rows() : tokens->size(); }
};

// One stochastic (or deterministic) draw of every quantized matrix, sampled
// once per forward pass and shared across timesteps. Entries are in
// {-1,0,+1}; the alpha scale is applied at product time.
struct LstmRealization {
  std::array<Tensor2D, 4> wh, wx;
};
struct GruRealization {
  std::array<Tensor2D, 3> wh, wx;
};

// Sampling order (row-major within each matrix): wh[f,i,o,g] then wx[f,i,o,g]
// (GRU: wh[z,r,n] then wx[z,r,n]).
LstmRealization sample_lstm_realization(const LstmParams& p, RngStream& rng);
GruRealization sample_gru_realization(const GruParams& p, RngStream& rng);

// Everything the backward step needs, captured by the forward step.
struct LstmStepCache {
  std::size_t t = 0;
  bool used_bn = false, used_cell_bn = false, quantized = false;
  std::shared_ptr<const LstmRealization> realization;  // the forward's sample
  Tensor2D x, h_prev, c_prev;          // x is empty when the input was tokens
  std::vector<std::int32_t> tokens;
  std::array<Tensor2D, 4> gates;  // f, i, o in (0,1); g in (-1,1)
  std::array<BnCache, 4> bn_h, bn_x;
  BnCache bn_c;
  Tensor2D c_new;    // f.*c + i.*g, before any cell BN
  Tensor2D tanh_c;   // tanh of the (possibly normalized) cell state
};

struct GruStepCache {
  std::size_t t = 0;
  bool used_bn = false, quantized = false;
  std::shared_ptr<const GruRealization> realization;
  Tensor2D x, h_prev, rh;          // rh = r .* h_prev (candidate's recurrent input)
  std::vector<std::int32_t> tokens;
  std::array<Tensor2D, 3> gates;   // z, r in (0,1); n in (-1,1)
  std::array<BnCache, 3> bn_h, bn_x;
};

// Plain full-precision cell, no normalization. Requires mode none.
CellState lstm_step_fp(LstmParams& p, const StepInput& x, const CellState& prev,
                       LstmStepCache* cache = nullptr);

// Full-precision weights with the quantized cell's BN structure (mode none,
// use_bn true). `mode` picks batch vs running statistics.
CellState lstm_step_bn_fp(LstmParams& p, const StepInput& x, const CellState& prev, std::size_t t,
                          BnMode mode, LstmStepCache* cache = nullptr);

// Quantized cell with a caller-held realization (the per-minibatch sample).
CellState lstm_step_quantized(LstmParams& p, const std::shared_ptr<const LstmRealization>& real,
                              const StepInput& x, const CellState& prev, std::size_t t, BnMode mode,
                              LstmStepCache* cache = nullptr);

// Spec form: draws a fresh realization from rng, then steps.
CellState lstm_step_quantized(LstmParams& p, const StepInput& x, const CellState& prev,
                              std::size_t t, RngStream& rng, BnMode mode,
                              LstmStepCache* cache = nullptr);

// Gradients accumulated across a BPTT sweep. For quantized matrices the
// entries are the gradients w.r.t. the sampled realization, recorded for the
// full-precision weights through the straight-through identity.
struct LstmGrads {
  std::array<Tensor2D, 4> wh, wx;
  std::array<std::vector<double>, 4> bias;
  std::array<std::vector<double>, 4> bn_h_phi, bn_x_phi;
  std::vector<double> bn_c_phi, bn_c_gamma;
  void init(const LstmParams& p);
  void zero();
};

struct GruGrads {
  std::array<Tensor2D, 3> wh, wx;
  std::array<std::vector<double>, 3> bias;
  std::array<std::vector<double>, 3> bn_h_phi, bn_x_phi;
  void init(const GruParams& p);
  void zero();
};

// One BPTT step. dh is the total gradient reaching h_t (loss term plus the
// t+1 step's contribution); dc_carry is the t+1 step's cell-path gradient.
// Outputs overwrite dh_prev / dc_prev; dx (optional) receives the gradient
// w.r.t. this step's input. Gradients accumulate into `grads`.
void lstm_backward_step(const LstmParams& p, const LstmStepCache& cache, const Tensor2D& dh,
                        const Tensor2D& dc_carry, Tensor2D& dh_prev, Tensor2D& dc_prev,
                        Tensor2D* dx, LstmGrads& grads);

CellState gru_step_fp(GruParams& p, const StepInput& x, const CellState& prev,
                      GruStepCache* cache = nullptr);
CellState gru_step_bn_fp(GruParams& p, const StepInput& x, const CellState& prev, std::size_t t,
                         BnMode mode, GruStepCache* cache = nullptr);
CellState gru_step_quantized(GruParams& p, const std::shared_ptr<const GruRealization>& real,
                             const StepInput& x, const CellState& prev, std::size_t t, BnMode mode,
                             GruStepCache* cache = nullptr);
CellState gru_step_quantized(GruParams& p, const StepInput& x, const CellState& prev, std::size_t t,
                             RngStream& rng, BnMode mode, GruStepCache* cache = nullptr);

void gru_backward_step(const GruParams& p, const GruStepCache& cache, const Tensor2D& dh,
                       Tensor2D& dh_prev, Tensor2D* dx, GruGrads& grads);

// Glorot-uniform init: alpha = sqrt(6/(fan_in+fan_out)) per matrix, weights
// drawn from U(-alpha, alpha), forget-gate bias 1, other biases 0. Counter
// consumption: one draw per weight, matrices in sampling order.
LstmParams make_lstm_params(std::size_t d_x, std::size_t d_h, QuantMode mode, Sampling sampling,
                            bool use_bn, bool bn_cell, std::size_t t_max, RngStream& rng);
GruParams make_gru_params(std::size_t d_x, std::size_t d_h, QuantMode mode, Sampling sampling,
                          bool use_bn, std::size_t t_max, RngStream& rng);

}  // namespace btrnn
