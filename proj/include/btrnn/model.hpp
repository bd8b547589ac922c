#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "btrnn/cells.hpp"

namespace btrnn {

enum class CellKind { kLstm, kGru };

const char* to_string(CellKind k);

// A stack of recurrent layers under a full-precision softmax head. Only the
// recurrent matrices are ever quantized; the head stays dense so the class
// scores keep full resolution.
struct ModelConfig {
  CellKind cell = CellKind::kLstm;
  std::size_t d_in = 0;    // dense input width; 0 selects token (one-hot) input
  std::size_t vocab = 0;   // token count when token input is used
  std::size_t n_classes = 0;
  std::size_t d_h = 0;
  std::size_t layers = 1;
  QuantMode mode = QuantMode::kNone;
  Sampling sampling = Sampling::kStochastic;
  bool use_bn = true;
  bool bn_cell = true;     // LSTM only
  std::size_t t_max = 1;   // per-step normalization slots per window
  double dropout = 0.0;    // non-recurrent connections only

  bool token_input() const { return d_in == 0; }
  std::size_t input_width() const { return token_input() ? vocab : d_in; }
};

struct SoftmaxHead {
  Tensor2D w;                // [n_classes x d_h]
  std::vector<double> bias;  // [n_classes]
};

struct Network {
  ModelConfig cfg;
  std::vector<LstmParams> lstm;  // populated for cfg.cell == kLstm
  std::vector<GruParams> gru;    // populated for cfg.cell == kGru
  SoftmaxHead head;

  // Recurrent weight and bias count, excluding the head and normalization
  // parameters; this is the number the packed footprint accounting uses.
  std::size_t cell_param_count() const;
};

// Draws every weight Glorot-uniform in layer order (cells first, head last),
// so a network is reproducible from the generator triple alone.
Network make_network(const ModelConfig& cfg, RngStream& rng);

std::vector<CellState> make_network_states(const Network& net, std::size_t batch);

// One sampled draw of all quantized matrices, layer by layer. `sample` follows
// each matrix's sampling spec and consumes generator counters; `round` forces
// the deterministic rounding and consumes nothing.
struct NetworkRealization {
  std::vector<std::shared_ptr<const LstmRealization>> lstm;
  std::vector<std::shared_ptr<const GruRealization>> gru;
};

NetworkRealization sample_network_realization(const Network& net, RngStream& rng);
NetworkRealization round_network_realization(const Network& net);

// One training window. Exactly one of tokens/dense is populated, one entry per
// step. targets[t] is either empty (step is not scored) or one class id per
// batch row.
struct SequenceBatch {
  std::vector<std::vector<std::int32_t>> tokens;  // [T][batch]
  std::vector<Tensor2D> dense;                    // [T][batch x d_in]
  std::vector<std::vector<std::int32_t>> targets; // [T][batch] or [T][empty]

  std::size_t steps() const { return tokens.empty() ? dense.size() : tokens.size(); }
  std::size_t batch() const {
    if (!tokens.empty()) return tokens.front().size();
    return dense.empty() ? 0 : dense.front().rows();
  }
};

struct ForwardStats {
  double loss_sum = 0.0;  // cross-entropy in nats, summed over scored positions
  std::size_t scored = 0;
  std::size_t correct = 0;
  double mean_loss() const { return scored ? loss_sum / static_cast<double>(scored) : 0.0; }
};

// Everything network_backward needs. Class probabilities are not stored; the
// backward pass recomputes each step's logits from head_in, which keeps the
// cache size independent of the class count.
struct SequenceCache {
  std::vector<std::vector<LstmStepCache>> lstm;   // [layer][t]
  std::vector<std::vector<GruStepCache>> gru;
  std::vector<std::vector<Tensor2D>> drop_mask;   // [layer][t], scaled keep masks
  std::vector<Tensor2D> head_in;                  // [t] top output after dropout
};

struct NetworkGrads {
  std::vector<LstmGrads> lstm;
  std::vector<GruGrads> gru;
  Tensor2D head_w;
  std::vector<double> head_b;

  void init(const Network& net);
  void zero();
};

// Runs the stack over one window, advancing `states` in place (one entry per
// layer; the caller owns the carry between windows). Quantized networks
// require a realization; full-precision networks forbid one. Dropout is
// applied only when training (drop_rng given and cfg.dropout > 0), with masks
// drawn layer by layer, then step by step, row-major, so the draw order is
// part of the reproducibility contract. Normalization steps inside the window
// use slot min(t, t_max-1).
ForwardStats network_forward(Network& net, const NetworkRealization* real,
                             const SequenceBatch& batch, std::vector<CellState>& states,
                             BnMode mode, RngStream* drop_rng, SequenceCache* cache = nullptr);

// Accumulates into `grads`. The loss differentiated is the mean cross-entropy
// over the window's scored positions, matching ForwardStats::mean_loss.
void network_backward(Network& net, const SequenceBatch& batch, const SequenceCache& cache,
                      NetworkGrads& grads);

// logits = h * W^T + bias. The packed engine reuses this exact routine, so
// dense and packed inference agree bit for bit on the head.
Tensor2D head_forward(const SoftmaxHead& head, const Tensor2D& h);

// Scores one step's hidden output against its target row: cross-entropy in
// nats plus argmax hits, accumulated into `stats` (ties pick the lowest class
// id). Single definition shared by network_forward and the packed engine so
// both report identical numbers.
void score_step(const SoftmaxHead& head, const Tensor2D& h,
                const std::vector<std::int32_t>& targets, ForwardStats& stats);

// Row-wise softmax with max subtraction.
Tensor2D softmax_rows(const Tensor2D& logits);

}  // namespace btrnn
