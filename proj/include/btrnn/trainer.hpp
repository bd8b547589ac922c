#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "btrnn/model.hpp"

namespace btrnn {

enum class Optimizer { kAdam, kSgd };

enum class LrSchedule { kConstant, kExpDecay, kPlateau };

struct TrainerConfig {
  Optimizer optimizer = Optimizer::kAdam;
  double learning_rate = 0.002;
  LrSchedule schedule = LrSchedule::kConstant;
  double decay_rate = 0.97;     // per-epoch multiplier for kExpDecay
  double plateau_factor = 4.0;  // lr divisor when validation stops improving
  double grad_clip = 0.0;       // global L2 ceiling, 0 disables
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

// Throws when hyperparameters are out of range or when the model carries
// batch normalization and the batch size cannot produce a variance estimate.
void validate_trainer_config(const TrainerConfig& cfg, const ModelConfig& model,
                             std::size_t batch_size);

// One trainable array paired with its gradient. When clip_alpha is positive
// the array backs a quantized matrix and must stay inside [-alpha, alpha]
// after every update so the normalized weights keep covering [-1, 1].
struct ParamBinding {
  double* param = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
  double clip_alpha = 0.0;
};

// Fixed traversal order shared by the optimizer state and the checkpoint
// format: per LSTM layer, gates f,i,o,g each contribute wh, wx, bias, then
// the gate normalizer scales (phi of the recurrent and input branches), then
// the cell normalizer phi and gamma; GRU layers follow the same pattern over
// z,r,n; the softmax head weight and bias come last.
std::vector<ParamBinding> bind_parameters(Network& net, NetworkGrads& grads);

std::size_t trainable_param_count(const Network& net);

struct OptState {
  std::uint64_t step = 0;  // completed updates
  double lr_scale = 1.0;
  double best_valid = std::numeric_limits<double>::infinity();
  std::vector<double> m;  // first moments, empty for SGD
  std::vector<double> v;  // second moments, empty for SGD

  void init(const Network& net, const TrainerConfig& cfg);
};

double current_lr(const TrainerConfig& cfg, const OptState& state);

// Scales every gradient by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the norm measured before clipping.
double clip_gradients(const std::vector<ParamBinding>& bindings, double max_norm);

// One bias-corrected ADAM or plain SGD update at the scheduled rate, followed
// by the weight clip on quantized matrices.
void apply_update(const std::vector<ParamBinding>& bindings, const TrainerConfig& cfg,
                  OptState& state);

// One optimization step: draw the minibatch realization (quantized models),
// run the training forward, backpropagate, clip, update, clip weights.
// `states` carries hidden state across consecutive windows and is advanced in
// place; `sample_rng` feeds the realization draw and `drop_rng` the dropout
// masks, both advancing only by what they consume.
ForwardStats train_step(Network& net, const SequenceBatch& batch, std::vector<CellState>& states,
                        const TrainerConfig& cfg, OptState& opt, RngStream& sample_rng,
                        RngStream& drop_rng);

// Mean loss and accuracy over a batch stream using running statistics for
// normalization and no dropout. Hidden state starts at zero and carries
// across the batches in order. Quantized models evaluate under `real`; pass
// the rounded realization for deterministic scoring.
ForwardStats evaluate(Network& net, const NetworkRealization* real,
                      const std::vector<SequenceBatch>& batches);

// Applies the per-epoch schedule given the epoch's validation loss and
// returns the learning rate for the next epoch.
double end_epoch(const TrainerConfig& cfg, OptState& state, double valid_loss);

}  // namespace btrnn
