#include "btrnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace btrnn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

void bind_lstm(LstmParams& p, LstmGrads& g, std::vector<ParamBinding>& out) {
  for (std::size_t gi = 0; gi < 4; ++gi) {
    const double ah = p.quantized() ? p.quant_h[gi].alpha : 0.0;
    const double ax = p.quantized() ? p.quant_x[gi].alpha : 0.0;
    out.push_back({p.wh[gi].data(), g.wh[gi].data(), p.wh[gi].size(), ah});
    out.push_back({p.wx[gi].data(), g.wx[gi].data(), p.wx[gi].size(), ax});
    out.push_back({p.bias[gi].data(), g.bias[gi].data(), p.d_h, 0.0});
  }
  if (p.use_bn)
    for (std::size_t gi = 0; gi < 4; ++gi) {
      out.push_back({p.bn_h[gi].phi.data(), g.bn_h_phi[gi].data(), p.d_h, 0.0});
      out.push_back({p.bn_x[gi].phi.data(), g.bn_x_phi[gi].data(), p.d_h, 0.0});
    }
  if (p.bn_cell) {
    out.push_back({p.bn_c.phi.data(), g.bn_c_phi.data(), p.d_h, 0.0});
    out.push_back({p.bn_c.gamma.data(), g.bn_c_gamma.data(), p.d_h, 0.0});
  }
}

void bind_gru(GruParams& p, GruGrads& g, std::vector<ParamBinding>& out) {
  for (std::size_t gi = 0; gi < 3; ++gi) {
    const double ah = p.quantized() ? p.quant_h[gi].alpha : 0.0;
    const double ax = p.quantized() ? p.quant_x[gi].alpha : 0.0;
    out.push_back({p.wh[gi].data(), g.wh[gi].data(), p.wh[gi].size(), ah});
    out.push_back({p.wx[gi].data(), g.wx[gi].data(), p.wx[gi].size(), ax});
    out.push_back({p.bias[gi].data(), g.bias[gi].data(), p.d_h, 0.0});
  }
  if (p.use_bn)
    for (std::size_t gi = 0; gi < 3; ++gi) {
      out.push_back({p.bn_h[gi].phi.data(), g.bn_h_phi[gi].data(), p.d_h, 0.0});
      out.push_back({p.bn_x[gi].phi.data(), g.bn_x_phi[gi].data(), p.d_h, 0.0});
    }
}

}  // namespace

void validate_trainer_config(const TrainerConfig& cfg, const ModelConfig& model,
                             std::size_t batch_size) {
  require(cfg.learning_rate >= 0.0, "learning_rate must be nonnegative");
  require(cfg.grad_clip >= 0.0, "grad_clip must be nonnegative (0 disables)");
  require(cfg.decay_rate > 0.0 && cfg.decay_rate <= 1.0, "decay_rate must lie in (0, 1]");
  require(cfg.plateau_factor > 1.0, "plateau_factor must exceed 1");
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
          "adam betas must lie in [0, 1)");
  require(cfg.adam_eps > 0.0, "adam_eps must be positive");
  if ((model.use_bn || model.bn_cell) && batch_size < 2)
    throw std::invalid_argument(
        "batch normalization needs batch_size >= 2 to estimate a variance");
}

std::vector<ParamBinding> bind_parameters(Network& net, NetworkGrads& grads) {
  std::vector<ParamBinding> out;
  for (std::size_t l = 0; l < net.lstm.size(); ++l) bind_lstm(net.lstm[l], grads.lstm[l], out);
  for (std::size_t l = 0; l < net.gru.size(); ++l) bind_gru(net.gru[l], grads.gru[l], out);
  out.push_back({net.head.w.data(), grads.head_w.data(), net.head.w.size(), 0.0});
  out.push_back({net.head.bias.data(), grads.head_b.data(), net.head.bias.size(), 0.0});
  return out;
}

std::size_t trainable_param_count(const Network& net) {
  std::size_t n = 0;
  for (const auto& p : net.lstm) {
    for (std::size_t gi = 0; gi < 4; ++gi)
      n += p.wh[gi].size() + p.wx[gi].size() + p.d_h;
    if (p.use_bn) n += 4 * 2 * p.d_h;
    if (p.bn_cell) n += 2 * p.d_h;
  }
  for (const auto& p : net.gru) {
    for (std::size_t gi = 0; gi < 3; ++gi)
      n += p.wh[gi].size() + p.wx[gi].size() + p.d_h;
    if (p.use_bn) n += 3 * 2 * p.d_h;
  }
  return n + net.head.w.size() + net.head.bias.size();
}

void OptState::init(const Network& net, const TrainerConfig& cfg) {
  step = 0;
  lr_scale = 1.0;
  best_valid = std::numeric_limits<double>::infinity();
  if (cfg.optimizer == Optimizer::kAdam) {
    m.assign(trainable_param_count(net), 0.0);
    v.assign(trainable_param_count(net), 0.0);
  } else {
    m.clear();
    v.clear();
  }
}

double current_lr(const TrainerConfig& cfg, const OptState& state) {
  return cfg.learning_rate * state.lr_scale;
}

double clip_gradients(const std::vector<ParamBinding>& bindings, double max_norm) {
  require(max_norm > 0.0, "clip threshold must be positive");
  double sq = 0.0;
  for (const auto& b : bindings)
    for (std::size_t k = 0; k < b.size; ++k) sq += b.grad[k] * b.grad[k];
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (const auto& b : bindings)
      for (std::size_t k = 0; k < b.size; ++k) b.grad[k] *= scale;
  }
  return norm;
}

void apply_update(const std::vector<ParamBinding>& bindings, const TrainerConfig& cfg,
                  OptState& state) {
  const double lr = current_lr(cfg, state);
  if (cfg.optimizer == Optimizer::kAdam) {
    const std::uint64_t t = state.step + 1;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    std::size_t off = 0;
    for (const auto& b : bindings) {
      require(off + b.size <= state.m.size(), "optimizer state does not match the model");
      for (std::size_t k = 0; k < b.size; ++k) {
        const double g = b.grad[k];
        double& m0 = state.m[off + k];
        double& v0 = state.v[off + k];
        m0 = cfg.beta1 * m0 + (1.0 - cfg.beta1) * g;
        v0 = cfg.beta2 * v0 + (1.0 - cfg.beta2) * g * g;
        b.param[k] -= lr * (m0 / c1) / (std::sqrt(v0 / c2) + cfg.adam_eps);
      }
      off += b.size;
    }
    require(off == state.m.size(), "optimizer state does not match the model");
  } else {
    for (const auto& b : bindings)
      for (std::size_t k = 0; k < b.size; ++k) b.param[k] -= lr * b.grad[k];
  }
  ++state.step;

  // Updates happen on the full-precision weights; quantized matrices are then
  // pulled back into [-alpha, alpha] so their normalized form stays saturated
  // at the clip rather than drifting outside the representable range.
  for (const auto& b : bindings) {
    if (b.clip_alpha <= 0.0) continue;
    for (std::size_t k = 0; k < b.size; ++k)
      b.param[k] = std::clamp(b.param[k], -b.clip_alpha, b.clip_alpha);
  }
}

ForwardStats train_step(Network& net, const SequenceBatch& batch, std::vector<CellState>& states,
                        const TrainerConfig& cfg, OptState& opt, RngStream& sample_rng,
                        RngStream& drop_rng) {
  validate_trainer_config(cfg, net.cfg, batch.batch());

  NetworkRealization real;
  const bool quantized = net.cfg.mode != QuantMode::kNone;
  if (quantized) {
    real = net.cfg.sampling == Sampling::kStochastic
               ? sample_network_realization(net, sample_rng)
               : round_network_realization(net);
  }

  SequenceCache cache;
  RngStream* drop = net.cfg.dropout > 0.0 ? &drop_rng : nullptr;
  const ForwardStats stats = network_forward(net, quantized ? &real : nullptr, batch, states,
                                             BnMode::kTrain, drop, &cache);

  NetworkGrads grads;
  grads.init(net);
  network_backward(net, batch, cache, grads);

  const std::vector<ParamBinding> bindings = bind_parameters(net, grads);
  if (cfg.grad_clip > 0.0) clip_gradients(bindings, cfg.grad_clip);
  apply_update(bindings, cfg, opt);
  return stats;
}

ForwardStats evaluate(Network& net, const NetworkRealization* real,
                      const std::vector<SequenceBatch>& batches) {
  require(!batches.empty(), "evaluate needs at least one batch");
  ForwardStats total;
  std::vector<CellState> states = make_network_states(net, batches.front().batch());
  for (const auto& b : batches) {
    require(b.batch() == batches.front().batch(), "evaluation batches must share a batch size");
    const ForwardStats s = network_forward(net, real, b, states, BnMode::kInfer, nullptr);
    total.loss_sum += s.loss_sum;
    total.scored += s.scored;
    total.correct += s.correct;
  }
  return total;
}

double end_epoch(const TrainerConfig& cfg, OptState& state, double valid_loss) {
  switch (cfg.schedule) {
    case LrSchedule::kConstant:
      break;
    case LrSchedule::kExpDecay:
      state.lr_scale *= cfg.decay_rate;
      break;
    case LrSchedule::kPlateau:
      if (valid_loss < state.best_valid)
        state.best_valid = valid_loss;
      else
        state.lr_scale /= cfg.plateau_factor;
      break;
  }
  return current_lr(cfg, state);
}

}  // namespace btrnn
