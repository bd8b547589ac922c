#include "btrnn/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>

#include "btrnn/trainer.hpp"

namespace btrnn {

namespace {

// One epoch's worth of training windows. Char runs ignore the epoch (the
// window grid is fixed); classification runs reshuffle per epoch.
struct WindowGrid {
  std::size_t count = 0;
  std::size_t batch = 0;
  bool carry_state = true;
  std::function<SequenceBatch(std::uint64_t epoch, std::size_t k)> make;
};

double accuracy_of(const ForwardStats& s) {
  return s.scored ? static_cast<double>(s.correct) / static_cast<double>(s.scored) : 0.0;
}

RunResult run_epochs(Network& net, const WindowGrid& grid, const std::vector<SequenceBatch>& valid,
                     const RunConfig& cfg) {
  if (cfg.epochs == 0) throw std::invalid_argument("training run needs at least one epoch");
  if (grid.count == 0) throw std::invalid_argument("training stream has no windows");
  if (valid.empty()) throw std::invalid_argument("training run needs validation batches");
  if (cfg.resume && cfg.checkpoint_path.empty())
    throw std::invalid_argument("resume requested without a checkpoint path");
  validate_trainer_config(cfg.trainer, net.cfg, grid.batch);

  TrainState state;
  bool resumed = false;
  if (cfg.resume && std::filesystem::exists(cfg.checkpoint_path)) {
    LoadedCheckpoint loaded = load_checkpoint(cfg.checkpoint_path);
    net = std::move(loaded.net);
    state = std::move(loaded.state);
    resumed = true;
    if (state.epoch > cfg.epochs)
      throw std::runtime_error("checkpoint is already past epoch " + std::to_string(cfg.epochs) +
                               ": " + cfg.checkpoint_path);
  } else {
    state.opt.init(net, cfg.trainer);
    state.sample_rng = RngStream(cfg.seed, 1, 0);
    state.drop_rng = RngStream(cfg.seed, 2, 0);
  }

  RunResult result;
  result.resumed_epochs = state.epoch;

  std::optional<MetricsWriter> metrics;
  if (!cfg.metrics_path.empty()) metrics.emplace(cfg.metrics_path, resumed);
  const auto aux_metric = [&cfg](double nats) {
    return cfg.word_metric ? perplexity_from_nats(nats) : bpc_from_nats(nats);
  };
  const bool quantized = net.cfg.mode != QuantMode::kNone;

  for (std::uint64_t e = state.epoch; e < cfg.epochs; ++e) {
    if (state.cursor == 0) state.carry = make_network_states(net, grid.batch);
    double loss_sum = 0.0;
    std::size_t scored = 0, correct = 0;
    for (std::size_t k = state.cursor; k < grid.count; ++k) {
      const SequenceBatch batch = grid.make(e, k);
      if (!grid.carry_state) state.carry = make_network_states(net, grid.batch);
      const ForwardStats fs = train_step(net, batch, state.carry, cfg.trainer, state.opt,
                                         state.sample_rng, state.drop_rng);
      loss_sum += fs.loss_sum;
      scored += fs.scored;
      correct += fs.correct;
      if (metrics && cfg.log_every > 0 && state.opt.step % cfg.log_every == 0)
        metrics->row(state.opt.step, "train", fs.mean_loss(), aux_metric(fs.mean_loss()),
                     accuracy_of(fs));
    }

    NetworkRealization rounded;
    const NetworkRealization* real = nullptr;
    if (quantized) {
      rounded = round_network_realization(net);
      real = &rounded;
    }
    const ForwardStats vs = evaluate(net, real, valid);

    EpochStats es;
    es.epoch = e + 1;
    es.step = state.opt.step;
    es.train_loss = scored ? loss_sum / static_cast<double>(scored) : 0.0;
    es.train_accuracy = scored ? static_cast<double>(correct) / static_cast<double>(scored) : 0.0;
    es.valid_loss = vs.mean_loss();
    es.valid_accuracy = accuracy_of(vs);
    const bool is_best = es.valid_loss < state.opt.best_valid;
    es.next_lr = end_epoch(cfg.trainer, state.opt, es.valid_loss);
    // the plateau schedule maintains best_valid itself; keep it current for
    // the other schedules too so best tracking survives a resume
    if (cfg.trainer.schedule != LrSchedule::kPlateau && is_best)
      state.opt.best_valid = es.valid_loss;
    state.epoch = e + 1;
    state.cursor = 0;

    if (metrics) {
      metrics->row(es.step, "train", es.train_loss, aux_metric(es.train_loss),
                   es.train_accuracy);
      metrics->row(es.step, "valid", es.valid_loss, aux_metric(es.valid_loss),
                   es.valid_accuracy);
    }
    if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, net, state);
    if (!cfg.best_path.empty() && is_best) save_checkpoint(cfg.best_path, net, state);
    result.epochs.push_back(es);
  }
  result.best_valid = state.opt.best_valid;
  return result;
}

}  // namespace

RunResult train_sequence_model(Network& net, const SequenceBatcher& train,
                               const std::vector<SequenceBatch>& valid, const RunConfig& cfg) {
  WindowGrid grid;
  grid.count = train.windows();
  grid.batch = train.batch();
  grid.carry_state = true;
  grid.make = [&train](std::uint64_t, std::size_t k) { return train.window(k); };
  return run_epochs(net, grid, valid, cfg);
}

RunResult train_classifier(Network& net, const MnistSet& train, std::size_t batch_size,
                           const std::vector<SequenceBatch>& valid, const RunConfig& cfg) {
  if (batch_size == 0) throw std::invalid_argument("classifier batch size must be positive");
  if (train.count < batch_size)
    throw std::invalid_argument("classifier training set smaller than one batch");

  // per-epoch shuffle, rebuilt lazily so repeated window requests within an
  // epoch agree and a resumed epoch sees the same order
  auto order = std::make_shared<std::vector<std::size_t>>();
  auto order_epoch = std::make_shared<std::uint64_t>(~0ull);
  const std::size_t count = train.count;
  const std::uint64_t seed = cfg.seed;

  WindowGrid grid;
  grid.count = count / batch_size;
  grid.batch = batch_size;
  grid.carry_state = false;
  grid.make = [&train, batch_size, order, order_epoch, count, seed](std::uint64_t epoch,
                                                                    std::size_t k) {
    if (*order_epoch != epoch) {
      order->resize(count);
      for (std::size_t i = 0; i < count; ++i) (*order)[i] = i;
      RngStream rng(seed, 3 + epoch, 0);
      for (std::size_t i = count - 1; i > 0; --i)
        std::swap((*order)[i], (*order)[rng.next_u64() % (i + 1)]);
      *order_epoch = epoch;
    }
    const std::vector<std::size_t> indices(order->begin() + k * batch_size,
                                           order->begin() + (k + 1) * batch_size);
    return make_mnist_batch(train, indices);
  };
  return run_epochs(net, grid, valid, cfg);
}

}  // namespace btrnn
