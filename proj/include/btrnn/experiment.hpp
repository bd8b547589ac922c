#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "btrnn/checkpoint.hpp"
#include "btrnn/data.hpp"

namespace btrnn {

struct EpochStats {
  std::uint64_t epoch = 0;  // 1-based, counting from the start of the run
  std::uint64_t step = 0;   // optimizer updates completed at epoch end
  double train_loss = 0.0;  // mean nats over the epoch's scored positions
  double train_accuracy = 0.0;
  double valid_loss = 0.0;
  double valid_accuracy = 0.0;
  double next_lr = 0.0;  // rate the schedule set for the following epoch
};

struct RunResult {
  std::vector<EpochStats> epochs;  // the epochs this call executed
  // lowest validation loss over the whole run, epochs before a resume included
  double best_valid = std::numeric_limits<double>::infinity();
  std::uint64_t resumed_epochs = 0;  // epochs already complete when the call started
};

struct RunConfig {
  TrainerConfig trainer;
  std::size_t epochs = 1;
  std::uint64_t seed = 1;
  bool word_metric = false;   // metrics column carries perplexity instead of bits/symbol
  std::size_t log_every = 0;  // extra in-epoch train rows every N updates, 0 disables
  std::string metrics_path;    // csv stream, empty disables
  std::string checkpoint_path;  // rewritten after every epoch, empty disables
  std::string best_path;        // snapshot at the lowest validation loss, empty disables
  bool resume = false;  // continue from checkpoint_path when that file exists
};

// Trains over the batcher's fixed window grid. Hidden state starts at zero
// each epoch and carries across consecutive windows; realization draws and
// dropout masks come from streams (seed, 1) and (seed, 2). Validation runs
// after every epoch under inference normalization, with the deterministic
// rounding realization on quantized models. Checkpoints land at epoch
// boundaries, so a resumed run replays the straight run's remaining epochs
// and produces the same metrics rows and checkpoint bytes.
RunResult train_sequence_model(Network& net, const SequenceBatcher& train,
                               const std::vector<SequenceBatch>& valid, const RunConfig& cfg);

// Classification runs: each epoch visits the training images once in
// minibatches of `batch_size` (a trailing short batch is dropped), reshuffled
// per epoch from stream (seed, 3 + epoch). Hidden state resets for every
// minibatch. Checkpoint, resume and metrics behavior match
// train_sequence_model.
RunResult train_classifier(Network& net, const MnistSet& train, std::size_t batch_size,
                           const std::vector<SequenceBatch>& valid, const RunConfig& cfg);

}  // namespace btrnn
