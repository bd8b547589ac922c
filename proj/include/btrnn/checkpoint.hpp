#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btrnn/trainer.hpp"

namespace btrnn {

// Everything beyond the model needed to continue a run bit for bit: optimizer
// moments, the generators feeding realization draws and dropout masks, the
// hidden state carried between windows, and the data cursor.
struct TrainState {
  OptState opt;
  RngStream sample_rng{0, 0, 0};
  RngStream drop_rng{0, 0, 0};
  std::vector<CellState> carry;
  std::uint64_t epoch = 0;
  std::uint64_t cursor = 0;  // next window index within the epoch
};

struct LoadedCheckpoint {
  Network net;
  TrainState state;
};

// File layout (magic "BTRN", version 1, all integers little-endian, all reals
// IEEE-754 binary64): config block, then every layer's weights, scales and
// normalizer statistics in declaration order, the softmax head, optimizer
// state, RNG triples, carried state, and the data cursor. The full layout is
// written out field by field in docs/formats.md.
void save_checkpoint(const std::string& path, const Network& net, const TrainState& state);

// Throws std::runtime_error on bad magic, unsupported version, truncation or
// trailing bytes; on failure no partial state escapes.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace btrnn
