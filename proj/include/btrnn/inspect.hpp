#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btrnn/model.hpp"

namespace btrnn {

// Fixed-bin value histogram of one cell signal at one timestep bucket.
// Signals and tracked ranges: gate activations f, i, o over [0, 1]; the
// candidate g and the hidden output h over [-1, 1]; the cell state c over
// [-8, 8]; the input gate's pre-activation i_pre over [-32, 32], recovered as
// logit(i). Out-of-range samples land in the nearest edge bin. Timestep
// buckets follow the normalizer slots: bucket = min(t, t_max - 1).
struct SignalHistogram {
  std::string signal;
  std::size_t bucket = 0;
  double lo = 0.0, hi = 1.0;
  std::vector<std::uint64_t> bins;

  std::uint64_t total() const;
  // fraction of samples whose value fell inside (a, b); computed against the
  // recorded per-bin counts, so a and b should lie on bin edges
  double mass_between(double a, double b) const;
};

struct InspectReport {
  std::vector<SignalHistogram> histograms;  // signal-major, bucket-minor
  // criterion masses computed from raw values, not rebinned: the fraction of
  // input-gate samples strictly inside (0.05, 0.95), and the fraction within
  // 0.02 of either 0 or 1
  double i_gate_mid_mass = 0.0;
  double i_gate_sat_mass = 0.0;
  std::uint64_t samples = 0;  // per signal, summed over buckets
};

// Runs the batches through the network under inference normalization (hidden
// state carried across batches in order, dropout off) and tallies every LSTM
// layer's step signals. Quantized models inspect under `real`.
InspectReport inspect_gates(Network& net, const NetworkRealization* real,
                            const std::vector<SequenceBatch>& batches, std::size_t bins = 64);

// One CSV per signal: header "signal,bucket,bin_lo,bin_hi,count" and one row
// per (bucket, bin). Files are named <prefix><signal>.csv.
void write_histogram_csvs(const InspectReport& report, const std::string& prefix);

}  // namespace btrnn
