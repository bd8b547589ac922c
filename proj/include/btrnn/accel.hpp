#pragma once

#include <array>
#include <cstddef>

#include "btrnn/model.hpp"
#include "btrnn/packed.hpp"

namespace btrnn {

// Analytic cost model for the two inference engine designs: a low-power
// engine (few units, narrow weights) and a high-speed engine that spends the
// area freed by mux-based units on more of them. The model is a roofline:
// compute-bound or DRAM-bound per timestep, whichever is worse. It ignores
// pipeline fill and on-chip SRAM.
struct AcceleratorSpec {
  std::size_t mac_units = 100;
  double clock_hz = 400e6;
  // one multiply-accumulate (or select-accumulate) per unit per cycle,
  // counted as 2 ops
  std::size_t ops_per_unit_per_cycle = 2;
  std::size_t weight_bits = 12;  // 32 reference, 12 fixed, 2 ternary, 1 binary
  std::size_t activation_bits = 12;
  double dram_bandwidth_bytes_per_s = 2.4e9;
};

struct WorkloadSpec {
  // 2 x (weight-matrix elements touched per step); biases are not MACs
  std::size_t ops_per_timestep = 0;
  // weight bytes streamed per step at the engine's weight width
  std::size_t weight_bytes = 0;
  // whole-sequence cost is timesteps x the per-step latency
  std::size_t timesteps = 1;
};

// mac_units x ops_per_unit_per_cycle x clock_hz; throws invalid_argument on
// nonpositive spec fields.
double throughput_ops(const AcceleratorSpec& spec);

struct StepLatency {
  double compute_s = 0.0;
  double memory_s = 0.0;
  double per_timestep_s = 0.0;  // max of the two
};
StepLatency latency_per_timestep(const AcceleratorSpec& spec, const WorkloadSpec& workload);

// throughput(candidate) / throughput(baseline). Equals the compute-latency
// ratio on any shared workload, and divides out exactly when only the unit
// count differs.
double compute_speedup(const AcceleratorSpec& baseline, const AcceleratorSpec& candidate);

// full_bytes / quant_bytes; throws invalid_argument when quant_bytes is zero.
double bandwidth_saving(double full_bytes, double quant_bytes);

// Bytes to stream one copy of `weight_count` weights at `bits` each,
// rounded up to whole bytes.
std::size_t weight_stream_bytes(std::size_t weight_count, std::size_t bits);

// 2 x the total gate-matrix element count across layers: every weight feeds
// one multiply-accumulate (or select-accumulate) per timestep.
std::size_t recurrent_ops_per_step(const Network& net);

// One row of the built-in design table. Throughput follows from the unit
// count at 400 MHz; area and power are synthesis figures quoted from the
// design study, never computed, and reports must label them as quoted.
struct EngineDesign {
  const char* engine;  // "low-power" or "high-speed"
  WeightPrecision precision;
  std::size_t weight_bits;
  std::size_t mac_units;
  double throughput_gops;
  double area_mm2;       // quoted synthesis figure
  double power_mw;       // quoted synthesis figure
};

const std::array<EngineDesign, 6>& reference_designs();

}  // namespace btrnn
