#include "btrnn/accel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace btrnn {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double throughput_ops(const AcceleratorSpec& spec) {
  require(spec.mac_units > 0, "accelerator spec: mac_units must be positive");
  require(std::isfinite(spec.clock_hz) && spec.clock_hz > 0.0,
          "accelerator spec: clock_hz must be positive");
  require(spec.ops_per_unit_per_cycle > 0,
          "accelerator spec: ops_per_unit_per_cycle must be positive");
  require(spec.weight_bits > 0, "accelerator spec: weight_bits must be positive");
  require(spec.activation_bits > 0, "accelerator spec: activation_bits must be positive");
  require(std::isfinite(spec.dram_bandwidth_bytes_per_s) && spec.dram_bandwidth_bytes_per_s > 0.0,
          "accelerator spec: dram_bandwidth_bytes_per_s must be positive");
  // the unit-count product stays integer-exact; the clock contributes the one
  // rounding, so unit-count ratios divide out exactly
  return static_cast<double>(spec.mac_units * spec.ops_per_unit_per_cycle) * spec.clock_hz;
}

StepLatency latency_per_timestep(const AcceleratorSpec& spec, const WorkloadSpec& workload) {
  const double tput = throughput_ops(spec);
  StepLatency lat;
  lat.compute_s = static_cast<double>(workload.ops_per_timestep) / tput;
  lat.memory_s = static_cast<double>(workload.weight_bytes) / spec.dram_bandwidth_bytes_per_s;
  lat.per_timestep_s = std::max(lat.compute_s, lat.memory_s);
  return lat;
}

double compute_speedup(const AcceleratorSpec& baseline, const AcceleratorSpec& candidate) {
  return throughput_ops(candidate) / throughput_ops(baseline);
}

double bandwidth_saving(double full_bytes, double quant_bytes) {
  if (quant_bytes == 0.0) throw std::invalid_argument("bandwidth_saving: division by zero");
  return full_bytes / quant_bytes;
}

std::size_t weight_stream_bytes(std::size_t weight_count, std::size_t bits) {
  return (weight_count * bits + 7) / 8;
}

std::size_t recurrent_ops_per_step(const Network& net) {
  std::size_t macs = 0;
  for (const auto& layer : net.lstm)
    for (std::size_t g = 0; g < 4; ++g)
      macs += layer.wh[g].size() + layer.wx[g].size();
  for (const auto& layer : net.gru)
    for (std::size_t g = 0; g < 3; ++g)
      macs += layer.wh[g].size() + layer.wx[g].size();
  return 2 * macs;
}

const std::array<EngineDesign, 6>& reference_designs() {
  // synthesis results of the two engines at 400 MHz; area and power are
  // paper-reported constants, not model outputs
  static const std::array<EngineDesign, 6> rows = {{
      {"low-power", WeightPrecision::kFull, 12, 100, 80.0, 2.56, 336.0},
      {"low-power", WeightPrecision::kBinary, 1, 100, 80.0, 0.24, 37.0},
      {"low-power", WeightPrecision::kTernary, 2, 100, 80.0, 0.42, 61.0},
      {"high-speed", WeightPrecision::kFull, 12, 100, 80.0, 2.56, 336.0},
      {"high-speed", WeightPrecision::kBinary, 1, 1000, 800.0, 2.54, 347.0},
      {"high-speed", WeightPrecision::kTernary, 2, 500, 400.0, 2.16, 302.0},
  }};
  return rows;
}

}  // namespace btrnn
