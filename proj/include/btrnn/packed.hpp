#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "btrnn/batchnorm.hpp"
#include "btrnn/model.hpp"

namespace btrnn {

// ---------------------------------------------------------------------------
// bitplane weights
// ---------------------------------------------------------------------------

// One quantized weight matrix stored as bitplanes. Bit j of a row's words is
// column j; each row is padded up to whole 64-bit words and the pad bits are
// kept zero. A sign bit of 1 means -1; the ternary mask bit is 1 where the
// weight is nonzero (sign bits under a clear mask are zero). Immutable after
// pack, so concurrent readers need no locking.
struct PackedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  QuantMode mode = QuantMode::kBinary;
  double alpha = 0.0;
  std::size_t words_per_row = 0;
  std::vector<std::uint64_t> sign_plane;  // [rows * words_per_row]
  std::vector<std::uint64_t> mask_plane;  // ternary only, same layout

  const std::uint64_t* sign_row(std::size_t r) const {
    return sign_plane.data() + r * words_per_row;
  }
  const std::uint64_t* mask_row(std::size_t r) const {
    return mask_plane.data() + r * words_per_row;
  }

  std::size_t planes() const { return mode == QuantMode::kTernary ? 2 : 1; }
  // rows * cols bits per plane, before and after the per-row word padding.
  std::size_t payload_bits() const { return rows * cols * planes(); }
  std::size_t payload_bytes_unpadded() const { return (payload_bits() + 7) / 8; }
  std::size_t payload_bytes_padded() const { return rows * words_per_row * 8 * planes(); }
};

// Encodes a {-1,+1} (binary) or {-1,0,+1} (ternary) matrix; any entry outside
// the declared support is a misuse error. unpack(pack(w)) == w exactly.
PackedMatrix pack_matrix(const Tensor2D& w, QuantMode mode, double alpha);
Tensor2D unpack_matrix(const PackedMatrix& p);

// y_i = alpha * sum_j s_ij * x_j with s_ij decoded from the planes. The inner
// accumulation only selects and adds (the multiplexer datapath); it reuses the
// lane layout of the dense kernels, so on the same realization it matches the
// full product plus alpha scale bit for bit.
std::vector<double> packed_matvec(const PackedMatrix& p, const std::vector<double>& x);

// ---------------------------------------------------------------------------
// 12-bit fixed-point activations
// ---------------------------------------------------------------------------

// Q4.8: value = raw / 256 with raw in [-2048, 2047] (1 sign + 3 integer + 8
// fraction bits). Quantization rounds to nearest even and clips to the raw
// range, counting every clipped element.
struct FixedPointVector {
  std::vector<std::int16_t> raw;
  std::size_t saturated = 0;

  double value(std::size_t i) const { return static_cast<double>(raw[i]) / 256.0; }
};

constexpr std::int32_t kQ48Min = -2048;
constexpr std::int32_t kQ48Max = 2047;

FixedPointVector quantize_activations(const double* x, std::size_t n);
FixedPointVector quantize_activations(const std::vector<double>& x);
std::vector<double> dequantize_activations(const FixedPointVector& q);

// Integer form of the product: y_i = alpha * (acc_i / 256) where acc_i sums
// the selected raw values in a 32-bit accumulator with saturating adds; every
// output whose accumulation clipped bumps *saturated.
std::vector<double> packed_matvec(const PackedMatrix& p, const FixedPointVector& x,
                                  std::size_t* saturated = nullptr);

// ---------------------------------------------------------------------------
// packed model
// ---------------------------------------------------------------------------

// Normalization folded for deployment: per-slot scale = phi / sqrt(var + eps)
// and shift = gamma - mean * scale, the exact values the training-side infer
// mode computes, tabulated once at pack time.
struct BnAffineTable {
  std::size_t t_max = 0;
  std::size_t dim = 0;
  std::vector<double> scale;  // [t_max * dim]
  std::vector<double> shift;

  const double* scale_row(std::size_t slot) const { return scale.data() + slot * dim; }
  const double* shift_row(std::size_t slot) const { return shift.data() + slot * dim; }
};

BnAffineTable fold_bn_affine(const BatchNormState& state);

// One LSTM layer ready for MAC-free inference: bitplane weights, full
// precision biases, and the normalization affines. Gate order f, i, o, g.
struct PackedLstmLayer {
  std::size_t d_x = 0;
  std::size_t d_h = 0;
  bool use_bn = false;
  bool bn_cell = false;
  std::array<PackedMatrix, 4> wh, wx;
  std::array<std::vector<double>, 4> bias;
  std::array<BnAffineTable, 4> bn_h, bn_x;  // when use_bn
  BnAffineTable bn_c;                       // when bn_cell
};

struct PackedModel {
  ModelConfig cfg;
  std::vector<PackedLstmLayer> layers;
  SoftmaxHead head;  // stays full precision
};

// Freezes one realization of a quantized LSTM network for deployment. The
// caller picks the realization (round_network_realization for the rounding
// the hardware would store, or one stochastic draw). GRU cells and
// full-precision networks are misuse errors.
PackedModel pack_network(const Network& net, const NetworkRealization& real);

std::vector<CellState> make_packed_states(const PackedModel& pm, std::size_t batch);

// How the hidden state is carried between steps. kReal keeps f64 activations
// and matches the dense infer path bit for bit; kFixedQ48 requantizes h (and
// dense inputs) to Q4.8 each step, accumulating the recurrent products in
// integers. The cell state c and the gate math after the accumulators stay
// f64 in both modes; only the activations moving between units are narrowed.
enum class ActivationMode { kReal, kFixedQ48 };

// Runs one window exactly as the dense infer path would, advancing `states`
// (one per layer) and scoring targeted steps with the shared head. In Q4.8
// mode `saturated`, when given, accumulates every clipped activation and
// accumulator.
ForwardStats packed_forward(const PackedModel& pm, const SequenceBatch& batch,
                            std::vector<CellState>& states, ActivationMode act,
                            std::size_t* saturated = nullptr);

// Zero states, windows consumed in order with the carry between them.
ForwardStats packed_evaluate(const PackedModel& pm, const std::vector<SequenceBatch>& batches,
                             ActivationMode act, std::size_t* saturated = nullptr);

// ---------------------------------------------------------------------------
// footprint accounting
// ---------------------------------------------------------------------------

enum class WeightPrecision { kFull, kBinary, kTernary };

const char* to_string(WeightPrecision p);

// Storage for the recurrent weights and biases at a given width (32, 1, or 2
// bits per parameter). `bytes` is count * width rounded up to whole bytes,
// the figure the size tables quote; `padded_bytes` adds the per-row word
// padding of the actual bitplane layout when the shape is known.
struct FootprintReport {
  std::size_t weight_count = 0;
  std::size_t bytes = 0;
  std::size_t padded_bytes = 0;
};

// Count-only form: no shape information, so padded_bytes == bytes.
FootprintReport memory_footprint(std::size_t weight_count, WeightPrecision p);
FootprintReport memory_footprint(const Network& net, WeightPrecision p);

// ---------------------------------------------------------------------------
// packed model file
// ---------------------------------------------------------------------------

// "BTPK" file: magic, version, config, per-layer planes and affine tables,
// head, trailing CRC-32 over everything before it. Layout in docs/formats.md.
void save_packed_model(const std::string& path, const PackedModel& pm);
PackedModel load_packed_model(const std::string& path);

// CRC-32 (reflected, polynomial 0xEDB88320) of a byte range; the checksum the
// packed model file carries.
std::uint32_t crc32(const void* data, std::size_t n);

}  // namespace btrnn
