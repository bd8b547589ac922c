#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "btrnn/data.hpp"

namespace btrnn {

// Canonical fixture parameters. The committed data/corpus.txt is
// synth_corpus(kCorpusBytes, kCorpusSeed); the digit fixture used by the
// end-to-end gate is synth_digits(kDigitCount, kDigitSeed).
inline constexpr std::size_t kCorpusBytes = 1000000;
inline constexpr std::uint64_t kCorpusSeed = 1009;
inline constexpr std::size_t kDigitCount = 12000;
inline constexpr std::uint64_t kDigitSeed = 7;

// Deterministic pseudo-English corpus: seeded word-level Markov text over a
// fixed built-in word list, lowercase plus space, period and newline. The
// same (target_bytes, seed) always yields the same bytes, so the committed
// corpus file can be regenerated and verified. Output ends at a sentence
// boundary at or after target_bytes.
std::string synth_corpus(std::size_t target_bytes, std::uint64_t seed);

// Shannon entropy in bits/symbol of the byte unigram distribution.
double order0_entropy_bits(const std::string& text);

// Deterministic handwritten-digit stand-in: 28x28 grayscale glyphs rendered
// from built-in stencils with seeded affine jitter (shift, scale, rotation),
// foreground intensity jitter and additive noise. Labels are drawn uniformly.
// Matches the IDX loader's layout, so it can be saved with save_mnist_idx and
// read back by load_mnist_idx.
MnistSet synth_digits(std::size_t count, std::uint64_t seed);

}  // namespace btrnn
