#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "btrnn/model.hpp"

namespace btrnn {

// Byte-level corpus: the vocabulary is the sorted set of distinct bytes, so
// encoding is deterministic regardless of platform or input order.
struct CharCorpus {
  std::vector<std::uint8_t> vocab;
  std::vector<std::int32_t> encoded;
  std::size_t train_end = 0;  // train = [0, train_end)
  std::size_t valid_end = 0;  // valid = [train_end, valid_end), test = rest
};

enum class Split { kTrain, kValid, kTest };

// Splits are contiguous by fraction: train gets floor(n*train_frac) symbols,
// validation the next floor(n*valid_frac), test the remainder.
CharCorpus build_char_corpus(const std::string& text, double train_frac = 0.9,
                             double valid_frac = 0.05);

std::vector<std::int32_t> corpus_split(const CharCorpus& corpus, Split split);

std::string decode(const CharCorpus& corpus, const std::vector<std::int32_t>& ids);

// Cuts a symbol stream into contiguous per-lane stripes for stateful
// unrolling: lane b owns positions [b*stride, (b+1)*stride), window k yields
// inputs at offsets [k*T, k*T+T) of each stripe with next-symbol targets, so
// consecutive windows of a lane continue the text exactly where the previous
// one stopped. The tail of each stripe that does not fill a window is
// dropped.
class SequenceBatcher {
 public:
  SequenceBatcher(std::vector<std::int32_t> data, std::size_t seq_len, std::size_t batch);

  std::size_t windows() const { return windows_; }
  std::size_t batch() const { return batch_; }
  // emitted over a full epoch: batch * windows * seq_len
  std::size_t total_targets() const { return batch_ * windows_ * seq_len_; }
  SequenceBatch window(std::size_t k) const;

 private:
  std::vector<std::int32_t> data_;
  std::size_t seq_len_, batch_, stride_, windows_;
};

// Images are row-major scanlines, one byte per pixel; labels are digits.
struct MnistSet {
  std::size_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> images;
  std::vector<std::uint8_t> labels;
};

// Reads the classic IDX pair (image magic 0x00000803, label magic 0x00000801,
// big-endian headers). Throws std::runtime_error naming the offending file,
// the bad magic value, or the number of missing bytes when truncated.
MnistSet load_mnist_idx(const std::string& images_path, const std::string& labels_path);

void save_mnist_idx(const MnistSet& set, const std::string& images_path,
                    const std::string& labels_path);

// Halves both image dimensions by averaging disjoint 2x2 blocks (rounding to
// nearest, ties away from zero). Dimensions must be even.
MnistSet downsample_2x2(const MnistSet& set);

// One classification sequence per selected image: pixel t (scanline order,
// t = r*cols + c) becomes the step-t scalar input scaled to [0,1]; only the
// final step carries the digit as a target.
SequenceBatch make_mnist_batch(const MnistSet& set, const std::vector<std::size_t>& indices);

double bpc_from_nats(double mean_loss_nats);
double perplexity_from_nats(double mean_loss_nats);

// Appends one line per call under the fixed header
// step,split,loss_nats,bpc_or_ppl,accuracy. With `append` the file is
// extended instead of truncated and the header is written only when the file
// is new or empty, so a resumed run continues the same table.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path, bool append = false);
  void row(std::uint64_t step, const std::string& split, double loss_nats, double bpc_or_ppl,
           double accuracy);

 private:
  std::ofstream out_;
};

}  // namespace btrnn
