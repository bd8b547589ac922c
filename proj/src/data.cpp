#include "btrnn/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <stdexcept>

namespace btrnn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
  std::array<char, 4> b;
  in.read(b.data(), 4);
  if (in.gcount() != 4)
    throw std::runtime_error(path + ": truncated header, expected " +
                             std::to_string(4 - in.gcount()) + " more bytes");
  std::uint32_t v = 0;
  for (char c : b) v = (v << 8) | static_cast<std::uint8_t>(c);
  return v;
}

void write_u32_be(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                 static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b.data(), 4);
}

void read_payload(std::ifstream& in, const std::string& path, std::vector<std::uint8_t>& dst) {
  in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size()));
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got != dst.size())
    throw std::runtime_error(path + ": truncated payload, expected " +
                             std::to_string(dst.size() - got) + " more bytes");
}

}  // namespace

CharCorpus build_char_corpus(const std::string& text, double train_frac, double valid_frac) {
  require(!text.empty(), "corpus text is empty");
  require(train_frac > 0.0 && valid_frac >= 0.0 && train_frac + valid_frac <= 1.0,
          "split fractions must be positive and sum to at most 1");

  CharCorpus c;
  std::array<std::int32_t, 256> id_of;
  id_of.fill(-1);
  for (unsigned char ch : text) id_of[ch] = 0;
  for (int b = 0; b < 256; ++b)
    if (id_of[b] >= 0) {
      id_of[b] = static_cast<std::int32_t>(c.vocab.size());
      c.vocab.push_back(static_cast<std::uint8_t>(b));
    }
  c.encoded.reserve(text.size());
  for (unsigned char ch : text) c.encoded.push_back(id_of[ch]);
  c.train_end = static_cast<std::size_t>(train_frac * static_cast<double>(text.size()));
  c.valid_end =
      c.train_end + static_cast<std::size_t>(valid_frac * static_cast<double>(text.size()));
  return c;
}

std::vector<std::int32_t> corpus_split(const CharCorpus& corpus, Split split) {
  std::size_t lo = 0, hi = corpus.encoded.size();
  switch (split) {
    case Split::kTrain:
      hi = corpus.train_end;
      break;
    case Split::kValid:
      lo = corpus.train_end;
      hi = corpus.valid_end;
      break;
    case Split::kTest:
      lo = corpus.valid_end;
      break;
  }
  return std::vector<std::int32_t>(corpus.encoded.begin() + static_cast<std::ptrdiff_t>(lo),
                                   corpus.encoded.begin() + static_cast<std::ptrdiff_t>(hi));
}

std::string decode(const CharCorpus& corpus, const std::vector<std::int32_t>& ids) {
  std::string out;
  out.reserve(ids.size());
  for (std::int32_t id : ids) {
    require(id >= 0 && static_cast<std::size_t>(id) < corpus.vocab.size(),
            "symbol id outside the vocabulary");
    out.push_back(static_cast<char>(corpus.vocab[static_cast<std::size_t>(id)]));
  }
  return out;
}

SequenceBatcher::SequenceBatcher(std::vector<std::int32_t> data, std::size_t seq_len,
                                 std::size_t batch)
    : data_(std::move(data)), seq_len_(seq_len), batch_(batch) {
  require(seq_len_ >= 1 && batch_ >= 1, "seq_len and batch must be positive");
  require(data_.size() > seq_len_ * batch_,
          "corpus too small: need more than seq_len*batch symbols");
  // the last input position of the last lane still needs a next-symbol target
  stride_ = (data_.size() - 1) / batch_;
  windows_ = stride_ / seq_len_;
}

SequenceBatch SequenceBatcher::window(std::size_t k) const {
  require(k < windows_, "window index out of range");
  SequenceBatch out;
  out.tokens.assign(seq_len_, std::vector<std::int32_t>(batch_));
  out.targets.assign(seq_len_, std::vector<std::int32_t>(batch_));
  for (std::size_t t = 0; t < seq_len_; ++t)
    for (std::size_t b = 0; b < batch_; ++b) {
      const std::size_t pos = b * stride_ + k * seq_len_ + t;
      out.tokens[t][b] = data_[pos];
      out.targets[t][b] = data_[pos + 1];
    }
  return out;
}

MnistSet load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  MnistSet set;
  {
    std::ifstream in(images_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + images_path);
    const std::uint32_t magic = read_u32_be(in, images_path);
    if (magic != 0x803)
      throw std::runtime_error(images_path + ": bad magic " + std::to_string(magic) +
                               ", want 2051 (0x00000803)");
    set.count = read_u32_be(in, images_path);
    set.rows = read_u32_be(in, images_path);
    set.cols = read_u32_be(in, images_path);
    set.images.resize(set.count * set.rows * set.cols);
    read_payload(in, images_path, set.images);
  }
  {
    std::ifstream in(labels_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + labels_path);
    const std::uint32_t magic = read_u32_be(in, labels_path);
    if (magic != 0x801)
      throw std::runtime_error(labels_path + ": bad magic " + std::to_string(magic) +
                               ", want 2049 (0x00000801)");
    const std::size_t n = read_u32_be(in, labels_path);
    if (n != set.count)
      throw std::runtime_error(labels_path + ": " + std::to_string(n) + " labels for " +
                               std::to_string(set.count) + " images");
    set.labels.resize(n);
    read_payload(in, labels_path, set.labels);
  }
  for (std::uint8_t y : set.labels)
    if (y > 9) throw std::runtime_error(labels_path + ": label out of digit range");
  return set;
}

void save_mnist_idx(const MnistSet& set, const std::string& images_path,
                    const std::string& labels_path) {
  {
    std::ofstream out(images_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + images_path + " for writing");
    write_u32_be(out, 0x803);
    write_u32_be(out, static_cast<std::uint32_t>(set.count));
    write_u32_be(out, static_cast<std::uint32_t>(set.rows));
    write_u32_be(out, static_cast<std::uint32_t>(set.cols));
    out.write(reinterpret_cast<const char*>(set.images.data()),
              static_cast<std::streamsize>(set.images.size()));
  }
  {
    std::ofstream out(labels_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + labels_path + " for writing");
    write_u32_be(out, 0x801);
    write_u32_be(out, static_cast<std::uint32_t>(set.count));
    out.write(reinterpret_cast<const char*>(set.labels.data()),
              static_cast<std::streamsize>(set.labels.size()));
  }
}

MnistSet downsample_2x2(const MnistSet& set) {
  require(set.rows % 2 == 0 && set.cols % 2 == 0, "downsampling needs even dimensions");
  MnistSet out;
  out.count = set.count;
  out.rows = set.rows / 2;
  out.cols = set.cols / 2;
  out.labels = set.labels;
  out.images.resize(out.count * out.rows * out.cols);
  for (std::size_t i = 0; i < set.count; ++i) {
    const std::uint8_t* src = set.images.data() + i * set.rows * set.cols;
    std::uint8_t* dst = out.images.data() + i * out.rows * out.cols;
    for (std::size_t r = 0; r < out.rows; ++r)
      for (std::size_t c = 0; c < out.cols; ++c) {
        const std::size_t r0 = 2 * r, c0 = 2 * c;
        const unsigned sum = src[r0 * set.cols + c0] + src[r0 * set.cols + c0 + 1] +
                             src[(r0 + 1) * set.cols + c0] + src[(r0 + 1) * set.cols + c0 + 1];
        dst[r * out.cols + c] = static_cast<std::uint8_t>((sum + 2) / 4);
      }
  }
  return out;
}

SequenceBatch make_mnist_batch(const MnistSet& set, const std::vector<std::size_t>& indices) {
  require(!indices.empty(), "empty image selection");
  const std::size_t T = set.rows * set.cols;
  const std::size_t B = indices.size();
  SequenceBatch out;
  out.dense.assign(T, Tensor2D(B, 1));
  out.targets.assign(T, {});
  out.targets[T - 1].resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    require(indices[b] < set.count, "image index out of range");
    const std::uint8_t* img = set.images.data() + indices[b] * T;
    for (std::size_t t = 0; t < T; ++t) out.dense[t](b, 0) = img[t] / 255.0;
    out.targets[T - 1][b] = set.labels[indices[b]];
  }
  return out;
}

double bpc_from_nats(double mean_loss_nats) {
  require(mean_loss_nats >= 0.0, "loss must be nonnegative");
  return mean_loss_nats / std::log(2.0);
}

double perplexity_from_nats(double mean_loss_nats) {
  require(mean_loss_nats >= 0.0, "loss must be nonnegative");
  return std::exp(mean_loss_nats);
}

MetricsWriter::MetricsWriter(const std::string& path, bool append) {
  std::error_code ec;
  const bool fresh =
      !append || !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  out_.open(path, append ? std::ios::out | std::ios::app : std::ios::out | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open metrics file: " + path);
  out_ << std::setprecision(10);
  if (fresh) out_ << "step,split,loss_nats,bpc_or_ppl,accuracy\n";
}

void MetricsWriter::row(std::uint64_t step, const std::string& split, double loss_nats,
                        double bpc_or_ppl, double accuracy) {
  out_ << step << ',' << split << ',' << loss_nats << ',' << bpc_or_ppl << ',' << accuracy
       << '\n';
  out_.flush();
}

}  // namespace btrnn
