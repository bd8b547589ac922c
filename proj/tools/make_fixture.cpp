// Regenerates the committed data fixtures. The corpus file is a pure
// function of (bytes, seed), so running this with the defaults must
// reproduce data/corpus.txt byte for byte; the fixture test checks that.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "btrnn/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"regenerate the synthetic text and digit fixtures"};
  std::string out_dir = "data";
  std::size_t corpus_bytes = btrnn::kCorpusBytes;
  std::uint64_t corpus_seed = btrnn::kCorpusSeed;
  std::size_t digits = 0;
  std::uint64_t digit_seed = btrnn::kDigitSeed;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--corpus-bytes", corpus_bytes, "corpus size target")->capture_default_str();
  app.add_option("--corpus-seed", corpus_seed, "corpus generator seed")->capture_default_str();
  app.add_option("--digits", digits, "also write an idx digit set of this size");
  app.add_option("--digit-seed", digit_seed, "digit generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(out_dir);
    const std::string corpus = btrnn::synth_corpus(corpus_bytes, corpus_seed);
    const std::string corpus_path = out_dir + "/corpus.txt";
    {
      std::ofstream out(corpus_path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot open " + corpus_path);
      out.write(corpus.data(), static_cast<std::streamsize>(corpus.size()));
      if (!out) throw std::runtime_error("short write to " + corpus_path);
    }
    std::printf("%s: %zu bytes, %.3f bits/byte unigram entropy\n", corpus_path.c_str(),
                corpus.size(), btrnn::order0_entropy_bits(corpus));

    if (digits > 0) {
      const btrnn::MnistSet set = btrnn::synth_digits(digits, digit_seed);
      const std::string img_path = out_dir + "/digits-images.idx";
      const std::string lbl_path = out_dir + "/digits-labels.idx";
      btrnn::save_mnist_idx(set, img_path, lbl_path);
      std::printf("%s, %s: %zu images of %zux%zu\n", img_path.c_str(), lbl_path.c_str(),
                  set.count, set.rows, set.cols);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "make_fixture: %s\n", e.what());
    return 1;
  }
  return 0;
}
