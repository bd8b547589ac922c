#include "btrnn/fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "btrnn/rng.hpp"

namespace btrnn {

namespace {

// Common English words only, so the synthetic text is public-domain by
// construction. Order matters: it is part of the deterministic output.
constexpr const char* kWords[] = {
    "the",     "of",      "and",     "to",      "in",      "a",       "is",
    "that",    "for",     "it",      "as",      "was",     "with",    "be",
    "by",      "on",      "not",     "he",      "this",    "are",     "or",
    "his",     "from",    "at",      "which",   "but",     "have",    "an",
    "had",     "they",    "you",     "were",    "their",   "one",     "all",
    "we",      "can",     "her",     "has",     "there",   "been",    "if",
    "more",    "when",    "will",    "would",   "who",     "so",      "no",
    "she",     "other",   "its",     "may",     "these",   "what",    "them",
    "some",    "him",     "time",    "into",    "only",    "could",   "new",
    "then",    "do",      "any",     "my",      "now",     "such",    "like",
    "our",     "over",    "man",     "me",      "even",    "most",    "made",
    "after",   "also",    "did",     "many",    "before",  "must",    "through",
    "years",   "where",   "much",    "your",    "way",     "well",    "down",
    "should",  "because", "each",    "just",    "those",   "people",  "how",
    "too",     "little",  "state",   "good",    "very",    "make",    "world",
    "still",   "own",     "see",     "men",     "work",    "long",    "get",
    "here",    "between", "both",    "life",    "being",   "under",   "never",
    "day",     "same",    "another", "know",    "while",   "last",    "might",
    "us",      "great",   "old",     "year",    "off",     "come",    "since",
    "against", "go",      "came",    "right",   "used",    "take",    "three",
    "himself", "few",     "house",   "use",     "during",  "without", "again",
    "place",   "around",  "however", "small",   "found",   "thought", "went",
    "say",     "part",    "once",    "high",    "general", "upon",    "school",
    "every",   "does",    "got",     "united",  "left",    "number",  "course",
    "war",     "until",   "always",  "away",    "something", "fact",  "water",
    "though",  "less",    "public",  "put",     "think",   "almost",  "hand",
    "enough",  "far",     "took",    "head",    "yet",     "system",  "better",
    "set",     "told",    "nothing", "night",   "end",     "why",     "called",
    "didnt",   "eyes",    "find",    "going",   "look",    "asked",   "later",
    "point",   "next",    "program", "knew",    "city",    "business", "give",
    "group",   "toward",  "young",   "days",    "let",     "room",    "within",
    "children", "side",   "social",  "given",   "order",   "early",   "present",
};
constexpr std::size_t kWordCount = sizeof(kWords) / sizeof(kWords[0]);

// Zipf-flavored unigram weight: frequent words stay frequent.
double unigram_weight(std::size_t rank) { return 1.0 / (static_cast<double>(rank) + 3.0); }

// Each word prefers a small, fixed successor set. The 60/40 split between the
// preferred set and the global unigram pool gives the text strong bigram
// structure (low conditional entropy) on top of an English-like symbol
// distribution, which is what a character model needs to beat the order-0
// baseline by a clear margin.
std::size_t next_word(std::size_t prev, RngStream& g) {
  if (g.next_uniform() < 0.6) {
    const std::size_t pick = static_cast<std::size_t>(g.next_uniform() * 8.0);
    return (prev * 7 + pick * 13 + 1) % kWordCount;
  }
  static const std::vector<double> cdf = [] {
    std::vector<double> c(kWordCount);
    double acc = 0.0;
    for (std::size_t i = 0; i < kWordCount; ++i) {
      acc += unigram_weight(i);
      c[i] = acc;
    }
    for (double& v : c) v /= acc;
    return c;
  }();
  const double u = g.next_uniform();
  return static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) %
         kWordCount;
}

}  // namespace

std::string synth_corpus(std::size_t target_bytes, std::uint64_t seed) {
  RngStream g(seed, 7, 0);
  std::string text;
  text.reserve(target_bytes + 256);

  std::size_t word = 0;
  std::size_t sentences = 0;
  while (text.size() < target_bytes) {
    const std::size_t length = 5 + static_cast<std::size_t>(g.next_uniform() * 10.0);
    for (std::size_t i = 0; i < length; ++i) {
      word = next_word(word, g);
      text += kWords[word];
      text += i + 1 < length ? ' ' : '.';
    }
    ++sentences;
    if (text.size() >= target_bytes) break;
    // paragraph break roughly every 50 sentences, otherwise continue the line
    if (sentences % 50 == 0)
      text += '\n';
    else
      text += ' ';
  }
  return text;
}

double order0_entropy_bits(const std::string& text) {
  std::array<std::uint64_t, 256> counts{};
  for (unsigned char c : text) ++counts[c];
  double h = 0.0;
  const double n = static_cast<double>(text.size());
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

// 7x7 digit stencils, upscaled 4x at render time. '#' is foreground.
constexpr const char* kGlyphs[10][7] = {
    {".###...", "#...#..", "#...#..", "#...#..", "#...#..", "#...#..", ".###..."},
    {"..#....", ".##....", "..#....", "..#....", "..#....", "..#....", ".###..."},
    {".###...", "#...#..", "....#..", "...#...", "..#....", ".#.....", "#####.."},
    {"####...", "....#..", "....#..", ".###...", "....#..", "....#..", "####..."},
    {"#..#...", "#..#...", "#..#...", "#####..", "...#...", "...#...", "...#..."},
    {"#####..", "#......", "#......", "####...", "....#..", "....#..", "####..."},
    {".###...", "#......", "#......", "####...", "#...#..", "#...#..", ".###..."},
    {"#####..", "....#..", "...#...", "..#....", ".#.....", ".#.....", ".#....."},
    {".###...", "#...#..", "#...#..", ".###...", "#...#..", "#...#..", ".###..."},
    {".###...", "#...#..", "#...#..", ".####..", "....#..", "....#..", ".###..."},
};

bool stencil_hit(int digit, double gx, double gy) {
  // glyph space is the 28x28 grid of the 4x-upscaled stencil
  const int sx = static_cast<int>(std::floor(gx / 4.0));
  const int sy = static_cast<int>(std::floor(gy / 4.0));
  if (sx < 0 || sx >= 7 || sy < 0 || sy >= 7) return false;
  return kGlyphs[digit][sy][sx] == '#';
}

}  // namespace

MnistSet synth_digits(std::size_t count, std::uint64_t seed) {
  MnistSet set;
  set.count = count;
  set.rows = 28;
  set.cols = 28;
  set.images.resize(count * 28 * 28);
  set.labels.resize(count);

  RngStream g(seed, 11, 0);
  for (std::size_t n = 0; n < count; ++n) {
    const int digit = static_cast<int>(g.next_uniform() * 10.0);
    set.labels[n] = static_cast<std::uint8_t>(digit);

    const double theta = (g.next_uniform() * 2.0 - 1.0) * 0.15;
    const double scale = 0.85 + g.next_uniform() * 0.3;
    const double dx = (g.next_uniform() * 2.0 - 1.0) * 2.0;
    const double dy = (g.next_uniform() * 2.0 - 1.0) * 2.0;
    const double fg = 180.0 + g.next_uniform() * 75.0;
    const double c = 13.5, cos_t = std::cos(theta), sin_t = std::sin(theta);

    std::uint8_t* img = set.images.data() + n * 28 * 28;
    for (int y = 0; y < 28; ++y)
      for (int x = 0; x < 28; ++x) {
        // pull each output pixel back through the inverse affine map
        const double rx = (static_cast<double>(x) - c - dx) / scale;
        const double ry = (static_cast<double>(y) - c - dy) / scale;
        const double gx = cos_t * rx + sin_t * ry + c;
        const double gy = -sin_t * rx + cos_t * ry + c;
        double v = stencil_hit(digit, gx, gy) ? fg : 0.0;
        v += g.next_uniform() * 25.0;
        img[y * 28 + x] = static_cast<std::uint8_t>(std::min(255.0, v));
      }
  }
  return set;
}

}  // namespace btrnn
