#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "btrnn/inspect.hpp"

using btrnn::InspectReport;
using btrnn::ModelConfig;
using btrnn::Network;
using btrnn::RngStream;
using btrnn::SequenceBatch;
using btrnn::SignalHistogram;

namespace {

std::vector<std::int32_t> random_ids(std::size_t n, std::size_t hi, RngStream& rng) {
  std::vector<std::int32_t> ids(n);
  for (auto& id : ids) id = static_cast<std::int32_t>(rng.next_uniform() * hi);
  return ids;
}

SequenceBatch token_batch(std::size_t T, std::size_t B, std::size_t vocab, RngStream& rng) {
  SequenceBatch b;
  for (std::size_t t = 0; t < T; ++t) {
    b.tokens.push_back(random_ids(B, vocab, rng));
    b.targets.push_back(random_ids(B, vocab, rng));
  }
  return b;
}

ModelConfig small_lstm(std::size_t t_max) {
  ModelConfig cfg;
  cfg.cell = btrnn::CellKind::kLstm;
  cfg.vocab = 7;
  cfg.n_classes = 7;
  cfg.d_h = 6;
  cfg.layers = 2;
  cfg.use_bn = false;
  cfg.bn_cell = false;
  cfg.t_max = t_max;
  return cfg;
}

const SignalHistogram& find_hist(const InspectReport& rep, const std::string& signal,
                                 std::size_t bucket) {
  for (const auto& h : rep.histograms)
    if (h.signal == signal && h.bucket == bucket) return h;
  REQUIRE_MESSAGE(false, ("missing histogram " + signal).c_str());
  return rep.histograms.front();
}

std::uint64_t signal_total(const InspectReport& rep, const std::string& signal) {
  std::uint64_t n = 0;
  for (const auto& h : rep.histograms)
    if (h.signal == signal) n += h.total();
  return n;
}

}  // namespace

TEST_CASE("gate tallies match a hand pass over the forward cache") {
  RngStream rng{501, 0, 0};
  ModelConfig cfg = small_lstm(4);
  Network net = btrnn::make_network(cfg, rng);

  const std::size_t T = 9, B = 3;
  std::vector<SequenceBatch> batches;
  batches.push_back(token_batch(T, B, cfg.vocab, rng));
  batches.push_back(token_batch(T, B, cfg.vocab, rng));

  const InspectReport rep = btrnn::inspect_gates(net, nullptr, batches, 32);

  // oracle: rerun the same forward pass and recount every signal by hand
  auto states = btrnn::make_network_states(net, B);
  std::uint64_t samples = 0, mid = 0, sat = 0;
  std::map<std::string, std::map<std::size_t, std::uint64_t>> bucket_counts;
  for (const auto& batch : batches) {
    btrnn::SequenceCache cache;
    btrnn::network_forward(net, nullptr, batch, states, btrnn::BnMode::kInfer, nullptr, &cache);
    for (const auto& layer : cache.lstm)
      for (std::size_t t = 0; t < layer.size(); ++t) {
        const auto& sc = layer[t];
        const std::size_t bucket = t < cfg.t_max ? t : cfg.t_max - 1;
        const btrnn::Tensor2D& i = sc.gates[btrnn::kGateI];
        for (std::size_t k = 0; k < i.size(); ++k) {
          const double iv = i.data()[k];
          ++samples;
          if (iv > 0.05 && iv < 0.95) ++mid;
          if (iv <= 0.02 || iv >= 0.98) ++sat;
          for (const char* s : {"f", "i", "o", "g", "h", "c", "i_pre"})
            ++bucket_counts[s][bucket];
        }
      }
  }
  CHECK(rep.samples == samples);
  CHECK(samples == 2 * cfg.layers * T * B * cfg.d_h);
  CHECK(rep.i_gate_mid_mass == static_cast<double>(mid) / static_cast<double>(samples));
  CHECK(rep.i_gate_sat_mass == static_cast<double>(sat) / static_cast<double>(samples));

  // every signal histogram holds every sample, in the buckets the cache says
  for (const auto& [signal, per_bucket] : bucket_counts) {
    CHECK(signal_total(rep, signal) == samples);
    for (const auto& [bucket, n] : per_bucket) CHECK(find_hist(rep, signal, bucket).total() == n);
  }
  // steps at or past t_max-1 share the last bucket: 9-step windows with four
  // buckets put 6 of 9 steps in bucket 3
  CHECK(find_hist(rep, "f", 3).total() == 6 * samples / 9);
  CHECK(find_hist(rep, "f", 0).total() == samples / 9);
}

TEST_CASE("histogram ranges cover the signals an untrained cell produces") {
  RngStream rng{502, 0, 0};
  Network net = btrnn::make_network(small_lstm(1), rng);
  std::vector<SequenceBatch> batches{token_batch(12, 4, 7, rng)};
  const InspectReport rep = btrnn::inspect_gates(net, nullptr, batches, 64);

  for (const char* s : {"f", "i", "o"}) {
    const SignalHistogram& h = find_hist(rep, s, 0);
    CHECK(h.lo == 0.0);
    CHECK(h.hi == 1.0);
    CHECK(h.mass_between(0.0, 1.0) == 1.0);
  }
  CHECK(find_hist(rep, "g", 0).lo == -1.0);
  CHECK(find_hist(rep, "h", 0).hi == 1.0);
  CHECK(find_hist(rep, "c", 0).hi == 8.0);
  CHECK(find_hist(rep, "i_pre", 0).hi == 32.0);
  // fresh glorot weights keep every pre-activation mild, so no sample lands
  // in the saturation edge bins and the mid fraction is essentially one
  CHECK(rep.i_gate_mid_mass > 0.95);
  CHECK(rep.i_gate_sat_mass == 0.0);
}

TEST_CASE("mass_between reads bin counts exactly") {
  SignalHistogram h;
  h.signal = "i";
  h.lo = 0.0;
  h.hi = 1.0;
  h.bins = {2, 0, 3, 5};  // bin width 0.25
  CHECK(h.total() == 10);
  CHECK(h.mass_between(0.0, 1.0) == 1.0);
  CHECK(h.mass_between(0.0, 0.25) == doctest::Approx(0.2));
  CHECK(h.mass_between(0.25, 1.0) == doctest::Approx(0.8));
  CHECK(h.mass_between(0.5, 0.75) == doctest::Approx(0.3));
  // bins straddling an endpoint are excluded: only full bins count
  CHECK(h.mass_between(0.1, 1.0) == doctest::Approx(0.8));
  SignalHistogram empty;
  empty.bins = {0, 0};
  CHECK(empty.mass_between(0.0, 1.0) == 0.0);
}

TEST_CASE("repeat inspection of the same batches is identical") {
  RngStream rng{503, 0, 0};
  Network net = btrnn::make_network(small_lstm(3), rng);
  std::vector<SequenceBatch> batches{token_batch(6, 2, 7, rng), token_batch(6, 2, 7, rng)};
  const InspectReport a = btrnn::inspect_gates(net, nullptr, batches, 16);
  const InspectReport b = btrnn::inspect_gates(net, nullptr, batches, 16);
  REQUIRE(a.histograms.size() == b.histograms.size());
  for (std::size_t k = 0; k < a.histograms.size(); ++k)
    CHECK(a.histograms[k].bins == b.histograms[k].bins);
  CHECK(a.i_gate_mid_mass == b.i_gate_mid_mass);
}

TEST_CASE("gru networks report their own gate set") {
  RngStream rng{504, 0, 0};
  ModelConfig cfg = small_lstm(2);
  cfg.cell = btrnn::CellKind::kGru;
  cfg.bn_cell = false;
  Network net = btrnn::make_network(cfg, rng);
  std::vector<SequenceBatch> batches{token_batch(5, 3, 7, rng)};
  const InspectReport rep = btrnn::inspect_gates(net, nullptr, batches, 16);

  const std::uint64_t expect = cfg.layers * 5 * 3 * cfg.d_h;
  CHECK(rep.samples == expect);
  for (const char* s : {"z", "r", "n", "h"}) CHECK(signal_total(rep, s) == expect);
  CHECK(rep.histograms.size() == 4 * cfg.t_max);
  // the recomputed h must stay inside its tracked range
  CHECK(find_hist(rep, "h", 0).mass_between(-1.0, 1.0) == 1.0);
  // the input-gate criteria are LSTM diagnostics and stay zero here
  CHECK(rep.i_gate_mid_mass == 0.0);
}

TEST_CASE("histogram csv files are one table per signal") {
  RngStream rng{505, 0, 0};
  Network net = btrnn::make_network(small_lstm(2), rng);
  std::vector<SequenceBatch> batches{token_batch(4, 2, 7, rng)};
  const InspectReport rep = btrnn::inspect_gates(net, nullptr, batches, 8);
  btrnn::write_histogram_csvs(rep, "t_hist_");

  for (const char* s : {"f", "i", "o", "g", "h", "c", "i_pre"}) {
    const std::string path = std::string("t_hist_") + s + ".csv";
    std::ifstream in(path);
    REQUIRE_MESSAGE(in.good(), path.c_str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "signal,bucket,bin_lo,bin_hi,count");
    std::size_t rows = 0;
    std::uint64_t count_sum = 0;
    std::string line;
    while (std::getline(in, line)) {
      ++rows;
      const std::size_t comma = line.rfind(',');
      count_sum += std::stoull(line.substr(comma + 1));
      CHECK(line.substr(0, line.find(',')) == s);
    }
    CHECK(rows == 2 * 8);  // two buckets of eight bins
    CHECK(count_sum == rep.samples);
    std::remove(path.c_str());
  }
}

TEST_CASE("inspection rejects empty input") {
  RngStream rng{506, 0, 0};
  Network net = btrnn::make_network(small_lstm(1), rng);
  std::vector<SequenceBatch> none;
  CHECK_THROWS_AS(btrnn::inspect_gates(net, nullptr, none, 8), std::invalid_argument);
  std::vector<SequenceBatch> one{token_batch(2, 2, 7, rng)};
  CHECK_THROWS_AS(btrnn::inspect_gates(net, nullptr, one, 0), std::invalid_argument);
}
