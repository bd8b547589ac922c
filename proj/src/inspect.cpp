#include "btrnn/inspect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace btrnn {

std::uint64_t SignalHistogram::total() const {
  std::uint64_t n = 0;
  for (std::uint64_t c : bins) n += c;
  return n;
}

double SignalHistogram::mass_between(double a, double b) const {
  const std::uint64_t n = total();
  if (n == 0) return 0.0;
  const double width = (hi - lo) / static_cast<double>(bins.size());
  std::uint64_t inside = 0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double bin_lo = lo + width * static_cast<double>(k);
    const double bin_hi = bin_lo + width;
    if (bin_lo >= a && bin_hi <= b) inside += bins[k];
  }
  return static_cast<double>(inside) / static_cast<double>(n);
}

namespace {

struct Tally {
  SignalHistogram* rows;  // one per bucket
  std::size_t buckets;

  void add(std::size_t bucket, double v) {
    SignalHistogram& h = rows[std::min(bucket, buckets - 1)];
    const double span = h.hi - h.lo;
    double idx = (v - h.lo) / span * static_cast<double>(h.bins.size());
    // out-of-range and non-finite samples stick to the nearest edge bin
    if (!(idx > 0.0)) idx = 0.0;
    const std::size_t k =
        std::min(h.bins.size() - 1, static_cast<std::size_t>(idx));
    ++h.bins[k];
  }
};

std::size_t make_signal(std::vector<SignalHistogram>& out, const std::string& name,
                        std::size_t buckets, double lo, double hi, std::size_t bins) {
  const std::size_t first = out.size();
  for (std::size_t b = 0; b < buckets; ++b) {
    SignalHistogram h;
    h.signal = name;
    h.bucket = b;
    h.lo = lo;
    h.hi = hi;
    h.bins.assign(bins, 0);
    out.push_back(std::move(h));
  }
  return first;
}

}  // namespace

InspectReport inspect_gates(Network& net, const NetworkRealization* real,
                            const std::vector<SequenceBatch>& batches, std::size_t bins) {
  if (batches.empty()) throw std::invalid_argument("inspect_gates: no batches");
  if (bins == 0) throw std::invalid_argument("inspect_gates: need at least one bin");
  const std::size_t B = batches.front().batch();
  const std::size_t buckets = std::max<std::size_t>(1, net.cfg.t_max);
  const bool lstm = net.cfg.cell == CellKind::kLstm;

  InspectReport rep;
  std::size_t first = 0;
  if (lstm) {
    first = make_signal(rep.histograms, "f", buckets, 0.0, 1.0, bins);
    make_signal(rep.histograms, "i", buckets, 0.0, 1.0, bins);
    make_signal(rep.histograms, "o", buckets, 0.0, 1.0, bins);
    make_signal(rep.histograms, "g", buckets, -1.0, 1.0, bins);
    make_signal(rep.histograms, "h", buckets, -1.0, 1.0, bins);
    make_signal(rep.histograms, "c", buckets, -8.0, 8.0, bins);
    make_signal(rep.histograms, "i_pre", buckets, -32.0, 32.0, bins);
  } else {
    first = make_signal(rep.histograms, "z", buckets, 0.0, 1.0, bins);
    make_signal(rep.histograms, "r", buckets, 0.0, 1.0, bins);
    make_signal(rep.histograms, "n", buckets, -1.0, 1.0, bins);
    make_signal(rep.histograms, "h", buckets, -1.0, 1.0, bins);
  }
  const std::size_t signals = lstm ? 7 : 4;
  std::vector<Tally> tally(signals);
  for (std::size_t s = 0; s < signals; ++s)
    tally[s] = Tally{rep.histograms.data() + first + s * buckets, buckets};

  std::vector<CellState> states = make_network_states(net, B);

  std::uint64_t mid = 0, sat = 0;
  for (const SequenceBatch& batch : batches) {
    SequenceCache cache;
    network_forward(net, real, batch, states, BnMode::kInfer, nullptr, &cache);
    if (lstm) {
      for (const auto& layer : cache.lstm)
        for (std::size_t t = 0; t < layer.size(); ++t) {
          const LstmStepCache& sc = layer[t];
          const std::size_t bucket = t;
          const Tensor2D& f = sc.gates[kGateF];
          const Tensor2D& i = sc.gates[kGateI];
          const Tensor2D& o = sc.gates[kGateO];
          const Tensor2D& g = sc.gates[kGateG];
          for (std::size_t k = 0; k < f.size(); ++k) {
            const double iv = i.data()[k];
            tally[0].add(bucket, f.data()[k]);
            tally[1].add(bucket, iv);
            tally[2].add(bucket, o.data()[k]);
            tally[3].add(bucket, g.data()[k]);
            tally[4].add(bucket, o.data()[k] * sc.tanh_c.data()[k]);
            tally[5].add(bucket, sc.c_new.data()[k]);
            tally[6].add(bucket, std::log(iv / (1.0 - iv)));
            if (iv > 0.05 && iv < 0.95) ++mid;
            if (iv <= 0.02 || iv >= 0.98) ++sat;
            ++rep.samples;
          }
        }
    } else {
      for (const auto& layer : cache.gru)
        for (std::size_t t = 0; t < layer.size(); ++t) {
          const GruStepCache& sc = layer[t];
          const std::size_t bucket = t;
          const Tensor2D& z = sc.gates[kGruZ];
          const Tensor2D& r = sc.gates[kGruR];
          const Tensor2D& n = sc.gates[kGruN];
          for (std::size_t k = 0; k < z.size(); ++k) {
            tally[0].add(bucket, z.data()[k]);
            tally[1].add(bucket, r.data()[k]);
            tally[2].add(bucket, n.data()[k]);
            // h = z .* h_prev + (1 - z) .* n, recomputed from the step cache
            tally[3].add(bucket, z.data()[k] * sc.h_prev.data()[k] +
                                     (1.0 - z.data()[k]) * n.data()[k]);
            ++rep.samples;
          }
        }
    }
  }
  if (rep.samples > 0) {
    rep.i_gate_mid_mass = static_cast<double>(mid) / static_cast<double>(rep.samples);
    rep.i_gate_sat_mass = static_cast<double>(sat) / static_cast<double>(rep.samples);
  }
  return rep;
}

void write_histogram_csvs(const InspectReport& report, const std::string& prefix) {
  std::string open_signal;
  std::ofstream out;
  for (const SignalHistogram& h : report.histograms) {
    if (h.signal != open_signal) {
      out.close();
      out.open(prefix + h.signal + ".csv");
      if (!out)
        throw std::runtime_error("cannot open histogram csv: " + prefix + h.signal + ".csv");
      out << "signal,bucket,bin_lo,bin_hi,count\n";
      open_signal = h.signal;
    }
    const double width = (h.hi - h.lo) / static_cast<double>(h.bins.size());
    for (std::size_t k = 0; k < h.bins.size(); ++k) {
      const double lo = h.lo + width * static_cast<double>(k);
      out << h.signal << ',' << h.bucket << ',' << lo << ',' << lo + width << ',' << h.bins[k]
          << '\n';
    }
  }
}

}  // namespace btrnn
