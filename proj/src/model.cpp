#include "btrnn/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "btrnn/kernels.hpp"

namespace btrnn {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Tensor2D glorot_uniform(std::size_t rows, std::size_t cols, double alpha, RngStream& rng) {
  Tensor2D w(rows, cols);
  const std::uint64_t base = rng.counter;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      w(i, j) = alpha * (2.0 * rng.uniform_at(base + i * cols + j) - 1.0);
  rng.advance(rows * cols);
  return w;
}

void mul_mask(Tensor2D& h, const Tensor2D& mask) {
  double* p = h.data();
  const double* m = mask.data();
#pragma omp simd
  for (std::size_t k = 0; k < h.size(); ++k) p[k] *= m[k];
}

void add_into(Tensor2D& dst, const Tensor2D& src) {
  double* d = dst.data();
  const double* s = src.data();
#pragma omp simd
  for (std::size_t k = 0; k < dst.size(); ++k) d[k] += s[k];
}

void validate_config(const ModelConfig& cfg) {
  require(cfg.d_h >= 1, "model config: d_h must be positive");
  require(cfg.layers >= 1, "model config: need at least one layer");
  require(cfg.n_classes >= 2, "model config: need at least two classes");
  require((cfg.d_in == 0) != (cfg.vocab == 0),
          "model config: set exactly one of d_in (dense input) and vocab (token input)");
  require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "model config: dropout must be in [0, 1)");
  require(cfg.t_max >= 1, "model config: t_max must be positive");
}

void validate_batch(const ModelConfig& cfg, const SequenceBatch& batch) {
  const std::size_t T = batch.steps(), B = batch.batch();
  require(T >= 1, "network_forward: empty window");
  require(B >= 1, "network_forward: empty batch");
  require(batch.tokens.empty() != batch.dense.empty(),
          "network_forward: populate exactly one of tokens and dense");
  require(cfg.token_input() == !batch.tokens.empty(),
          "network_forward: input form does not match the model config");
  require(batch.targets.size() == T, "network_forward: need one target slot per step");
  for (std::size_t t = 0; t < T; ++t) {
    if (!batch.tokens.empty())
      require(batch.tokens[t].size() == B, "network_forward: ragged token step " +
                                               std::to_string(t));
    else
      require(batch.dense[t].rows() == B && batch.dense[t].cols() == cfg.d_in,
              "network_forward: bad dense shape at step " + std::to_string(t));
    const auto& y = batch.targets[t];
    require(y.empty() || y.size() == B,
            "network_forward: targets at step " + std::to_string(t) +
                " must be empty or one per batch row");
    for (std::int32_t id : y)
      require(id >= 0 && static_cast<std::size_t>(id) < cfg.n_classes,
              "network_forward: target id " + std::to_string(id) + " outside [0," +
                  std::to_string(cfg.n_classes) + ")");
  }
}

}  // namespace

const char* to_string(CellKind k) { return k == CellKind::kLstm ? "lstm" : "gru"; }

std::size_t Network::cell_param_count() const {
  std::size_t total = 0;
  const std::size_t gates = cfg.cell == CellKind::kLstm ? 4 : 3;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t d_x = l == 0 ? cfg.input_width() : cfg.d_h;
    total += gates * (cfg.d_h * cfg.d_h + cfg.d_h * d_x + cfg.d_h);
  }
  return total;
}

Network make_network(const ModelConfig& cfg, RngStream& rng) {
  validate_config(cfg);
  Network net;
  net.cfg = cfg;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t d_x = l == 0 ? cfg.input_width() : cfg.d_h;
    if (cfg.cell == CellKind::kLstm)
      net.lstm.push_back(make_lstm_params(d_x, cfg.d_h, cfg.mode, cfg.sampling, cfg.use_bn,
                                          cfg.bn_cell, cfg.t_max, rng));
    else
      net.gru.push_back(
          make_gru_params(d_x, cfg.d_h, cfg.mode, cfg.sampling, cfg.use_bn, cfg.t_max, rng));
  }
  net.head.w = glorot_uniform(cfg.n_classes, cfg.d_h, glorot_alpha(cfg.d_h, cfg.n_classes), rng);
  net.head.bias.assign(cfg.n_classes, 0.0);
  return net;
}

std::vector<CellState> make_network_states(const Network& net, std::size_t batch) {
  std::vector<CellState> states;
  for (std::size_t l = 0; l < net.cfg.layers; ++l)
    states.push_back(
        make_zero_state(batch, net.cfg.d_h, /*with_c=*/net.cfg.cell == CellKind::kLstm));
  return states;
}

NetworkRealization sample_network_realization(const Network& net, RngStream& rng) {
  NetworkRealization real;
  for (const auto& p : net.lstm)
    real.lstm.push_back(std::make_shared<LstmRealization>(sample_lstm_realization(p, rng)));
  for (const auto& p : net.gru)
    real.gru.push_back(std::make_shared<GruRealization>(sample_gru_realization(p, rng)));
  return real;
}

NetworkRealization round_network_realization(const Network& net) {
  NetworkRealization real;
  RngStream unused{0, 0, 0};
  auto round_spec = [](QuantSpec spec) {
    spec.sampling = Sampling::kDeterministic;
    return spec;
  };
  for (const auto& p : net.lstm) {
    auto r = std::make_shared<LstmRealization>();
    for (std::size_t g = 0; g < 4; ++g) {
      r->wh[g] = sample_quantized(p.wh[g], round_spec(p.quant_h[g]), unused);
      r->wx[g] = sample_quantized(p.wx[g], round_spec(p.quant_x[g]), unused);
    }
    real.lstm.push_back(std::move(r));
  }
  for (const auto& p : net.gru) {
    auto r = std::make_shared<GruRealization>();
    for (std::size_t g = 0; g < 3; ++g) {
      r->wh[g] = sample_quantized(p.wh[g], round_spec(p.quant_h[g]), unused);
      r->wx[g] = sample_quantized(p.wx[g], round_spec(p.quant_x[g]), unused);
    }
    real.gru.push_back(std::move(r));
  }
  return real;
}

Tensor2D head_forward(const SoftmaxHead& head, const Tensor2D& h) {
  Tensor2D logits = matmul_nt(h, head.w);
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    double* row = logits.row(b);
#pragma omp simd
    for (std::size_t j = 0; j < logits.cols(); ++j) row[j] += head.bias[j];
  }
  return logits;
}

Tensor2D softmax_rows(const Tensor2D& logits) {
  Tensor2D probs(logits.rows(), logits.cols());
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const double* in = logits.row(b);
    double* out = probs.row(b);
    double mx = in[0];
    for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, in[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      out[j] = std::exp(in[j] - mx);
      denom += out[j];
    }
    const double inv = 1.0 / denom;
    for (std::size_t j = 0; j < logits.cols(); ++j) out[j] *= inv;
  }
  return probs;
}

void NetworkGrads::init(const Network& net) {
  lstm.assign(net.lstm.size(), LstmGrads{});
  for (std::size_t l = 0; l < net.lstm.size(); ++l) lstm[l].init(net.lstm[l]);
  gru.assign(net.gru.size(), GruGrads{});
  for (std::size_t l = 0; l < net.gru.size(); ++l) gru[l].init(net.gru[l]);
  head_w = Tensor2D(net.head.w.rows(), net.head.w.cols(), 0.0);
  head_b.assign(net.head.bias.size(), 0.0);
}

void NetworkGrads::zero() {
  for (auto& g : lstm) g.zero();
  for (auto& g : gru) g.zero();
  head_w.fill(0.0);
  head_b.assign(head_b.size(), 0.0);
}

ForwardStats network_forward(Network& net, const NetworkRealization* real,
                             const SequenceBatch& batch, std::vector<CellState>& states,
                             BnMode mode, RngStream* drop_rng, SequenceCache* cache) {
  const ModelConfig& cfg = net.cfg;
  validate_batch(cfg, batch);
  const std::size_t T = batch.steps(), B = batch.batch(), L = cfg.layers;
  require(states.size() == L, "network_forward: need one state per layer");
  const bool quant = cfg.mode != QuantMode::kNone;
  require(quant == (real != nullptr),
          quant ? "network_forward: quantized network needs a realization"
                : "network_forward: full-precision network takes no realization");
  if (real)
    require(real->lstm.size() == net.lstm.size() && real->gru.size() == net.gru.size(),
            "network_forward: realization layer count mismatch");
  const bool train_drop = drop_rng != nullptr && cfg.dropout > 0.0;

  if (cache) {
    cache->lstm.assign(net.lstm.empty() ? 0 : L, std::vector<LstmStepCache>(T));
    cache->gru.assign(net.gru.empty() ? 0 : L, std::vector<GruStepCache>(T));
    cache->drop_mask.assign(train_drop ? L : 0, std::vector<Tensor2D>(T));
    cache->head_in.assign(T, Tensor2D());
  }

  const double keep = 1.0 - cfg.dropout;
  std::vector<Tensor2D> hs(T);
  for (std::size_t l = 0; l < L; ++l) {
    CellState s = std::move(states[l]);
    for (std::size_t t = 0; t < T; ++t) {
      const StepInput in = l > 0 ? StepInput(hs[t])
                                 : (cfg.token_input() ? StepInput(batch.tokens[t])
                                                      : StepInput(batch.dense[t]));
      if (cfg.cell == CellKind::kLstm) {
        LstmStepCache* c = cache ? &cache->lstm[l][t] : nullptr;
        if (quant)
          s = lstm_step_quantized(net.lstm[l], real->lstm[l], in, s, t, mode, c);
        else if (cfg.use_bn)
          s = lstm_step_bn_fp(net.lstm[l], in, s, t, mode, c);
        else
          s = lstm_step_fp(net.lstm[l], in, s, c);
      } else {
        GruStepCache* c = cache ? &cache->gru[l][t] : nullptr;
        if (quant)
          s = gru_step_quantized(net.gru[l], real->gru[l], in, s, t, mode, c);
        else if (cfg.use_bn)
          s = gru_step_bn_fp(net.gru[l], in, s, t, mode, c);
        else
          s = gru_step_fp(net.gru[l], in, s, c);
      }
      hs[t] = s.h;
    }
    states[l] = std::move(s);
    if (train_drop) {
      for (std::size_t t = 0; t < T; ++t) {
        Tensor2D mask(B, cfg.d_h);
        for (std::size_t k = 0; k < mask.size(); ++k)
          mask.data()[k] = drop_rng->next_uniform() < keep ? 1.0 / keep : 0.0;
        mul_mask(hs[t], mask);
        if (cache) cache->drop_mask[l][t] = std::move(mask);
      }
    }
  }

  ForwardStats stats;
  for (std::size_t t = 0; t < T; ++t) {
    if (!batch.targets[t].empty()) score_step(net.head, hs[t], batch.targets[t], stats);
    if (cache) cache->head_in[t] = std::move(hs[t]);
  }
  return stats;
}

void score_step(const SoftmaxHead& head, const Tensor2D& h,
                const std::vector<std::int32_t>& targets, ForwardStats& stats) {
  const Tensor2D logits = head_forward(head, h);
  const std::size_t B = logits.rows(), n_classes = logits.cols();
  for (std::size_t b = 0; b < B; ++b) {
    const double* row = logits.row(b);
    double mx = row[0];
    std::size_t argmax = 0;
    for (std::size_t j = 1; j < n_classes; ++j)
      if (row[j] > mx) {
        mx = row[j];
        argmax = j;
      }
    double denom = 0.0;
    for (std::size_t j = 0; j < n_classes; ++j) denom += std::exp(row[j] - mx);
    const auto y = static_cast<std::size_t>(targets[b]);
    stats.loss_sum += mx + std::log(denom) - row[y];
    if (argmax == y) ++stats.correct;
  }
  stats.scored += B;
}

void network_backward(Network& net, const SequenceBatch& batch, const SequenceCache& cache,
                      NetworkGrads& grads) {
  const ModelConfig& cfg = net.cfg;
  const std::size_t T = batch.steps(), B = batch.batch(), L = cfg.layers;
  require(cache.head_in.size() == T, "network_backward: cache does not match the batch");
  std::size_t scored = 0;
  for (std::size_t t = 0; t < T; ++t)
    if (!batch.targets[t].empty()) scored += B;
  require(scored >= 1, "network_backward: window has no scored positions");
  const double inv_n = 1.0 / static_cast<double>(scored);
  const bool dropped = !cache.drop_mask.empty();

  // head gradients and the per-step gradient flowing into the top layer
  std::vector<Tensor2D> dh_above(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (batch.targets[t].empty()) {
      dh_above[t] = Tensor2D(B, cfg.d_h, 0.0);
      continue;
    }
    const Tensor2D logits = head_forward(net.head, cache.head_in[t]);
    Tensor2D dlogits = softmax_rows(logits);
    for (std::size_t b = 0; b < B; ++b) {
      double* row = dlogits.row(b);
#pragma omp simd
      for (std::size_t j = 0; j < cfg.n_classes; ++j) row[j] *= inv_n;
      row[static_cast<std::size_t>(batch.targets[t][b])] -= inv_n;
    }
    matmul_tn_acc(dlogits, cache.head_in[t], grads.head_w);
    colsum_acc(dlogits, grads.head_b);
    dh_above[t] = matmul(dlogits, net.head.w);
    if (dropped) mul_mask(dh_above[t], cache.drop_mask[L - 1][t]);
  }

  for (std::size_t l = L; l-- > 0;) {
    Tensor2D dh_next(B, cfg.d_h, 0.0), dc_next(B, cfg.d_h, 0.0);
    std::vector<Tensor2D> dx_store(l > 0 ? T : 0);
    for (std::size_t t = T; t-- > 0;) {
      Tensor2D dh_total = dh_above[t];
      add_into(dh_total, dh_next);
      Tensor2D dh_prev, dc_prev;
      Tensor2D* dx = l > 0 ? &dx_store[t] : nullptr;
      if (cfg.cell == CellKind::kLstm)
        lstm_backward_step(net.lstm[l], cache.lstm[l][t], dh_total, dc_next, dh_prev, dc_prev,
                           dx, grads.lstm[l]);
      else
        gru_backward_step(net.gru[l], cache.gru[l][t], dh_total, dh_prev, dx, grads.gru[l]);
      dh_next = std::move(dh_prev);
      if (cfg.cell == CellKind::kLstm) dc_next = std::move(dc_prev);
    }
    if (l == 0) break;
    for (std::size_t t = 0; t < T; ++t) {
      dh_above[t] = std::move(dx_store[t]);
      if (dropped) mul_mask(dh_above[t], cache.drop_mask[l - 1][t]);
    }
  }
}

}  // namespace btrnn
