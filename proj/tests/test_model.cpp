#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <vector>

#include "btrnn/model.hpp"

using btrnn::BnMode;
using btrnn::CellKind;
using btrnn::ForwardStats;
using btrnn::ModelConfig;
using btrnn::Network;
using btrnn::NetworkGrads;
using btrnn::NetworkRealization;
using btrnn::QuantMode;
using btrnn::RngStream;
using btrnn::Sampling;
using btrnn::SequenceBatch;
using btrnn::SequenceCache;
using btrnn::Tensor2D;

namespace {

Tensor2D random_tensor(std::size_t rows, std::size_t cols, RngStream& rng, double scale = 1.0) {
  Tensor2D t(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t(i, j) = scale * (2.0 * rng.next_uniform() - 1.0);
  return t;
}

std::vector<std::int32_t> random_ids(std::size_t n, std::size_t hi, RngStream& rng) {
  std::vector<std::int32_t> ids(n);
  for (auto& id : ids) id = static_cast<std::int32_t>(rng.next_uniform() * hi);
  return ids;
}

SequenceBatch dense_batch(std::size_t T, std::size_t B, std::size_t d_in, std::size_t classes,
                          RngStream& rng) {
  SequenceBatch b;
  for (std::size_t t = 0; t < T; ++t) {
    b.dense.push_back(random_tensor(B, d_in, rng));
    b.targets.push_back(random_ids(B, classes, rng));
  }
  return b;
}

SequenceBatch token_batch(std::size_t T, std::size_t B, std::size_t vocab, std::size_t classes,
                          RngStream& rng) {
  SequenceBatch b;
  for (std::size_t t = 0; t < T; ++t) {
    b.tokens.push_back(random_ids(B, vocab, rng));
    b.targets.push_back(random_ids(B, classes, rng));
  }
  return b;
}

// The mean cross entropy stays O(1) while individual weight gradients can be
// O(1e-7), so a small step drowns in cancellation noise; 1e-4 balances that
// against truncation for every case below.
double fd_grad(const std::function<double()>& loss, double* param, double h = 1e-4) {
  const double saved = *param;
  *param = saved + h;
  const double lp = loss();
  *param = saved - h;
  const double lm = loss();
  *param = saved;
  return (lp - lm) / (2.0 * h);
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1e-8, std::fabs(a) + std::fabs(b));
}

// Runs a fresh forward for every loss evaluation; state starts at zero and the
// dropout generator (when frozen in) restarts from the same triple, so the
// loss is a deterministic smooth function of the parameters.
struct NetHarness {
  SequenceBatch batch;
  BnMode mode = BnMode::kTrain;
  NetworkRealization real;
  bool use_real = false;
  bool frozen_drop = false;
  RngStream drop_base{0, 0, 0};

  double loss(Network& net) const {
    auto states = btrnn::make_network_states(net, batch.batch());
    RngStream drop = drop_base;
    const ForwardStats st =
        btrnn::network_forward(net, use_real ? &real : nullptr, batch, states, mode,
                               frozen_drop ? &drop : nullptr, nullptr);
    return st.mean_loss();
  }

  NetworkGrads grads(Network& net) const {
    auto states = btrnn::make_network_states(net, batch.batch());
    RngStream drop = drop_base;
    SequenceCache cache;
    btrnn::network_forward(net, use_real ? &real : nullptr, batch, states, mode,
                           frozen_drop ? &drop : nullptr, &cache);
    NetworkGrads g;
    g.init(net);
    btrnn::network_backward(net, batch, cache, g);
    return g;
  }
};

void collect_cell_params(Network& net, const NetworkGrads& g, bool include_weights,
                         std::vector<std::pair<double*, double>>& out) {
  for (std::size_t l = 0; l < net.lstm.size(); ++l) {
    auto& p = net.lstm[l];
    for (std::size_t gi = 0; gi < 4; ++gi) {
      if (include_weights) {
        for (std::size_t k = 0; k < p.wh[gi].size(); ++k)
          out.push_back({p.wh[gi].data() + k, g.lstm[l].wh[gi].data()[k]});
        for (std::size_t k = 0; k < p.wx[gi].size(); ++k)
          out.push_back({p.wx[gi].data() + k, g.lstm[l].wx[gi].data()[k]});
      }
      for (std::size_t k = 0; k < p.d_h; ++k)
        out.push_back({p.bias[gi].data() + k, g.lstm[l].bias[gi][k]});
      if (p.use_bn)
        for (std::size_t k = 0; k < p.d_h; ++k) {
          out.push_back({p.bn_h[gi].phi.data() + k, g.lstm[l].bn_h_phi[gi][k]});
          out.push_back({p.bn_x[gi].phi.data() + k, g.lstm[l].bn_x_phi[gi][k]});
        }
    }
    if (p.bn_cell)
      for (std::size_t k = 0; k < p.d_h; ++k) {
        out.push_back({p.bn_c.phi.data() + k, g.lstm[l].bn_c_phi[k]});
        out.push_back({p.bn_c.gamma.data() + k, g.lstm[l].bn_c_gamma[k]});
      }
  }
  for (std::size_t l = 0; l < net.gru.size(); ++l) {
    auto& p = net.gru[l];
    for (std::size_t gi = 0; gi < 3; ++gi) {
      if (include_weights) {
        for (std::size_t k = 0; k < p.wh[gi].size(); ++k)
          out.push_back({p.wh[gi].data() + k, g.gru[l].wh[gi].data()[k]});
        for (std::size_t k = 0; k < p.wx[gi].size(); ++k)
          out.push_back({p.wx[gi].data() + k, g.gru[l].wx[gi].data()[k]});
      }
      for (std::size_t k = 0; k < p.d_h; ++k)
        out.push_back({p.bias[gi].data() + k, g.gru[l].bias[gi][k]});
      if (p.use_bn)
        for (std::size_t k = 0; k < p.d_h; ++k) {
          out.push_back({p.bn_h[gi].phi.data() + k, g.gru[l].bn_h_phi[gi][k]});
          out.push_back({p.bn_x[gi].phi.data() + k, g.gru[l].bn_x_phi[gi][k]});
        }
    }
  }
}

void collect_head_params(Network& net, const NetworkGrads& g,
                         std::vector<std::pair<double*, double>>& out) {
  for (std::size_t k = 0; k < net.head.w.size(); ++k)
    out.push_back({net.head.w.data() + k, g.head_w.data()[k]});
  for (std::size_t k = 0; k < net.head.bias.size(); ++k)
    out.push_back({net.head.bias.data() + k, g.head_b[k]});
}

void check_fd(Network& net, const NetHarness& h,
              const std::vector<std::pair<double*, double>>& params, double tol) {
  auto loss = [&]() { return h.loss(net); };
  double worst = 0.0;
  for (const auto& [ptr, analytic] : params) {
    const double fd = fd_grad(loss, ptr);
    worst = std::max(worst, rel_err(fd, analytic));
  }
  CHECK(worst < tol);
}

}  // namespace

// ---------------------------------------------------------------------------
// softmax and loss accounting
// ---------------------------------------------------------------------------

TEST_CASE("softmax_rows reproduces hand values and normalizes") {
  Tensor2D logits(2, 2);
  logits(0, 0) = 0.0;
  logits(0, 1) = std::log(2.0);
  logits(1, 0) = 1000.0;  // max subtraction keeps this finite
  logits(1, 1) = 1000.5;
  const Tensor2D p = btrnn::softmax_rows(logits);
  CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(p(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(std::isfinite(p(1, 0)));
  CHECK(p(1, 0) + p(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p(1, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))).epsilon(1e-12));
}

TEST_CASE("a zeroed head scores every class equally") {
  RngStream rng{201, 0, 0};
  ModelConfig cfg;
  cfg.vocab = 7;
  cfg.n_classes = 7;
  cfg.d_h = 5;
  cfg.mode = QuantMode::kNone;
  cfg.use_bn = false;
  cfg.bn_cell = false;
  Network net = btrnn::make_network(cfg, rng);
  net.head.w.fill(0.0);

  SequenceBatch batch = token_batch(4, 3, 7, 7, rng);
  auto states = btrnn::make_network_states(net, 3);
  const ForwardStats st =
      btrnn::network_forward(net, nullptr, batch, states, BnMode::kTrain, nullptr);
  CHECK(st.scored == 12);
  CHECK(st.mean_loss() == doctest::Approx(std::log(7.0)).epsilon(1e-13));
  // ties resolve to class 0, so accuracy counts exactly the zero targets
  std::size_t zeros = 0;
  for (const auto& y : batch.targets)
    for (auto id : y) zeros += id == 0 ? 1 : 0;
  CHECK(st.correct == zeros);
}

TEST_CASE("only scored steps contribute to the loss") {
  RngStream rng{202, 0, 0};
  ModelConfig cfg;
  cfg.d_in = 3;
  cfg.n_classes = 4;
  cfg.d_h = 6;
  cfg.use_bn = true;
  cfg.bn_cell = true;
  cfg.t_max = 5;
  Network net = btrnn::make_network(cfg, rng);

  SequenceBatch batch = dense_batch(5, 4, 3, 4, rng);
  for (std::size_t t = 0; t + 1 < 5; ++t) batch.targets[t].clear();  // score the last step only

  auto states = btrnn::make_network_states(net, 4);
  SequenceCache cache;
  const ForwardStats st =
      btrnn::network_forward(net, nullptr, batch, states, BnMode::kTrain, nullptr, &cache);
  CHECK(st.scored == 4);

  const Tensor2D logits = btrnn::head_forward(net.head, cache.head_in[4]);
  const Tensor2D probs = btrnn::softmax_rows(logits);
  double want = 0.0;
  for (std::size_t b = 0; b < 4; ++b)
    want -= std::log(probs(b, static_cast<std::size_t>(batch.targets[4][b])));
  CHECK(st.loss_sum == doctest::Approx(want).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

TEST_CASE("network construction is reproducible and counts parameters") {
  RngStream a{203, 0, 0}, b{203, 0, 0};
  ModelConfig cfg;
  cfg.vocab = 5;
  cfg.n_classes = 5;
  cfg.d_h = 3;
  cfg.layers = 2;
  cfg.mode = QuantMode::kBinary;
  Network n1 = btrnn::make_network(cfg, a);
  Network n2 = btrnn::make_network(cfg, b);
  CHECK(n1.lstm.size() == 2);
  CHECK(n1.lstm[0].d_x == 5);
  CHECK(n1.lstm[1].d_x == 3);
  CHECK(std::memcmp(n1.head.w.data(), n2.head.w.data(), n1.head.w.size() * sizeof(double)) == 0);
  for (std::size_t g = 0; g < 4; ++g)
    CHECK(std::memcmp(n1.lstm[1].wh[g].data(), n2.lstm[1].wh[g].data(),
                      9 * sizeof(double)) == 0);
  // 4 gates x (3x3 recurrent + 3x5 input + 3 bias) + 4 x (3x3 + 3x3 + 3)
  CHECK(n1.cell_param_count() == 4 * (9 + 15 + 3) + 4 * (9 + 9 + 3));

  cfg.cell = CellKind::kGru;
  RngStream c{203, 1, 0};
  Network n3 = btrnn::make_network(cfg, c);
  CHECK(n3.gru.size() == 2);
  CHECK(n3.cell_param_count() == 3 * (9 + 15 + 3) + 3 * (9 + 9 + 3));
}

TEST_CASE("construction rejects inconsistent configs") {
  RngStream rng{204, 0, 0};
  ModelConfig cfg;
  cfg.d_h = 4;
  cfg.n_classes = 3;
  CHECK_THROWS_AS(btrnn::make_network(cfg, rng), std::invalid_argument);  // no input form
  cfg.d_in = 2;
  cfg.vocab = 9;
  CHECK_THROWS_AS(btrnn::make_network(cfg, rng), std::invalid_argument);  // both input forms
  cfg.vocab = 0;
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(btrnn::make_network(cfg, rng), std::invalid_argument);
  cfg.dropout = 0.0;
  cfg.n_classes = 1;
  CHECK_THROWS_AS(btrnn::make_network(cfg, rng), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// gradients against finite differences, end to end
// ---------------------------------------------------------------------------

TEST_CASE("whole-network gradients match finite differences, plain cell") {
  RngStream rng{205, 0, 0};
  ModelConfig cfg;
  cfg.d_in = 4;
  cfg.n_classes = 4;
  cfg.d_h = 5;
  cfg.use_bn = false;
  cfg.bn_cell = false;
  Network net = btrnn::make_network(cfg, rng);
  NetHarness h;
  h.batch = dense_batch(3, 3, 4, 4, rng);
  const NetworkGrads g = h.grads(net);
  std::vector<std::pair<double*, double>> params;
  collect_cell_params(net, g, true, params);
  collect_head_params(net, g, params);
  check_fd(net, h, params, 1e-5);
}

TEST_CASE("whole-network gradients match finite differences, two normalized layers") {
  RngStream rng{206, 0, 0};
  ModelConfig cfg;
  cfg.d_in = 3;
  cfg.n_classes = 4;
  cfg.d_h = 4;
  cfg.layers = 2;
  cfg.use_bn = true;
  cfg.bn_cell = true;
  cfg.t_max = 3;
  Network net = btrnn::make_network(cfg, rng);
  NetHarness h;
  h.batch = dense_batch(3, 4, 3, 4, rng);
  const NetworkGrads g = h.grads(net);
  std::vector<std::pair<double*, double>> params;
  collect_cell_params(net, g, true, params);
  collect_head_params(net, g, params);
  check_fd(net, h, params, 5e-5);
}

TEST_CASE("whole-network gradients match finite differences under frozen dropout") {
  RngStream rng{207, 0, 0};
  ModelConfig cfg;
  cfg.cell = CellKind::kGru;
  cfg.d_in = 4;
  cfg.n_classes = 3;
  cfg.d_h = 6;
  cfg.layers = 2;
  cfg.use_bn = false;
  cfg.dropout = 0.5;
  Network net = btrnn::make_network(cfg, rng);
  NetHarness h;
  h.batch = dense_batch(3, 3, 4, 3, rng);
  h.frozen_drop = true;
  h.drop_base = RngStream{99, 4, 0};
  const NetworkGrads g = h.grads(net);
  std::vector<std::pair<double*, double>> params;
  collect_cell_params(net, g, true, params);
  collect_head_params(net, g, params);
  check_fd(net, h, params, 1e-5);
}

TEST_CASE("quantized network gradients match finite differences on a frozen draw") {
  RngStream rng{208, 0, 0};
  ModelConfig cfg;
  cfg.vocab = 6;
  cfg.n_classes = 6;
  cfg.d_h = 5;
  cfg.mode = QuantMode::kTernary;
  cfg.use_bn = true;
  cfg.bn_cell = true;
  cfg.t_max = 3;
  Network net = btrnn::make_network(cfg, rng);
  NetHarness h;
  h.batch = token_batch(3, 4, 6, 6, rng);
  RngStream srng{208, 1, 0};
  h.real = btrnn::sample_network_realization(net, srng);
  h.use_real = true;
  const NetworkGrads g = h.grads(net);
  std::vector<std::pair<double*, double>> params;
  collect_cell_params(net, g, false, params);  // weights move the draw; skip them
  collect_head_params(net, g, params);
  check_fd(net, h, params, 1e-5);
}

// ---------------------------------------------------------------------------
// input forms, state carry, dropout, realizations
// ---------------------------------------------------------------------------

TEST_CASE("token and one-hot inputs produce identical losses and gradients") {
  RngStream rng{209, 0, 0};
  ModelConfig tok_cfg;
  tok_cfg.vocab = 8;
  tok_cfg.n_classes = 8;
  tok_cfg.d_h = 5;
  tok_cfg.mode = QuantMode::kBinary;
  tok_cfg.t_max = 2;
  RngStream r1{210, 0, 0}, r2{210, 0, 0};
  Network tnet = btrnn::make_network(tok_cfg, r1);
  ModelConfig den_cfg = tok_cfg;
  den_cfg.vocab = 0;
  den_cfg.d_in = 8;
  Network dnet = btrnn::make_network(den_cfg, r2);

  SequenceBatch tb = token_batch(3, 4, 8, 8, rng);
  SequenceBatch db;
  db.targets = tb.targets;
  for (const auto& step : tb.tokens) {
    Tensor2D onehot(step.size(), 8, 0.0);
    for (std::size_t b = 0; b < step.size(); ++b)
      onehot(b, static_cast<std::size_t>(step[b])) = 1.0;
    db.dense.push_back(onehot);
  }

  RngStream s1{211, 0, 0}, s2{211, 0, 0};
  const NetworkRealization treal = btrnn::sample_network_realization(tnet, s1);
  const NetworkRealization dreal = btrnn::sample_network_realization(dnet, s2);

  auto st1 = btrnn::make_network_states(tnet, 4);
  auto st2 = btrnn::make_network_states(dnet, 4);
  SequenceCache c1, c2;
  const ForwardStats f1 =
      btrnn::network_forward(tnet, &treal, tb, st1, BnMode::kTrain, nullptr, &c1);
  const ForwardStats f2 =
      btrnn::network_forward(dnet, &dreal, db, st2, BnMode::kTrain, nullptr, &c2);
  CHECK(f1.loss_sum == f2.loss_sum);
  CHECK(f1.correct == f2.correct);

  NetworkGrads g1, g2;
  g1.init(tnet);
  g2.init(dnet);
  btrnn::network_backward(tnet, tb, c1, g1);
  btrnn::network_backward(dnet, db, c2, g2);
  for (std::size_t gi = 0; gi < 4; ++gi)
    CHECK(std::memcmp(g1.lstm[0].wx[gi].data(), g2.lstm[0].wx[gi].data(),
                      g1.lstm[0].wx[gi].size() * sizeof(double)) == 0);
  CHECK(std::memcmp(g1.head_w.data(), g2.head_w.data(),
                    g1.head_w.size() * sizeof(double)) == 0);
}

TEST_CASE("carried states make two windows equal one long window") {
  RngStream rng{212, 0, 0};
  ModelConfig cfg;
  cfg.d_in = 3;
  cfg.n_classes = 3;
  cfg.d_h = 4;
  cfg.use_bn = false;  // per-step normalization slots are window-relative
  cfg.bn_cell = false;
  Network net = btrnn::make_network(cfg, rng);

  SequenceBatch full = dense_batch(6, 2, 3, 3, rng);
  SequenceBatch first, second;
  for (std::size_t t = 0; t < 3; ++t) {
    first.dense.push_back(full.dense[t]);
    first.targets.push_back(full.targets[t]);
    second.dense.push_back(full.dense[t + 3]);
    second.targets.push_back(full.targets[t + 3]);
  }

  auto states_full = btrnn::make_network_states(net, 2);
  const ForwardStats sf =
      btrnn::network_forward(net, nullptr, full, states_full, BnMode::kTrain, nullptr);

  auto states = btrnn::make_network_states(net, 2);
  const ForwardStats s1 =
      btrnn::network_forward(net, nullptr, first, states, BnMode::kTrain, nullptr);
  const ForwardStats s2 =
      btrnn::network_forward(net, nullptr, second, states, BnMode::kTrain, nullptr);

  CHECK(sf.loss_sum == doctest::Approx(s1.loss_sum + s2.loss_sum).epsilon(1e-13));
  CHECK(std::memcmp(states_full[0].h.data(), states[0].h.data(),
                    states[0].h.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(states_full[0].c.data(), states[0].c.data(),
                    states[0].c.size() * sizeof(double)) == 0);
}

TEST_CASE("dropout draws are reproducible and vanish at inference") {
  RngStream rng{213, 0, 0};
  ModelConfig cfg;
  cfg.d_in = 4;
  cfg.n_classes = 4;
  cfg.d_h = 64;
  cfg.layers = 2;
  cfg.use_bn = false;
  cfg.bn_cell = false;
  cfg.dropout = 0.3;
  Network net = btrnn::make_network(cfg, rng);
  SequenceBatch batch = dense_batch(2, 6, 4, 4, rng);

  auto run = [&](RngStream* drop) {
    auto states = btrnn::make_network_states(net, 6);
    return btrnn::network_forward(net, nullptr, batch, states, BnMode::kTrain, drop);
  };
  RngStream d1{50, 1, 0}, d2{50, 1, 0}, d3{50, 2, 0};
  const double l1 = run(&d1).loss_sum;
  const double l2 = run(&d2).loss_sum;
  const double l3 = run(&d3).loss_sum;
  CHECK(l1 == l2);
  CHECK(l1 != l3);
  CHECK(d1.counter == 2ULL * 2 * 6 * 64);  // layers x steps x batch x width

  // no generator means no dropout: bitwise identical to back-to-back eval runs
  const double e1 = run(nullptr).loss_sum;
  const double e2 = run(nullptr).loss_sum;
  CHECK(e1 == e2);
  CHECK(e1 != l1);

  // inverted scaling keeps zeros at rate dropout and survivors at 1/keep
  SequenceCache cache;
  auto states = btrnn::make_network_states(net, 6);
  RngStream d4{50, 3, 0};
  btrnn::network_forward(net, nullptr, batch, states, BnMode::kTrain, &d4, &cache);
  std::size_t zeros = 0, total = 0;
  for (const auto& per_t : cache.drop_mask)
    for (const auto& m : per_t)
      for (std::size_t k = 0; k < m.size(); ++k) {
        zeros += m.data()[k] == 0.0 ? 1 : 0;
        if (m.data()[k] != 0.0) CHECK(m.data()[k] == doctest::Approx(1.0 / 0.7));
        ++total;
      }
  CHECK(std::fabs(static_cast<double>(zeros) / total - 0.3) < 0.05);
}

TEST_CASE("realization draws are reproducible and rounding consumes nothing") {
  RngStream rng{214, 0, 0};
  ModelConfig cfg;
  cfg.vocab = 6;
  cfg.n_classes = 6;
  cfg.d_h = 5;
  cfg.layers = 2;
  cfg.mode = QuantMode::kTernary;
  Network net = btrnn::make_network(cfg, rng);

  RngStream a{215, 0, 0}, b{215, 0, 0};
  const NetworkRealization r1 = btrnn::sample_network_realization(net, a);
  const NetworkRealization r2 = btrnn::sample_network_realization(net, b);
  CHECK(a.counter == b.counter);
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t g = 0; g < 4; ++g)
      CHECK(std::memcmp(r1.lstm[l]->wh[g].data(), r2.lstm[l]->wh[g].data(),
                        r1.lstm[l]->wh[g].size() * sizeof(double)) == 0);

  const NetworkRealization rounded = btrnn::round_network_realization(net);
  RngStream unused{0, 0, 0};
  btrnn::QuantSpec spec = net.lstm[0].quant_h[0];
  spec.sampling = Sampling::kDeterministic;
  const Tensor2D want = btrnn::sample_quantized(net.lstm[0].wh[0], spec, unused);
  CHECK(std::memcmp(rounded.lstm[0]->wh[0].data(), want.data(),
                    want.size() * sizeof(double)) == 0);
}

TEST_CASE("forward rejects mismatched realization and state arguments") {
  RngStream rng{216, 0, 0};
  ModelConfig cfg;
  cfg.vocab = 5;
  cfg.n_classes = 5;
  cfg.d_h = 4;
  cfg.mode = QuantMode::kBinary;
  Network qnet = btrnn::make_network(cfg, rng);
  cfg.mode = QuantMode::kNone;
  Network fnet = btrnn::make_network(cfg, rng);

  SequenceBatch batch = token_batch(2, 3, 5, 5, rng);
  auto states = btrnn::make_network_states(qnet, 3);
  CHECK_THROWS_AS(btrnn::network_forward(qnet, nullptr, batch, states, BnMode::kTrain, nullptr),
                  std::invalid_argument);
  RngStream srng{216, 1, 0};
  const NetworkRealization real = btrnn::sample_network_realization(qnet, srng);
  CHECK_THROWS_AS(btrnn::network_forward(fnet, &real, batch, states, BnMode::kTrain, nullptr),
                  std::invalid_argument);

  auto bad_states = btrnn::make_network_states(qnet, 3);
  bad_states.pop_back();
  CHECK_THROWS_AS(
      btrnn::network_forward(qnet, &real, batch, bad_states, BnMode::kTrain, nullptr),
      std::invalid_argument);

  SequenceBatch ragged = batch;
  ragged.tokens[1].pop_back();
  CHECK_THROWS_AS(btrnn::network_forward(qnet, &real, ragged, states, BnMode::kTrain, nullptr),
                  std::invalid_argument);
  SequenceBatch badid = batch;
  badid.targets[0][0] = 5;
  CHECK_THROWS_AS(btrnn::network_forward(qnet, &real, badid, states, BnMode::kTrain, nullptr),
                  std::invalid_argument);
  SequenceBatch empty;
  CHECK_THROWS_AS(btrnn::network_forward(qnet, &real, empty, states, BnMode::kTrain, nullptr),
                  std::invalid_argument);
}
