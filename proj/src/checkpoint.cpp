#include "btrnn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

namespace btrnn {

namespace {

constexpr char kMagic[4] = {'B', 'T', 'R', 'N'};
constexpr std::uint8_t kVersion = 1;

struct Writer {
  std::ofstream out;

  explicit Writer(const std::string& path) : out(path, std::ios::binary) {
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  }
  void u8(std::uint8_t v) { out.put(static_cast<char>(v)); }
  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void tensor(const Tensor2D& t) {
    u64(t.rows());
    u64(t.cols());
    for (std::size_t k = 0; k < t.size(); ++k) f64(t.data()[k]);
  }
  void quant(const QuantSpec& q) {
    u8(static_cast<std::uint8_t>(q.mode));
    u8(static_cast<std::uint8_t>(q.sampling));
    f64(q.alpha);
  }
  void bn(const BatchNormState& b) {
    vec(b.phi);
    vec(b.gamma);
    u8(b.gamma_trainable ? 1 : 0);
    f64(b.eps);
    f64(b.momentum);
    u64(b.t_max);
    tensor(b.running_mean);
    tensor(b.running_var);
  }
};

struct Reader {
  std::ifstream in;
  std::string path;

  explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
    if (!in) throw std::runtime_error("cannot open checkpoint: " + p);
  }
  void bytes(char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw std::runtime_error("checkpoint truncated: " + path);
  }
  std::uint8_t u8() {
    char c;
    bytes(&c, 1);
    return static_cast<std::uint8_t>(c);
  }
  std::uint64_t u64() {
    char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i]))
                                     << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void vec(std::vector<double>& v) {
    v.resize(u64());
    for (double& x : v) x = f64();
  }
  void tensor(Tensor2D& t) {
    const std::uint64_t r = u64();
    const std::uint64_t c = u64();
    t = Tensor2D(r, c);
    for (std::size_t k = 0; k < t.size(); ++k) t.data()[k] = f64();
  }
  void quant(QuantSpec& q) {
    q.mode = static_cast<QuantMode>(u8());
    q.sampling = static_cast<Sampling>(u8());
    q.alpha = f64();
  }
  void bn(BatchNormState& b) {
    vec(b.phi);
    vec(b.gamma);
    b.gamma_trainable = u8() != 0;
    b.eps = f64();
    b.momentum = f64();
    b.t_max = u64();
    tensor(b.running_mean);
    tensor(b.running_var);
  }
  void expect_eof() {
    if (in.peek() != std::char_traits<char>::eof())
      throw std::runtime_error("trailing bytes after checkpoint payload: " + path);
  }
};

void write_config(Writer& w, const ModelConfig& c) {
  w.u8(static_cast<std::uint8_t>(c.cell));
  w.u64(c.d_in);
  w.u64(c.vocab);
  w.u64(c.n_classes);
  w.u64(c.d_h);
  w.u64(c.layers);
  w.u8(static_cast<std::uint8_t>(c.mode));
  w.u8(static_cast<std::uint8_t>(c.sampling));
  w.u8(c.use_bn ? 1 : 0);
  w.u8(c.bn_cell ? 1 : 0);
  w.u64(c.t_max);
  w.f64(c.dropout);
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.cell = static_cast<CellKind>(r.u8());
  c.d_in = r.u64();
  c.vocab = r.u64();
  c.n_classes = r.u64();
  c.d_h = r.u64();
  c.layers = r.u64();
  c.mode = static_cast<QuantMode>(r.u8());
  c.sampling = static_cast<Sampling>(r.u8());
  c.use_bn = r.u8() != 0;
  c.bn_cell = r.u8() != 0;
  c.t_max = r.u64();
  c.dropout = r.f64();
  return c;
}

void write_rng(Writer& w, const RngStream& r) {
  w.u64(r.seed);
  w.u64(r.stream);
  w.u64(r.counter);
}

RngStream read_rng(Reader& r) {
  RngStream out{0, 0, 0};
  out.seed = r.u64();
  out.stream = r.u64();
  out.counter = r.u64();
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net, const TrainState& state) {
  Writer w(path);
  w.out.write(kMagic, 4);
  w.u8(kVersion);
  write_config(w, net.cfg);

  for (const auto& p : net.lstm) {
    for (std::size_t g = 0; g < 4; ++g) {
      w.tensor(p.wh[g]);
      w.tensor(p.wx[g]);
      w.vec(p.bias[g]);
      w.quant(p.quant_h[g]);
      w.quant(p.quant_x[g]);
    }
    if (p.use_bn)
      for (std::size_t g = 0; g < 4; ++g) {
        w.bn(p.bn_h[g]);
        w.bn(p.bn_x[g]);
      }
    if (p.bn_cell) w.bn(p.bn_c);
  }
  for (const auto& p : net.gru) {
    for (std::size_t g = 0; g < 3; ++g) {
      w.tensor(p.wh[g]);
      w.tensor(p.wx[g]);
      w.vec(p.bias[g]);
      w.quant(p.quant_h[g]);
      w.quant(p.quant_x[g]);
    }
    if (p.use_bn)
      for (std::size_t g = 0; g < 3; ++g) {
        w.bn(p.bn_h[g]);
        w.bn(p.bn_x[g]);
      }
  }
  w.tensor(net.head.w);
  w.vec(net.head.bias);

  w.u64(state.opt.step);
  w.f64(state.opt.lr_scale);
  w.f64(state.opt.best_valid);
  w.vec(state.opt.m);
  w.vec(state.opt.v);
  write_rng(w, state.sample_rng);
  write_rng(w, state.drop_rng);
  w.u64(state.carry.size());
  for (const auto& s : state.carry) {
    w.tensor(s.h);
    w.tensor(s.c);
  }
  w.u64(state.epoch);
  w.u64(state.cursor);
  if (!w.out) throw std::runtime_error("short write while saving checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (magic[0] != kMagic[0] || magic[1] != kMagic[1] || magic[2] != kMagic[2] ||
      magic[3] != kMagic[3])
    throw std::runtime_error("not a checkpoint file (bad magic): " + path);
  const std::uint8_t version = r.u8();
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + ": " +
                             path);

  const ModelConfig cfg = read_config(r);
  RngStream dummy{0, 0, 0};
  LoadedCheckpoint out{make_network(cfg, dummy), TrainState{}};
  Network& net = out.net;

  for (auto& p : net.lstm) {
    for (std::size_t g = 0; g < 4; ++g) {
      r.tensor(p.wh[g]);
      r.tensor(p.wx[g]);
      r.vec(p.bias[g]);
      r.quant(p.quant_h[g]);
      r.quant(p.quant_x[g]);
    }
    if (p.use_bn)
      for (std::size_t g = 0; g < 4; ++g) {
        r.bn(p.bn_h[g]);
        r.bn(p.bn_x[g]);
      }
    if (p.bn_cell) r.bn(p.bn_c);
  }
  for (auto& p : net.gru) {
    for (std::size_t g = 0; g < 3; ++g) {
      r.tensor(p.wh[g]);
      r.tensor(p.wx[g]);
      r.vec(p.bias[g]);
      r.quant(p.quant_h[g]);
      r.quant(p.quant_x[g]);
    }
    if (p.use_bn)
      for (std::size_t g = 0; g < 3; ++g) {
        r.bn(p.bn_h[g]);
        r.bn(p.bn_x[g]);
      }
  }
  r.tensor(net.head.w);
  r.vec(net.head.bias);

  TrainState& st = out.state;
  st.opt.step = r.u64();
  st.opt.lr_scale = r.f64();
  st.opt.best_valid = r.f64();
  r.vec(st.opt.m);
  r.vec(st.opt.v);
  st.sample_rng = read_rng(r);
  st.drop_rng = read_rng(r);
  st.carry.resize(r.u64());
  for (auto& s : st.carry) {
    r.tensor(s.h);
    r.tensor(s.c);
  }
  st.epoch = r.u64();
  st.cursor = r.u64();
  r.expect_eof();
  return out;
}

}  // namespace btrnn
