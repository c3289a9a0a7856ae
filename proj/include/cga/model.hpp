#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include <json.hpp>

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cga/attributes.hpp"
#include "cga/autodiff.hpp"
#include "cga/corpus.hpp"
#include "cga/objectives.hpp"
#include "cga/rng.hpp"

namespace cga {

enum class CellType { Gru, Lstm };
enum class DiscArch { FeedForward, Recurrent };

inline const char* cell_type_name(CellType c) { return c == CellType::Gru ? "gru" : "lstm"; }
inline CellType cell_type_from_name(const std::string& s) {
  if (s == "gru") return CellType::Gru;
  if (s == "lstm") return CellType::Lstm;
  throw std::invalid_argument("unknown cell type '" + s + "'");
}

inline const char* disc_arch_name(DiscArch a) {
  return a == DiscArch::FeedForward ? "feedforward" : "recurrent";
}
inline DiscArch disc_arch_from_name(const std::string& s) {
  if (s == "feedforward") return DiscArch::FeedForward;
  if (s == "recurrent") return DiscArch::Recurrent;
  throw std::invalid_argument("unknown discriminator architecture '" + s + "'");
}

// Latent width grows with the attribute count; the feed-forward
// discriminator keeps one width while the recurrent one follows the
// attribute count.
inline int default_latent_dim(int n_attributes) { return n_attributes <= 2 ? 32 : 50; }
inline int default_disc_hidden(DiscArch arch, int n_attributes) {
  if (arch == DiscArch::FeedForward) return 64;
  return n_attributes <= 2 ? 50 : 64;
}

struct ModelConfig {
  int vocab = 0;
  int emb_dim = 300;
  int hidden = 256;
  int d_z = 32;
  int disc_hidden = 64;
  int max_len = kMaxSentenceLen;
  CellType cell = CellType::Gru;
  DiscArch disc_arch = DiscArch::FeedForward;
  std::vector<int> head_sizes;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  int attr_dim() const {
    int d = 0;
    for (int n : head_sizes) d += n;
    return d;
  }

  void validate() const {
    if (vocab <= kNumSpecials)
      throw std::invalid_argument("model config: vocab must exceed the special tokens");
    if (emb_dim <= 0 || hidden <= 0 || d_z <= 0 || disc_hidden <= 0 || max_len <= 0)
      throw std::invalid_argument("model config: dimensions must be positive");
    if (head_sizes.empty())
      throw std::invalid_argument("model config: needs at least one attribute head");
    for (int n : head_sizes)
      if (n < 2) throw std::invalid_argument("model config: attribute heads need >= 2 values");
    if (bn_eps <= 0) throw std::invalid_argument("model config: bn_eps must be positive");
    if (bn_momentum <= 0 || bn_momentum > 1)
      throw std::invalid_argument("model config: bn_momentum must be in (0,1]");
  }

  nlohmann::json to_json() const {
    return {{"vocab", vocab},
            {"emb_dim", emb_dim},
            {"hidden", hidden},
            {"d_z", d_z},
            {"disc_hidden", disc_hidden},
            {"max_len", max_len},
            {"cell", cell_type_name(cell)},
            {"disc_arch", disc_arch_name(disc_arch)},
            {"head_sizes", head_sizes},
            {"bn_eps", bn_eps},
            {"bn_momentum", bn_momentum}};
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.vocab = j.at("vocab").get<int>();
    c.emb_dim = j.at("emb_dim").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.d_z = j.at("d_z").get<int>();
    c.disc_hidden = j.at("disc_hidden").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.cell = cell_type_from_name(j.at("cell").get<std::string>());
    c.disc_arch = disc_arch_from_name(j.at("disc_arch").get<std::string>());
    c.head_sizes = j.at("head_sizes").get<std::vector<int>>();
    c.bn_eps = j.at("bn_eps").get<double>();
    c.bn_momentum = j.at("bn_momentum").get<double>();
    return c;
  }

  bool operator==(const ModelConfig& o) const { return to_json() == o.to_json(); }
};

// All learnable arrays by name, plus non-learnable buffers (the batch-norm
// running statistics). Name order is the canonical registration order and is
// what checkpoints and the optimizer iterate over.
template <class S>
struct ModelState {
  ModelConfig config;
  AttributeSchema schema;
  std::vector<std::string> param_names;
  std::map<std::string, Mat<S>> params;
  std::vector<std::string> buffer_names;
  std::map<std::string, Mat<S>> buffers;

  Mat<S>& param(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return it->second;
  }
  const Mat<S>& param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("unknown parameter '" + name + "'");
    return it->second;
  }
  Mat<S>& buffer(const std::string& name) {
    auto it = buffers.find(name);
    if (it == buffers.end()) throw std::out_of_range("unknown buffer '" + name + "'");
    return it->second;
  }
  const Mat<S>& buffer(const std::string& name) const {
    auto it = buffers.find(name);
    if (it == buffers.end()) throw std::out_of_range("unknown buffer '" + name + "'");
    return it->second;
  }

  long parameter_count() const {
    long n = 0;
    for (const auto& name : param_names) n += params.at(name).size();
    return n;
  }

  void check_finite() const {
    for (const auto& name : param_names)
      if (!params.at(name).allFinite())
        throw std::runtime_error("parameter '" + name + "' contains non-finite values");
  }

  static ModelState init(const ModelConfig& config, const AttributeSchema& schema,
                         std::uint64_t seed);
};

namespace detail {

enum class InitKind { Uniform, Orthogonal, Zeros, Ones };

// Orthogonal via QR of a Gaussian matrix, with the sign of R's diagonal
// folded in so the draw is unique.
inline Mat<double> orthogonal_matrix(int n, Rng& rng) {
  Mat<double> a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat<double>> qr(a);
  Mat<double> q = qr.householderQ() * Mat<double>::Identity(n, n);
  const Mat<double> r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace detail

template <class S>
ModelState<S> ModelState<S>::init(const ModelConfig& config, const AttributeSchema& schema,
                                  std::uint64_t seed) {
  config.validate();
  schema.validate();
  if (static_cast<int>(config.head_sizes.size()) != schema.size())
    throw std::invalid_argument("model config: head count does not match schema");
  for (int k = 0; k < schema.size(); ++k)
    if (config.head_sizes[k] != static_cast<int>(schema.attributes[k].values.size()))
      throw std::invalid_argument("model config: head size mismatch for attribute '" +
                                  schema.attributes[k].name + "'");

  ModelState st;
  st.config = config;
  st.schema = schema;
  Rng rng = Rng::substream(seed, "model-init");

  auto add = [&](const std::string& name, int rows, int cols, detail::InitKind kind) {
    Mat<S> m(rows, cols);
    switch (kind) {
      case detail::InitKind::Uniform:
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < cols; ++j) m(i, j) = S(rng.uniform(-0.1, 0.1));
        break;
      case detail::InitKind::Orthogonal: {
        if (rows != cols)
          throw std::logic_error("orthogonal init needs a square matrix: " + name);
        m = detail::orthogonal_matrix(rows, rng).template cast<S>();
        break;
      }
      case detail::InitKind::Zeros: m.setZero(); break;
      case detail::InitKind::Ones: m.setOnes(); break;
    }
    st.param_names.push_back(name);
    st.params.emplace(name, std::move(m));
  };
  auto add_buffer = [&](const std::string& name, int rows, detail::InitKind kind) {
    Mat<S> m(rows, 1);
    m = kind == detail::InitKind::Ones ? Mat<S>(Mat<S>::Ones(rows, 1))
                                       : Mat<S>(Mat<S>::Zero(rows, 1));
    st.buffer_names.push_back(name);
    st.buffers.emplace(name, std::move(m));
  };
  auto add_cell = [&](const std::string& prefix, int in_dim, int h) {
    const std::vector<std::string> gates =
        config.cell == CellType::Gru ? std::vector<std::string>{"r", "u", "c"}
                                     : std::vector<std::string>{"i", "f", "o", "g"};
    for (const auto& g : gates) {
      add(prefix + "Wx" + g, h, in_dim, detail::InitKind::Uniform);
      add(prefix + "Wh" + g, h, h, detail::InitKind::Orthogonal);
      add(prefix + "b" + g, h, 1, detail::InitKind::Uniform);
    }
  };

  add("emb", config.emb_dim, config.vocab, detail::InitKind::Uniform);
  add_cell("enc.", config.emb_dim, config.hidden);
  add("enc.mu.W", config.d_z, config.hidden, detail::InitKind::Uniform);
  add("enc.mu.b", config.d_z, 1, detail::InitKind::Uniform);
  add("enc.lv.W", config.d_z, config.hidden, detail::InitKind::Uniform);
  add("enc.lv.b", config.d_z, 1, detail::InitKind::Uniform);
  add("init.W", config.hidden, config.d_z + config.attr_dim(), detail::InitKind::Uniform);
  add("init.b", config.hidden, 1, detail::InitKind::Uniform);
  add_cell("dec.", config.emb_dim, config.hidden);
  add("dec.out.W", config.vocab, config.hidden, detail::InitKind::Uniform);
  add("dec.out.b", config.vocab, 1, detail::InitKind::Uniform);

  const int dh = config.disc_hidden;
  if (config.disc_arch == DiscArch::FeedForward) {
    add("disc.fc1.W", dh, config.d_z, detail::InitKind::Uniform);
    add("disc.fc1.b", dh, 1, detail::InitKind::Uniform);
    add("disc.bn1.gamma", dh, 1, detail::InitKind::Ones);
    add("disc.bn1.beta", dh, 1, detail::InitKind::Zeros);
    add("disc.fc2.W", dh, dh, detail::InitKind::Uniform);
    add("disc.fc2.b", dh, 1, detail::InitKind::Uniform);
    add("disc.bn2.gamma", dh, 1, detail::InitKind::Ones);
    add("disc.bn2.beta", dh, 1, detail::InitKind::Zeros);
    add_buffer("disc.bn1.mean", dh, detail::InitKind::Zeros);
    add_buffer("disc.bn1.var", dh, detail::InitKind::Ones);
    add_buffer("disc.bn2.mean", dh, detail::InitKind::Zeros);
    add_buffer("disc.bn2.var", dh, detail::InitKind::Ones);
  } else {
    // One LSTM step over z; only the hidden-to-hidden halves are orthogonal.
    for (const std::string g : {"i", "f", "o", "g"}) {
      add("disc.rnn.Wx" + g, dh, config.d_z, detail::InitKind::Uniform);
      add("disc.rnn.Wh" + g, dh, dh, detail::InitKind::Orthogonal);
      add("disc.rnn.b" + g, dh, 1, detail::InitKind::Uniform);
    }
  }
  for (std::size_t k = 0; k < config.head_sizes.size(); ++k) {
    add("disc.head" + std::to_string(k) + ".W", config.head_sizes[k], dh,
        detail::InitKind::Uniform);
    add("disc.head" + std::to_string(k) + ".b", config.head_sizes[k], 1,
        detail::InitKind::Uniform);
  }
  return st;
}

template <class S>
struct DiscriminatorOutput {
  std::vector<Vec<S>> probs;  // one simplex vector per attribute head
};

template <class S>
S discriminator_loss(const DiscriminatorOutput<S>& out, const AttributeVector& truth) {
  return discriminator_truth_loss<S>(out.probs, truth.labels);
}

// Batch statistics captured during a feed-forward discriminator pass; folded
// into the running buffers only on discriminator update steps.
template <class S>
struct DiscBatchStats {
  bool valid = false;
  Mat<S> mean1, var1, mean2, var2;
};

template <class S>
void update_running_stats(ModelState<S>& state, const DiscBatchStats<S>& stats) {
  if (!stats.valid) return;
  const S m = S(state.config.bn_momentum);
  state.buffer("disc.bn1.mean") = (S(1) - m) * state.buffer("disc.bn1.mean") + m * stats.mean1;
  state.buffer("disc.bn1.var") = (S(1) - m) * state.buffer("disc.bn1.var") + m * stats.var1;
  state.buffer("disc.bn2.mean") = (S(1) - m) * state.buffer("disc.bn2.mean") + m * stats.mean2;
  state.buffer("disc.bn2.var") = (S(1) - m) * state.buffer("disc.bn2.var") + m * stats.var2;
}

// Forward passes over a tape. Parameters become tape leaves on first use;
// the same leaf is reused within one tape so gradients accumulate per
// parameter. One TapedModel serves one tape.
template <class S>
class TapedModel {
 public:
  TapedModel(Tape<S>& tape, const ModelState<S>& state) : tape_(&tape), state_(&state) {}

  int p(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const int id = tape_->leaf(state_->param(name));
    bound_.emplace(name, id);
    return id;
  }

  bool is_bound(const std::string& name) const { return bound_.count(name) > 0; }

  // Gradient of a parameter after backward(); zero matrix if the parameter
  // never entered the graph.
  Mat<S> param_grad(const std::string& name) const {
    auto it = bound_.find(name);
    if (it == bound_.end()) {
      const Mat<S>& v = state_->param(name);
      return Mat<S>::Zero(v.rows(), v.cols());
    }
    return tape_->grad(it->second);
  }

  struct LatentNodes {
    int mu = -1;
    int logvar = -1;
  };
  struct RecState {
    int h = -1;
    int c = -1;  // unused for GRU
  };

  RecState zero_state(int cols = 1) {
    const int z = tape_->leaf(Mat<S>::Zero(state_->config.hidden, cols));
    if (state_->config.cell == CellType::Gru) return {z, -1};
    return {z, tape_->leaf(Mat<S>::Zero(state_->config.hidden, cols))};
  }

  RecState cell_step(const std::string& prefix, int x, RecState s) {
    auto gate = [&](const std::string& g, int xx, int hh) {
      return tape_->add_bcast_col(
          tape_->add(tape_->matmul(p(prefix + "Wx" + g), xx),
                     tape_->matmul(p(prefix + "Wh" + g), hh)),
          p(prefix + "b" + g));
    };
    if (state_->config.cell == CellType::Gru) {
      const int r = tape_->sigmoid(gate("r", x, s.h));
      const int u = tape_->sigmoid(gate("u", x, s.h));
      const int rh = tape_->cmul(r, s.h);
      const int c = tape_->tanh_(gate("c", x, rh));
      // h' = (1-u) c + u h, written without a ones constant.
      const int h = tape_->add(c, tape_->cmul(u, tape_->sub(s.h, c)));
      return {h, -1};
    }
    const int i = tape_->sigmoid(gate("i", x, s.h));
    const int f = tape_->sigmoid(gate("f", x, s.h));
    const int o = tape_->sigmoid(gate("o", x, s.h));
    const int g = tape_->tanh_(gate("g", x, s.h));
    const int c = tape_->add(tape_->cmul(f, s.c), tape_->cmul(i, g));
    const int h = tape_->cmul(o, tape_->tanh_(c));
    return {h, c};
  }

  LatentNodes encode(const std::vector<int>& tokens) {
    if (tokens.empty()) throw std::invalid_argument("encode: empty sequence");
    RecState s = zero_state();
    for (int tok : tokens) s = cell_step("enc.", tape_->embedding_col(p("emb"), tok), s);
    const int mu = tape_->add(tape_->matmul(p("enc.mu.W"), s.h), p("enc.mu.b"));
    const int lv = tape_->add(tape_->matmul(p("enc.lv.W"), s.h), p("enc.lv.b"));
    return {mu, lv};
  }

  int reparameterize(const LatentNodes& latent, const Mat<S>& noise) {
    return tape_->reparam(latent.mu, latent.logvar, noise);
  }

  int attribute_leaf(const AttributeVector& a) {
    if (static_cast<int>(a.onehot.size()) != state_->config.attr_dim())
      throw std::invalid_argument("attribute vector does not match model attr_dim");
    Mat<S> m(a.onehot.size(), 1);
    for (std::size_t i = 0; i < a.onehot.size(); ++i) m(static_cast<int>(i), 0) = S(a.onehot[i]);
    return tape_->leaf(m);
  }

  // Decoder start state: Linear(z concat a). The LSTM cell state starts at
  // zero; only h comes from the projection.
  int initial_state(int z, const AttributeVector& a) {
    const int za = tape_->vcat(z, attribute_leaf(a));
    return tape_->add(tape_->matmul(p("init.W"), za), p("init.b"));
  }

  // One logits column per input position; position t predicts target t+1.
  // Inputs must already carry word dropout.
  std::vector<int> decode_teacher_logits(int z, const AttributeVector& a,
                                         const std::vector<int>& inputs) {
    if (inputs.empty()) throw std::invalid_argument("decode: empty input sequence");
    RecState s{initial_state(z, a), -1};
    if (state_->config.cell == CellType::Lstm)
      s.c = tape_->leaf(Mat<S>::Zero(state_->config.hidden, 1));
    std::vector<int> logits;
    logits.reserve(inputs.size());
    for (int tok : inputs) {
      s = cell_step("dec.", tape_->embedding_col(p("emb"), tok), s);
      logits.push_back(tape_->add(tape_->matmul(p("dec.out.W"), s.h), p("dec.out.b")));
    }
    return logits;
  }

  enum class BnStats { Batch, Running };

  // Head logits for a batch of latent codes: out[b][k] is the logits column
  // of head k for example b. Batch mode normalizes with the batch moments
  // (and reports them); Running mode uses the stored buffers as constants.
  std::vector<std::vector<int>> discriminator_logits(const std::vector<int>& z_cols,
                                                     BnStats stats,
                                                     DiscBatchStats<S>* batch_stats = nullptr) {
    if (z_cols.empty()) throw std::invalid_argument("discriminator: empty batch");
    const int x = tape_->stack_cols(z_cols);
    int trunk;
    if (state_->config.disc_arch == DiscArch::FeedForward) {
      const int l1 = tape_->add_bcast_col(tape_->matmul(p("disc.fc1.W"), x), p("disc.fc1.b"));
      const int n1 = batch_norm("disc.bn1", l1, stats, batch_stats, /*first=*/true);
      const int y1 = tape_->tanh_(n1);
      const int l2 = tape_->add_bcast_col(tape_->matmul(p("disc.fc2.W"), y1), p("disc.fc2.b"));
      const int n2 = batch_norm("disc.bn2", l2, stats, batch_stats, /*first=*/false);
      trunk = tape_->tanh_(n2);
    } else {
      RecState s = disc_zero_state(static_cast<int>(z_cols.size()));
      auto gate = [&](const std::string& g) {
        return tape_->add_bcast_col(tape_->add(tape_->matmul(p("disc.rnn.Wx" + g), x),
                                               tape_->matmul(p("disc.rnn.Wh" + g), s.h)),
                                    p("disc.rnn.b" + g));
      };
      const int i = tape_->sigmoid(gate("i"));
      const int f = tape_->sigmoid(gate("f"));
      const int o = tape_->sigmoid(gate("o"));
      const int g = tape_->tanh_(gate("g"));
      const int c = tape_->add(tape_->cmul(f, s.c), tape_->cmul(i, g));
      trunk = tape_->cmul(o, tape_->tanh_(c));
    }
    std::vector<int> head_mats;
    for (std::size_t k = 0; k < state_->config.head_sizes.size(); ++k) {
      const std::string h = "disc.head" + std::to_string(k);
      head_mats.push_back(
          tape_->add_bcast_col(tape_->matmul(p(h + ".W"), trunk), p(h + ".b")));
    }
    std::vector<std::vector<int>> out(z_cols.size());
    for (std::size_t b = 0; b < z_cols.size(); ++b)
      for (std::size_t k = 0; k < head_mats.size(); ++k)
        out[b].push_back(tape_->col(head_mats[k], static_cast<int>(b)));
    return out;
  }

 private:
  RecState disc_zero_state(int cols) {
    return {tape_->leaf(Mat<S>::Zero(state_->config.disc_hidden, cols)),
            tape_->leaf(Mat<S>::Zero(state_->config.disc_hidden, cols))};
  }

  int batch_norm(const std::string& name, int x, BnStats stats,
                 DiscBatchStats<S>* batch_stats, bool first) {
    const double eps = state_->config.bn_eps;
    int xn;
    if (stats == BnStats::Batch) {
      const int mean = tape_->mean_cols(x);
      const int centered = tape_->sub_bcast_col(x, mean);
      const int var = tape_->mean_cols(tape_->square(centered));
      const int inv = tape_->rsqrt_eps(var, eps);
      xn = tape_->mul_bcast_col(centered, inv);
      if (batch_stats) {
        batch_stats->valid = true;
        (first ? batch_stats->mean1 : batch_stats->mean2) = tape_->value(mean);
        (first ? batch_stats->var1 : batch_stats->var2) = tape_->value(var);
      }
    } else {
      const int mean = tape_->leaf(state_->buffer(name + ".mean"));
      Mat<S> inv_v =
          (state_->buffer(name + ".var").array() + S(eps)).rsqrt().matrix();
      const int inv = tape_->leaf(inv_v);
      xn = tape_->mul_bcast_col(tape_->sub_bcast_col(x, mean), inv);
    }
    return tape_->add_bcast_col(tape_->mul_bcast_col(xn, p(name + ".gamma")),
                                p(name + ".beta"));
  }

  Tape<S>* tape_;
  const ModelState<S>* state_;
  std::map<std::string, int> bound_;
};

// Value-only wrappers on an untracked tape, for generation and evaluation.

template <class S>
void encode_values(const ModelState<S>& state, const std::vector<int>& tokens, Vec<S>* mu,
                   Vec<S>* logvar) {
  Tape<S> tape(false);
  TapedModel<S> m(tape, state);
  const auto latent = m.encode(tokens);
  if (mu) *mu = tape.value(latent.mu).col(0);
  if (logvar) *logvar = tape.value(latent.logvar).col(0);
}

template <class S>
Vec<S> reparameterize_value(const Vec<S>& mu, const Vec<S>& logvar, const Vec<S>& noise) {
  if (mu.size() != logvar.size() || mu.size() != noise.size())
    throw std::invalid_argument("reparameterize: dimension mismatch");
  return mu.array() + (logvar.array() * S(0.5)).exp() * noise.array();
}

template <class S>
Vec<S> softmax_vec(const Vec<S>& logits) {
  const S m = logits.maxCoeff();
  Vec<S> p = (logits.array() - m).exp();
  return p / p.sum();
}

struct DecodeMode {
  bool greedy = true;
  double temperature = 1.0;

  static DecodeMode greedy_mode() { return {true, 1.0}; }
  static DecodeMode sample(double temperature) { return {false, temperature}; }
};

// Autoregressive decoding from SOS. Returns the framed sequence (SOS first,
// EOS included when produced); at most max_len content tokens. Greedy mode
// never touches the rng.
template <class S>
std::vector<int> decode_free(const ModelState<S>& state, const Vec<S>& z,
                             const AttributeVector& a, DecodeMode mode, int max_len, Rng& rng) {
  if (z.size() != state.config.d_z)
    throw std::invalid_argument("decode_free: latent dimension mismatch");
  if (mode.temperature <= 0) throw std::invalid_argument("decode_free: temperature must be > 0");
  Tape<S> tape(false);
  TapedModel<S> m(tape, state);
  Mat<S> zm(z.size(), 1);
  zm.col(0) = z;
  typename TapedModel<S>::RecState s{m.initial_state(tape.leaf(zm), a), -1};
  if (state.config.cell == CellType::Lstm)
    s.c = tape.leaf(Mat<S>::Zero(state.config.hidden, 1));

  std::vector<int> out = {kSosId};
  int x = kSosId;
  for (int step = 0; step < max_len; ++step) {
    s = m.cell_step("dec.", tape.embedding_col(m.p("emb"), x), s);
    const int logits =
        tape.add(tape.matmul(m.p("dec.out.W"), s.h), m.p("dec.out.b"));
    const Vec<S> l = tape.value(logits).col(0);
    int next;
    if (mode.greedy) {
      Eigen::Index arg;
      l.maxCoeff(&arg);
      next = static_cast<int>(arg);
    } else {
      const Vec<S> probs = softmax_vec<S>((l / S(mode.temperature)).eval());
      const double u = rng.uniform();
      double cum = 0;
      next = static_cast<int>(probs.size()) - 1;
      for (Eigen::Index v = 0; v < probs.size(); ++v) {
        cum += static_cast<double>(probs[v]);
        if (u < cum) {
          next = static_cast<int>(v);
          break;
        }
      }
    }
    out.push_back(next);
    if (next == kEosId) break;
    x = next;
  }
  return out;
}

// Eval-mode discriminator on one latent code, using running statistics.
template <class S>
DiscriminatorOutput<S> discriminate(const ModelState<S>& state, const Vec<S>& z) {
  if (z.size() != state.config.d_z)
    throw std::invalid_argument("discriminate: latent dimension mismatch");
  Tape<S> tape(false);
  TapedModel<S> m(tape, state);
  Mat<S> zm(z.size(), 1);
  zm.col(0) = z;
  const auto logits =
      m.discriminator_logits({tape.leaf(zm)}, TapedModel<S>::BnStats::Running);
  DiscriminatorOutput<S> out;
  for (int node : logits[0]) out.probs.push_back(softmax_vec<S>(tape.value(node).col(0)));
  return out;
}

}  // namespace cga
