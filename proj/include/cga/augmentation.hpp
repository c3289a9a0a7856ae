#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cga/attributes.hpp"
#include "cga/autodiff.hpp"
#include "cga/corpus.hpp"
#include "cga/generation.hpp"
#include "cga/model.hpp"
#include "cga/rng.hpp"
#include "cga/training.hpp"

namespace cga {

// ---------------------------------------------------------------------------
// Easy data augmentation: four label-preserving token edits.

using SynonymTable = std::map<std::string, std::vector<std::string>>;

enum class EdaOp { SynonymReplace, RandomInsert, RandomSwap, RandomDelete };

namespace detail {

// Positions of words that have at least one synonym.
inline std::vector<std::size_t> synonym_candidates(const std::vector<std::string>& tokens,
                                                   const SynonymTable& table) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto it = table.find(tokens[i]);
    if (it != table.end() && !it->second.empty()) out.push_back(i);
  }
  return out;
}

inline std::vector<std::string> eda_swap(std::vector<std::string> tokens, int n_words,
                                         Rng& rng) {
  const int len = static_cast<int>(tokens.size());
  if (len < 2) return tokens;
  for (int r = 0; r < n_words; ++r) {
    // Two distinct positions; a self-swap would silently waste the edit.
    const int i = rng.uniform_int(0, len - 1);
    const int j = (i + 1 + rng.uniform_int(0, len - 2)) % len;
    std::swap(tokens[static_cast<std::size_t>(i)], tokens[static_cast<std::size_t>(j)]);
  }
  return tokens;
}

}  // namespace detail

// One EDA edit with the conventional per-op strength: `alpha * length`
// words touched (at least one), except deletion which drops each word with
// probability alpha. Replacement and insertion need synonyms; when the
// sentence offers none they fall back to a swap.
inline std::vector<std::string> eda_apply(const std::vector<std::string>& tokens, EdaOp op,
                                          double alpha, Rng& rng,
                                          const SynonymTable& table) {
  if (tokens.empty()) throw std::invalid_argument("eda: empty sentence");
  if (alpha < 0 || alpha > 1) throw std::invalid_argument("eda: alpha must be in [0,1]");
  const int len = static_cast<int>(tokens.size());
  const int n_words = std::max(1, static_cast<int>(std::lround(alpha * len)));

  switch (op) {
    case EdaOp::SynonymReplace: {
      const auto candidates = detail::synonym_candidates(tokens, table);
      if (candidates.empty()) return detail::eda_swap(tokens, n_words, rng);
      std::vector<std::string> out = tokens;
      for (int r = 0; r < n_words; ++r) {
        const std::size_t pos =
            candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(candidates.size()) - 1))];
        const auto& alternatives = table.at(tokens[pos]);
        out[pos] = alternatives[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(alternatives.size()) - 1))];
      }
      return out;
    }
    case EdaOp::RandomInsert: {
      const auto candidates = detail::synonym_candidates(tokens, table);
      if (candidates.empty()) return detail::eda_swap(tokens, n_words, rng);
      std::vector<std::string> out = tokens;
      for (int r = 0; r < n_words; ++r) {
        const std::size_t pos =
            candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(candidates.size()) - 1))];
        const auto& alternatives = table.at(tokens[pos]);
        const std::string& word = alternatives[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(alternatives.size()) - 1))];
        const int at = rng.uniform_int(0, static_cast<int>(out.size()));
        out.insert(out.begin() + at, word);
      }
      return out;
    }
    case EdaOp::RandomSwap:
      return detail::eda_swap(tokens, n_words, rng);
    case EdaOp::RandomDelete: {
      std::vector<std::string> out;
      for (const auto& t : tokens)
        if (!rng.bernoulli(alpha)) out.push_back(t);
      // The conventional guard: never delete a sentence entirely.
      if (out.empty())
        out.push_back(tokens[static_cast<std::size_t>(rng.uniform_int(0, len - 1))]);
      return out;
    }
  }
  throw std::logic_error("eda: unhandled op");
}

// `n_ops` edits in sequence, each op drawn uniformly.
inline std::vector<std::string> eda_augment(const std::vector<std::string>& tokens,
                                            double alpha, int n_ops, Rng& rng,
                                            const SynonymTable& table) {
  if (n_ops < 1) throw std::invalid_argument("eda: n_ops must be >= 1");
  std::vector<std::string> out = tokens;
  for (int r = 0; r < n_ops; ++r) {
    const auto op = static_cast<EdaOp>(rng.uniform_int(0, 3));
    out = eda_apply(out, op, alpha, rng, table);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Downstream sentiment classifier: bidirectional LSTM over content tokens,
// dropout on the concatenated final states, linear head. Early stopping on
// validation loss.

struct DownstreamConfig {
  int emb_dim = 300;
  int hidden = 256;
  double dropout = 0.8;
  int patience = 8;
  int max_epochs = 100;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;

  void validate() const {
    if (emb_dim < 1 || hidden < 1)
      throw std::invalid_argument("downstream: dims must be >= 1");
    if (dropout < 0 || dropout >= 1)
      throw std::invalid_argument("downstream: dropout must be in [0,1)");
    if (patience < 1) throw std::invalid_argument("downstream: patience must be >= 1");
    if (max_epochs < 1 || batch_size < 1)
      throw std::invalid_argument("downstream: bad loop sizes");
    if (lr <= 0) throw std::invalid_argument("downstream: lr must be positive");
  }
};

struct DownstreamResult {
  double test_accuracy = 0;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  int epochs_ran = 0;
  bool retried = false;
};

namespace detail {

inline const char* kLstmGates[] = {"i", "f", "o", "g"};

inline std::map<std::string, Mat<float>> init_downstream_params(const DownstreamConfig& cfg,
                                                                int vocab, int classes) {
  Rng rng = Rng::substream(cfg.seed, "downstream-init");
  auto uniform_mat = [&](int rows, int cols) {
    Mat<float> m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = static_cast<float>(rng.uniform(-0.1, 0.1));
    return m;
  };
  std::map<std::string, Mat<float>> params;
  params.emplace("ds.emb", uniform_mat(cfg.emb_dim, vocab));
  for (const std::string dir : {"fwd", "bwd"})
    for (const char* gate : kLstmGates) {
      params.emplace("ds." + dir + ".Wx" + gate, uniform_mat(cfg.hidden, cfg.emb_dim));
      params.emplace("ds." + dir + ".Wh" + gate, uniform_mat(cfg.hidden, cfg.hidden));
      params.emplace("ds." + dir + ".b" + gate, uniform_mat(cfg.hidden, 1));
    }
  params.emplace("ds.fc.W", uniform_mat(classes, 2 * cfg.hidden));
  params.emplace("ds.fc.b", uniform_mat(classes, 1));
  return params;
}

struct TapedBiLstm {
  Tape<float>* tape;
  const std::map<std::string, Mat<float>>* params;
  int hidden;
  std::map<std::string, int> leaves;

  TapedBiLstm(Tape<float>& t, const std::map<std::string, Mat<float>>& p, int h)
      : tape(&t), params(&p), hidden(h) {}

  int p(const std::string& name) {
    auto it = leaves.find(name);
    if (it != leaves.end()) return it->second;
    const int id = tape->leaf(params->at(name));
    leaves.emplace(name, id);
    return id;
  }

  // Final hidden state of one direction over the given embedding columns.
  int run_direction(const std::string& dir, const std::vector<int>& emb_cols) {
    const Mat<float> zero = Mat<float>::Zero(hidden, 1);
    int h = tape->leaf(zero);
    int c = tape->leaf(zero);
    for (int x : emb_cols) {
      auto gate = [&](const char* g) {
        return tape->add(tape->add(tape->matmul(p("ds." + dir + ".Wx" + g), x),
                                   tape->matmul(p("ds." + dir + ".Wh" + g), h)),
                         p("ds." + dir + ".b" + g));
      };
      const int i = tape->sigmoid(gate("i"));
      const int f = tape->sigmoid(gate("f"));
      const int o = tape->sigmoid(gate("o"));
      const int g = tape->tanh_(gate("g"));
      c = tape->add(tape->cmul(f, c), tape->cmul(i, g));
      h = tape->cmul(o, tape->tanh_(c));
    }
    return h;
  }

  // Class logits; `dropout_mask` (2*hidden x 1, inverse-scaled) turns on
  // training mode.
  int forward(const std::vector<int>& ids, const Mat<float>* dropout_mask) {
    std::vector<int> emb_cols;
    emb_cols.reserve(ids.size());
    for (int id : ids) emb_cols.push_back(tape->embedding_col(p("ds.emb"), id));
    std::vector<int> reversed(emb_cols.rbegin(), emb_cols.rend());

    int features = tape->vcat(run_direction("fwd", emb_cols), run_direction("bwd", reversed));
    if (dropout_mask) features = tape->cmul(features, tape->leaf(*dropout_mask));
    return tape->add(tape->matmul(p("ds.fc.W"), features), p("ds.fc.b"));
  }
};

inline std::vector<int> downstream_prepare(const std::vector<int>& tokens) {
  std::vector<int> ids;
  for (int id : tokens) {
    if (id == kSosId || id == kPadId) continue;
    if (id == kEosId) break;
    ids.push_back(id);
  }
  if (ids.empty()) ids.push_back(kPadId);
  return ids;
}

// One full training attempt. Returns nullopt on a non-finite loss so the
// caller can retry with a smaller learning rate.
inline std::optional<DownstreamResult> downstream_attempt(
    const LabeledCorpus& train, const LabeledCorpus& valid, const LabeledCorpus& test,
    int attr_index, int vocab, int classes, const DownstreamConfig& cfg, double lr) {
  auto params = init_downstream_params(cfg, vocab, classes);
  std::vector<std::string> names;
  for (const auto& [name, p] : params) names.push_back(name);
  auto opt = AdamState::create(params, names, AdamConfig{lr, 0.9, 0.999, 1e-8});

  auto label_of = [attr_index](const LabeledExample& ex) {
    return ex.attributes.labels[static_cast<std::size_t>(attr_index)];
  };
  auto mean_valid_loss = [&]() {
    double acc = 0;
    for (const auto& ex : valid.examples) {
      Tape<float> tape(false);
      TapedBiLstm net(tape, params, cfg.hidden);
      const int logits = net.forward(downstream_prepare(ex.tokens), nullptr);
      acc += tape.value(tape.softmax_xent(logits, label_of(ex)))(0, 0);
    }
    return acc / static_cast<double>(valid.examples.size());
  };

  Rng rng = Rng::substream(cfg.seed, "downstream-train");
  std::vector<int> order(train.examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  DownstreamResult result;
  std::map<std::string, Mat<float>> best_params = params;
  int stale = 0;
  const float keep_scale = static_cast<float>(1.0 / (1.0 - cfg.dropout));
  const int feat_dim = 2 * cfg.hidden;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Tape<float> tape;
      TapedBiLstm net(tape, params, cfg.hidden);
      int acc = -1;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train.examples[static_cast<std::size_t>(order[i])];
        Mat<float> mask(feat_dim, 1);
        for (int d = 0; d < feat_dim; ++d)
          mask(d, 0) = rng.bernoulli(cfg.dropout) ? 0.0f : keep_scale;
        const int logits = net.forward(downstream_prepare(ex.tokens), &mask);
        const int loss = tape.softmax_xent(logits, label_of(ex));
        acc = acc < 0 ? loss : tape.add(acc, loss);
      }
      const int root = tape.scale(acc, 1.0 / static_cast<double>(end - start));
      if (!std::isfinite(tape.value(root)(0, 0))) return std::nullopt;
      tape.backward(root);

      std::map<std::string, Mat<float>> grads;
      for (const auto& [name, node] : net.leaves)
        if (params.count(name)) grads.emplace(name, tape.grad(node));
      for (const auto& name : names)
        if (!grads.count(name))
          grads.emplace(name,
                        Mat<float>::Zero(params.at(name).rows(), params.at(name).cols()));
      clip_gradient_norm(grads, 5.0);
      opt.apply(params, grads);
    }

    result.epochs_ran = epoch + 1;
    const double vloss = mean_valid_loss();
    if (!std::isfinite(vloss)) return std::nullopt;
    if (vloss < result.best_valid_loss) {
      result.best_valid_loss = vloss;
      best_params = params;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }

  params = std::move(best_params);
  long correct = 0;
  for (const auto& ex : test.examples) {
    Tape<float> tape(false);
    TapedBiLstm net(tape, params, cfg.hidden);
    const Vec<float> logits =
        tape.value(net.forward(downstream_prepare(ex.tokens), nullptr)).col(0);
    Eigen::Index arg = 0;
    logits.maxCoeff(&arg);
    if (static_cast<int>(arg) == label_of(ex)) ++correct;
  }
  result.test_accuracy = static_cast<double>(correct) / test.examples.size();
  return result;
}

}  // namespace detail

// Trains on `train`, stops early on `valid`, reports accuracy on `test`. A
// non-finite loss triggers one retry at half the learning rate; a second
// failure is an error.
inline DownstreamResult train_downstream(const LabeledCorpus& train,
                                         const LabeledCorpus& valid,
                                         const LabeledCorpus& test, int attr_index,
                                         int vocab_size, const DownstreamConfig& cfg) {
  cfg.validate();
  if (train.examples.empty() || valid.examples.empty() || test.examples.empty())
    throw std::invalid_argument("downstream: empty split");
  if (attr_index < 0 || attr_index >= train.schema.size())
    throw std::invalid_argument("downstream: attribute index out of range");
  const int classes = static_cast<int>(
      train.schema.attributes[static_cast<std::size_t>(attr_index)].values.size());

  auto result =
      detail::downstream_attempt(train, valid, test, attr_index, vocab_size, classes, cfg,
                                 cfg.lr);
  if (!result) {
    result = detail::downstream_attempt(train, valid, test, attr_index, vocab_size, classes,
                                        cfg, cfg.lr / 2);
    if (!result)
      throw std::runtime_error("downstream: training diverged, even after the half-rate retry");
    result->retried = true;
  }
  return *result;
}

// ---------------------------------------------------------------------------
// The augmentation experiment grid.

struct AugmentationGrid {
  std::vector<long> base_sizes;
  std::vector<int> percentages = {10, 20, 30, 50, 70, 100, 120, 150, 200};
  std::vector<std::string> sources = {"real", "eda", "cga"};
  int seeds = 5;

  void validate() const {
    if (base_sizes.empty()) throw std::invalid_argument("grid: base_sizes empty");
    for (long s : base_sizes)
      if (s < 2) throw std::invalid_argument("grid: base sizes must be >= 2");
    if (percentages.empty()) throw std::invalid_argument("grid: percentages empty");
    for (int p : percentages)
      if (p < 0) throw std::invalid_argument("grid: percentages must be >= 0");
    if (sources.empty()) throw std::invalid_argument("grid: sources empty");
    for (const auto& s : sources)
      if (s != "real" && s != "eda" && s != "cga")
        throw std::invalid_argument("grid: unknown source '" + s + "'");
    if (seeds < 1) throw std::invalid_argument("grid: seeds must be >= 1");
  }
};

struct AugmentationCell {
  std::string source;
  long base_size = 0;
  int percent = 0;
  int seed = 0;
  double accuracy = 0;
  bool available = true;  // false: not enough real data for this percentage
};

struct AugmentationResults {
  std::vector<AugmentationCell> cells;
};

struct AugmentationInputs {
  const LabeledCorpus* pool = nullptr;  // real labeled sentences
  const LabeledCorpus* test = nullptr;  // fixed held-out evaluation set
  const ModelState<float>* model = nullptr;
  const Vocabulary* vocab = nullptr;
  const SynonymTable* synonyms = nullptr;
  int attr_index = 0;
  double eda_alpha = 0.1;
  int eda_ops = 1;
};

namespace detail {

inline std::string cell_key(const std::string& prefix, long size, int pct, int seed) {
  return prefix + ":" + std::to_string(size) + ":" + std::to_string(pct) + ":" +
         std::to_string(seed);
}

}  // namespace detail

// Runs every (source, base size, percentage, seed) cell. Augmented sentences
// are appended to a fixed 90% training slice of the base draw; the remaining
// 10% is the early-stopping set, shared by all sources of the same (size,
// seed) so accuracy differences come from the augmentation alone. The
// percentage-0 cells of different sources are bit-identical by construction.
inline AugmentationResults run_augmentation_grid(const AugmentationGrid& grid,
                                                 const AugmentationInputs& in,
                                                 const DownstreamConfig& ds_cfg,
                                                 std::uint64_t master_seed = 1) {
  grid.validate();
  ds_cfg.validate();
  if (!in.pool || !in.test || !in.model || !in.vocab || !in.synonyms)
    throw std::invalid_argument("grid: missing inputs");
  if (!(in.model->schema == in.pool->schema))
    throw std::invalid_argument("grid: generator schema differs from corpus schema");
  if (in.model->config.vocab != in.vocab->size())
    throw std::invalid_argument("grid: generator vocabulary size differs from corpus");
  const long pool_size = static_cast<long>(in.pool->examples.size());

  AugmentationResults results;
  for (long size : grid.base_sizes) {
    if (size > pool_size)
      throw std::invalid_argument("grid: base size " + std::to_string(size) +
                                  " exceeds the real pool (" + std::to_string(pool_size) +
                                  ")");
    for (int seed = 0; seed < grid.seeds; ++seed) {
      // Base draw and its fixed validation slice, shared across sources and
      // percentages.
      Rng split_rng =
          Rng::substream(master_seed, detail::cell_key("base", size, 0, seed));
      const auto perm = split_rng.permutation(static_cast<int>(pool_size));
      const long n_valid = std::max<long>(1, std::lround(0.1 * static_cast<double>(size)));

      LabeledCorpus valid_set, train_base;
      valid_set.schema = train_base.schema = in.pool->schema;
      for (long i = 0; i < n_valid; ++i)
        valid_set.examples.push_back(in.pool->examples[static_cast<std::size_t>(
            perm[static_cast<std::size_t>(i)])]);
      for (long i = n_valid; i < size; ++i)
        train_base.examples.push_back(in.pool->examples[static_cast<std::size_t>(
            perm[static_cast<std::size_t>(i)])]);

      for (int pct : grid.percentages) {
        const long n_aug = std::lround(static_cast<double>(size) * pct / 100.0);
        // Same stopping signal and same downstream seed across sources.
        DownstreamConfig cell_cfg = ds_cfg;
        cell_cfg.seed = fnv1a64(detail::cell_key("downstream", size, pct, seed), master_seed);

        for (const auto& source : grid.sources) {
          AugmentationCell cell;
          cell.source = source;
          cell.base_size = size;
          cell.percent = pct;
          cell.seed = seed;

          LabeledCorpus train = train_base;
          if (n_aug > 0 && source == "real") {
            if (size + n_aug > pool_size) {
              cell.available = false;
              results.cells.push_back(std::move(cell));
              continue;
            }
            for (long i = size; i < size + n_aug; ++i)
              train.examples.push_back(in.pool->examples[static_cast<std::size_t>(
                  perm[static_cast<std::size_t>(i)])]);
          } else if (n_aug > 0 && source == "eda") {
            Rng aug_rng = Rng::substream(
                master_seed, detail::cell_key("eda", size, pct, seed));
            for (long i = 0; i < n_aug; ++i) {
              const auto& base_ex = train_base.examples[static_cast<std::size_t>(
                  aug_rng.uniform_int(0, static_cast<int>(train_base.examples.size()) - 1))];
              const auto words = decode_sentence(base_ex.tokens, *in.vocab);
              const auto mutated =
                  eda_augment(words, in.eda_alpha, in.eda_ops, aug_rng, *in.synonyms);
              LabeledExample ex;
              ex.tokens = encode_sentence(mutated, *in.vocab);
              ex.attributes = base_ex.attributes;
              ex.raw_text = join_tokens(mutated);
              train.examples.push_back(std::move(ex));
            }
          } else if (n_aug > 0 && source == "cga") {
            const long combos = in.model->schema.combination_count();
            GenerationRequest req;
            req.counts.assign(static_cast<std::size_t>(combos), n_aug / combos);
            for (long c = 0; c < n_aug % combos; ++c)
              ++req.counts[static_cast<std::size_t>(c)];
            req.mode = DecodeMode::sample(1.0);
            req.max_len = in.model->config.max_len;
            req.seed = fnv1a64(detail::cell_key("cga", size, pct, seed), master_seed);
            auto generated = generate_dataset(*in.model, *in.vocab, req);
            for (auto& ex : generated.corpus.examples)
              train.examples.push_back(std::move(ex));
          }

          cell.accuracy = train_downstream(train, valid_set, *in.test, in.attr_index,
                                           in.vocab->size(), cell_cfg)
                              .test_accuracy;
          results.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return results;
}

// ---------------------------------------------------------------------------
// Aggregation and report formatting.

struct AugmentationSummaryRow {
  std::string source;
  long base_size = 0;
  int percent = 0;
  double mean = 0;
  double stddev = 0;  // population std over seeds
  int n_seeds = 0;
  bool available = true;
};

inline std::vector<AugmentationSummaryRow> aggregate_results(
    const AugmentationResults& results) {
  // Keyed by (size, source, percent); cell order within a key follows seeds.
  std::map<std::tuple<long, std::string, int>, std::vector<const AugmentationCell*>> groups;
  for (const auto& c : results.cells)
    groups[{c.base_size, c.source, c.percent}].push_back(&c);

  std::vector<AugmentationSummaryRow> rows;
  for (const auto& [key, cells] : groups) {
    AugmentationSummaryRow row;
    row.base_size = std::get<0>(key);
    row.source = std::get<1>(key);
    row.percent = std::get<2>(key);
    row.n_seeds = static_cast<int>(cells.size());
    for (const auto* c : cells) row.available = row.available && c->available;
    if (row.available) {
      double mean = 0;
      for (const auto* c : cells) mean += c->accuracy;
      mean /= cells.size();
      double var = 0;
      for (const auto* c : cells) var += (c->accuracy - mean) * (c->accuracy - mean);
      row.mean = mean;
      row.stddev = std::sqrt(var / cells.size());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string results_csv(const AugmentationResults& results) {
  std::ostringstream os;
  os << "source,base_size,percent,seed,accuracy,available\n";
  for (const auto& c : results.cells) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%ld,%d,%d,%.6f,%d\n", c.source.c_str(), c.base_size,
                  c.percent, c.seed, c.accuracy, c.available ? 1 : 0);
    os << buf;
  }
  return os.str();
}

// Inverse of results_csv; the header line is required.
inline AugmentationResults parse_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "source,base_size,percent,seed,accuracy,available")
    throw std::runtime_error("results csv: missing or wrong header");
  AugmentationResults results;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 6)
      throw std::runtime_error("results csv: line " + std::to_string(lineno) +
                               " has " + std::to_string(fields.size()) + " fields, want 6");
    try {
      AugmentationCell cell;
      cell.source = fields[0];
      cell.base_size = std::stol(fields[1]);
      cell.percent = std::stoi(fields[2]);
      cell.seed = std::stoi(fields[3]);
      cell.accuracy = std::stod(fields[4]);
      cell.available = std::stoi(fields[5]) != 0;
      results.cells.push_back(std::move(cell));
    } catch (const std::exception&) {
      throw std::runtime_error("results csv: line " + std::to_string(lineno) +
                               " is malformed");
    }
  }
  return results;
}

inline std::string summary_csv(const std::vector<AugmentationSummaryRow>& rows) {
  std::ostringstream os;
  os << "source,base_size,percent,mean,std,seeds,available\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%ld,%d,%.6f,%.6f,%d,%d\n", r.source.c_str(),
                  r.base_size, r.percent, r.mean, r.stddev, r.n_seeds, r.available ? 1 : 0);
    os << buf;
  }
  return os.str();
}

// Best percentage per (base size, source) by mean accuracy; a tie picks the
// lower percentage. Unavailable rows never win.
inline std::string best_rows_markdown(const std::vector<AugmentationSummaryRow>& rows) {
  std::map<std::pair<long, std::string>, const AugmentationSummaryRow*> best;
  for (const auto& r : rows) {
    if (!r.available) continue;
    auto& slot = best[{r.base_size, r.source}];
    if (!slot || r.mean > slot->mean || (r.mean == slot->mean && r.percent < slot->percent))
      slot = &r;
  }

  std::ostringstream os;
  os << "| source | base size | best % | accuracy (std) |\n";
  os << "|---|---|---|---|\n";
  for (const auto& [key, r] : best) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "| %s | %ld | %d | %.2f (%.2f) |\n", r->source.c_str(),
                  r->base_size, r->percent, r->mean, r->stddev);
    os << buf;
  }
  return os.str();
}

}  // namespace cga
