#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cga/attributes.hpp"
#include "cga/autodiff.hpp"
#include "cga/corpus.hpp"
#include "cga/labeling.hpp"
#include "cga/model.hpp"
#include "cga/pos.hpp"
#include "cga/rng.hpp"
#include "cga/training.hpp"

namespace cga {

// ---------------------------------------------------------------------------
// Convolutional sentence classifier, the trained oracle for sentiment-style
// attributes. Parallel convolutions over token windows, max-over-time
// pooling, dropout on the pooled features, then a linear head.

struct TextCnnConfig {
  int emb_dim = 100;
  std::vector<int> windows = {3, 4, 5};
  int filters = 100;
  double dropout = 0.5;
  int epochs = 8;
  int batch_size = 32;
  double lr = 1e-3;
  double valid_frac = 0.1;
  std::uint64_t seed = 1;

  void validate() const {
    if (emb_dim < 1 || filters < 1) throw std::invalid_argument("textcnn: dims must be >= 1");
    if (windows.empty()) throw std::invalid_argument("textcnn: need at least one window size");
    for (int w : windows)
      if (w < 1) throw std::invalid_argument("textcnn: window sizes must be >= 1");
    if (dropout < 0 || dropout >= 1)
      throw std::invalid_argument("textcnn: dropout must be in [0,1)");
    if (epochs < 1 || batch_size < 1) throw std::invalid_argument("textcnn: bad loop sizes");
    if (lr <= 0) throw std::invalid_argument("textcnn: lr must be positive");
    if (valid_frac <= 0 || valid_frac >= 1)
      throw std::invalid_argument("textcnn: valid_frac must be in (0,1)");
  }

  int feature_dim() const { return filters * static_cast<int>(windows.size()); }
};

struct TextCnn {
  TextCnnConfig cfg;
  int vocab = 0;
  int classes = 0;
  std::map<std::string, Mat<float>> params;
  double held_out_accuracy = 0;

  // Content ids, padded so every window size fits at least once.
  std::vector<int> prepare(const std::vector<int>& tokens) const {
    std::vector<int> ids;
    for (int id : tokens) {
      if (id == kSosId || id == kPadId) continue;
      if (id == kEosId) break;
      ids.push_back(id);
    }
    const int need = *std::max_element(cfg.windows.begin(), cfg.windows.end());
    while (static_cast<int>(ids.size()) < need) ids.push_back(kPadId);
    return ids;
  }

  Vec<float> logits(const std::vector<int>& tokens) const;
  int predict(const std::vector<int>& tokens) const {
    const Vec<float> l = logits(tokens);
    Eigen::Index arg = 0;
    l.maxCoeff(&arg);
    return static_cast<int>(arg);
  }
};

namespace detail {

// Binds classifier parameters to tape leaves once, so a batch shares leaves
// and gradients land on them directly.
struct TapedTextCnn {
  Tape<float>* tape;
  const TextCnn* cnn;
  std::map<std::string, int> leaves;

  TapedTextCnn(Tape<float>& t, const TextCnn& c) : tape(&t), cnn(&c) {}

  int p(const std::string& name) {
    auto it = leaves.find(name);
    if (it != leaves.end()) return it->second;
    const int id = tape->leaf(cnn->params.at(name));
    leaves.emplace(name, id);
    return id;
  }

  // Class-logit column for prepared ids. `dropout_mask` (pooled-feature
  // sized, already inverse-scaled) enables training mode; evaluation passes
  // nullptr.
  int forward(const std::vector<int>& ids, const Mat<float>* dropout_mask) {
    const int emb = p("cnn.emb");
    std::vector<int> emb_cols;
    emb_cols.reserve(ids.size());
    for (int id : ids) emb_cols.push_back(tape->embedding_col(emb, id));

    int features = -1;
    for (int w : cnn->cfg.windows) {
      const std::string tag = std::to_string(w);
      std::vector<int> window_cols;
      for (std::size_t j = 0; j + static_cast<std::size_t>(w) <= ids.size(); ++j) {
        int col = emb_cols[j];
        for (int r = 1; r < w; ++r) col = tape->vcat(col, emb_cols[j + r]);
        window_cols.push_back(col);
      }
      const int conv = tape->relu(tape->add_bcast_col(
          tape->matmul(p("cnn.conv" + tag + ".W"), tape->stack_cols(window_cols)),
          p("cnn.conv" + tag + ".b")));
      const int pooled = tape->rowmax_cols(conv);
      features = features < 0 ? pooled : tape->vcat(features, pooled);
    }
    if (dropout_mask) features = tape->cmul(features, tape->leaf(*dropout_mask));
    return tape->add(tape->matmul(p("cnn.fc.W"), features), p("cnn.fc.b"));
  }
};

}  // namespace detail

inline Vec<float> TextCnn::logits(const std::vector<int>& tokens) const {
  Tape<float> tape(false);
  detail::TapedTextCnn taped(tape, *this);
  return tape.value(taped.forward(prepare(tokens), nullptr)).col(0);
}

// Supervised training on one attribute of a labeled corpus. A held-out slice
// is carved off before training and its accuracy recorded on the oracle.
inline TextCnn train_text_cnn(const LabeledCorpus& corpus, int attr_index,
                              int vocab_size, const TextCnnConfig& cfg = {}) {
  cfg.validate();
  if (attr_index < 0 || attr_index >= corpus.schema.size())
    throw std::invalid_argument("textcnn: attribute index out of range");
  if (corpus.examples.size() < 2) throw std::invalid_argument("textcnn: corpus too small");
  if (vocab_size <= kNumSpecials) throw std::invalid_argument("textcnn: bad vocab size");

  const auto& attr = corpus.schema.attributes[static_cast<std::size_t>(attr_index)];
  std::vector<int> labels;
  labels.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples)
    labels.push_back(ex.attributes.labels[static_cast<std::size_t>(attr_index)]);
  if (*std::min_element(labels.begin(), labels.end()) ==
      *std::max_element(labels.begin(), labels.end()))
    throw std::invalid_argument("textcnn: corpus contains a single class of '" + attr.name +
                                "'");

  TextCnn cnn;
  cnn.cfg = cfg;
  cnn.vocab = vocab_size;
  cnn.classes = static_cast<int>(attr.values.size());

  Rng init_rng = Rng::substream(cfg.seed, "textcnn-init");
  auto uniform_mat = [&](int rows, int cols) {
    Mat<float> m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        m(i, j) = static_cast<float>(init_rng.uniform(-0.1, 0.1));
    return m;
  };
  cnn.params.emplace("cnn.emb", uniform_mat(cfg.emb_dim, vocab_size));
  for (int w : cfg.windows) {
    cnn.params.emplace("cnn.conv" + std::to_string(w) + ".W",
                       uniform_mat(cfg.filters, cfg.emb_dim * w));
    cnn.params.emplace("cnn.conv" + std::to_string(w) + ".b", uniform_mat(cfg.filters, 1));
  }
  cnn.params.emplace("cnn.fc.W", uniform_mat(cnn.classes, cfg.feature_dim()));
  cnn.params.emplace("cnn.fc.b", uniform_mat(cnn.classes, 1));

  std::vector<std::string> names;
  for (const auto& [name, p] : cnn.params) names.push_back(name);
  auto opt = AdamState::create(cnn.params, names, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

  Rng split_rng = Rng::substream(cfg.seed, "textcnn-split");
  const int n = static_cast<int>(corpus.examples.size());
  const auto perm = split_rng.permutation(n);
  const int n_valid = std::max(1, static_cast<int>(std::lround(cfg.valid_frac * n)));
  if (n_valid >= n) throw std::invalid_argument("textcnn: corpus too small to split");
  std::vector<int> train_idx(perm.begin(), perm.end() - n_valid);
  const std::vector<int> valid_idx(perm.end() - n_valid, perm.end());

  Rng rng = Rng::substream(cfg.seed, "textcnn-train");
  const float keep_scale = static_cast<float>(1.0 / (1.0 - cfg.dropout));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Tape<float> tape;
      detail::TapedTextCnn taped(tape, cnn);
      int acc = -1;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = corpus.examples[static_cast<std::size_t>(train_idx[i])];
        Mat<float> mask(cfg.feature_dim(), 1);
        for (int d = 0; d < cfg.feature_dim(); ++d)
          mask(d, 0) = rng.bernoulli(cfg.dropout) ? 0.0f : keep_scale;
        const int logits = taped.forward(cnn.prepare(ex.tokens), &mask);
        const int loss =
            tape.softmax_xent(logits, labels[static_cast<std::size_t>(train_idx[i])]);
        acc = acc < 0 ? loss : tape.add(acc, loss);
      }
      const int root = tape.scale(acc, 1.0 / static_cast<double>(end - start));
      if (!std::isfinite(tape.value(root)(0, 0)))
        throw std::runtime_error("textcnn: non-finite loss");
      tape.backward(root);

      std::map<std::string, Mat<float>> grads;
      for (const auto& [name, node] : taped.leaves)
        if (cnn.params.count(name)) grads.emplace(name, tape.grad(node));
      for (const auto& name : names)
        if (!grads.count(name))
          grads.emplace(name, Mat<float>::Zero(cnn.params.at(name).rows(),
                                               cnn.params.at(name).cols()));
      clip_gradient_norm(grads, 5.0);
      opt.apply(cnn.params, grads);
    }
  }

  long correct = 0;
  for (int idx : valid_idx)
    if (cnn.predict(corpus.examples[static_cast<std::size_t>(idx)].tokens) ==
        labels[static_cast<std::size_t>(idx)])
      ++correct;
  cnn.held_out_accuracy = static_cast<double>(correct) / n_valid;
  return cnn;
}

// ---------------------------------------------------------------------------
// Attribute-matching accuracy of generated text against oracles.

struct OraclePrediction {
  int value = -1;
  bool abstained = true;
};

// One oracle per attribute, operating on content token strings.
using Oracle = std::function<OraclePrediction(const std::vector<std::string>&)>;

struct OracleBundle {
  std::vector<Oracle> oracles;  // schema order
  nlohmann::json metadata = nlohmann::json::object();
};

inline Oracle text_cnn_oracle(TextCnn cnn, Vocabulary vocab) {
  return [cnn = std::move(cnn), vocab = std::move(vocab)](
             const std::vector<std::string>& tokens) {
    OraclePrediction p;
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id(t));
    p.value = cnn.predict(ids);
    p.abstained = false;
    return p;
  };
}

// Rule labeler restricted to one attribute; an undecidable sentence or a
// value outside the schema (a person-number tie, say) becomes an abstention.
inline Oracle rule_oracle(RuleTagger tagger, SentimentLexicon lexicon,
                          AttributeSchema::Attribute attr) {
  AttributeSchema solo;
  solo.attributes = {attr};
  return [tagger = std::move(tagger), lexicon = std::move(lexicon), attr = std::move(attr),
          solo = std::move(solo)](const std::vector<std::string>& tokens) {
    OraclePrediction p;
    const SentenceLabeler labeler(tagger, lexicon);
    const auto labels = labeler.label(tokens, std::nullopt, solo);
    if (!labels) return p;
    const auto it = labels->find(attr.name);
    if (it == labels->end()) return p;
    const auto pos = std::find(attr.values.begin(), attr.values.end(), it->second);
    if (pos == attr.values.end()) return p;
    p.value = static_cast<int>(pos - attr.values.begin());
    p.abstained = false;
    return p;
  };
}

struct AttributeMatchRow {
  std::string attribute;
  double mean = 0;
  double stddev = 0;  // population std over splits
  long evaluated = 0;
  long abstained = 0;
};

// Fraction of sentences whose oracle reading equals the requested label,
// averaged over round-robin splits. Abstentions leave the denominator of
// their attribute and are counted.
inline std::vector<AttributeMatchRow> attribute_matching(const LabeledCorpus& generated,
                                                         const Vocabulary& vocab,
                                                         const std::vector<Oracle>& oracles,
                                                         int n_splits = 5) {
  if (n_splits < 1) throw std::invalid_argument("attribute matching: n_splits must be >= 1");
  if (static_cast<int>(oracles.size()) != generated.schema.size())
    throw std::invalid_argument("attribute matching: need one oracle per attribute");
  if (generated.examples.size() < static_cast<std::size_t>(n_splits))
    throw std::invalid_argument("attribute matching: fewer sentences than splits");

  const int n_attrs = generated.schema.size();
  std::vector<std::vector<long>> match(n_attrs, std::vector<long>(n_splits, 0));
  std::vector<std::vector<long>> total(n_attrs, std::vector<long>(n_splits, 0));
  std::vector<long> abstained(n_attrs, 0);

  for (std::size_t i = 0; i < generated.examples.size(); ++i) {
    const auto& ex = generated.examples[i];
    const int split = static_cast<int>(i % static_cast<std::size_t>(n_splits));
    const auto words = decode_sentence(ex.tokens, vocab);
    for (int k = 0; k < n_attrs; ++k) {
      const auto pred = oracles[static_cast<std::size_t>(k)](words);
      if (pred.abstained) {
        ++abstained[static_cast<std::size_t>(k)];
        continue;
      }
      ++total[static_cast<std::size_t>(k)][split];
      if (pred.value == ex.attributes.labels[static_cast<std::size_t>(k)])
        ++match[static_cast<std::size_t>(k)][split];
    }
  }

  std::vector<AttributeMatchRow> rows;
  for (int k = 0; k < n_attrs; ++k) {
    AttributeMatchRow row;
    row.attribute = generated.schema.attributes[static_cast<std::size_t>(k)].name;
    row.abstained = abstained[static_cast<std::size_t>(k)];
    std::vector<double> accs;
    for (int s = 0; s < n_splits; ++s) {
      const long t = total[static_cast<std::size_t>(k)][s];
      if (t == 0)
        throw std::invalid_argument("attribute matching: split " + std::to_string(s) +
                                    " has no usable sentences for '" + row.attribute + "'");
      row.evaluated += t;
      accs.push_back(static_cast<double>(match[static_cast<std::size_t>(k)][s]) / t);
    }
    double mean = 0;
    for (double a : accs) mean += a;
    mean /= accs.size();
    double var = 0;
    for (double a : accs) var += (a - mean) * (a - mean);
    row.mean = mean;
    row.stddev = std::sqrt(var / accs.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string attribute_match_csv(const std::vector<AttributeMatchRow>& rows) {
  std::ostringstream os;
  os << "attribute,mean,std,evaluated,abstained\n";
  for (const auto& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%ld,%ld\n", r.attribute.c_str(), r.mean,
                  r.stddev, r.evaluated, r.abstained);
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Sentence embeddings and similarity structure.

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  // Unit-norm embedding. Returns false (output untouched) when the sentence
  // carries no usable words.
  virtual bool embed(const std::vector<std::string>& tokens, Vec<float>* out) const = 0;
};

namespace detail {

inline bool normalize_or_reject(Vec<float>* v) {
  const double norm = v->cast<double>().norm();
  if (!(norm > 0)) return false;
  *v /= static_cast<float>(norm);
  return true;
}

}  // namespace detail

// Default self-contained embedder: every word gets a fixed Gaussian vector
// derived from its spelling, sentences are mean-pooled then normalized.
class HashedWordEmbedder : public Embedder {
 public:
  explicit HashedWordEmbedder(int dim = 64, std::uint64_t seed = 17)
      : dim_(dim), seed_(seed) {
    if (dim < 1) throw std::invalid_argument("embedder: dim must be >= 1");
  }

  int dim() const override { return dim_; }

  bool embed(const std::vector<std::string>& tokens, Vec<float>* out) const override {
    if (tokens.empty()) return false;
    Vec<float> acc = Vec<float>::Zero(dim_);
    for (const auto& word : tokens) {
      Rng rng = Rng::substream(seed_, "wordvec:" + word);
      for (int d = 0; d < dim_; ++d) acc[d] += static_cast<float>(rng.normal());
    }
    acc /= static_cast<float>(tokens.size());
    if (!detail::normalize_or_reject(&acc)) return false;
    *out = std::move(acc);
    return true;
  }

 private:
  int dim_;
  std::uint64_t seed_;
};

// Word-vector table in the common text format: one word per line followed by
// its coefficients. Unknown words are skipped; a sentence with no known
// words is rejected through the embed() contract.
class WordTableEmbedder : public Embedder {
 public:
  explicit WordTableEmbedder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read embeddings " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream is(line);
      std::string word;
      is >> word;
      std::vector<float> coeffs;
      double x;
      while (is >> x) coeffs.push_back(static_cast<float>(x));
      if (coeffs.empty())
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": no coefficients");
      if (dim_ == 0) dim_ = static_cast<int>(coeffs.size());
      if (static_cast<int>(coeffs.size()) != dim_)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": inconsistent dimension");
      Vec<float> v(dim_);
      for (int d = 0; d < dim_; ++d) v[d] = coeffs[static_cast<std::size_t>(d)];
      table_.emplace(std::move(word), std::move(v));
    }
    if (table_.empty()) throw std::runtime_error("embeddings file " + path + " is empty");
  }

  int dim() const override { return dim_; }

  bool embed(const std::vector<std::string>& tokens, Vec<float>* out) const override {
    Vec<float> acc = Vec<float>::Zero(dim_);
    long known = 0;
    for (const auto& word : tokens) {
      const auto it = table_.find(word);
      if (it == table_.end()) continue;
      acc += it->second;
      ++known;
    }
    if (known == 0) return false;
    acc /= static_cast<float>(known);
    if (!detail::normalize_or_reject(&acc)) return false;
    *out = std::move(acc);
    return true;
  }

 private:
  int dim_ = 0;
  std::map<std::string, Vec<float>> table_;
};

// Pairwise cosine matrix of unit-norm embedding columns.
inline Mat<float> cosine_similarity_matrix(const Mat<float>& embeddings) {
  return embeddings.transpose() * embeddings;
}

struct SimilarityReport {
  Mat<float> matrix;                    // rows grouped by class
  std::vector<std::string> class_names; // block order
  std::vector<long> class_sizes;        // one per block
  std::vector<long> row_example;        // original corpus index per row
  long excluded = 0;                    // zero-information sentences dropped
};

// Embeds a labeled corpus, groups rows by one attribute's value (stable
// within a class), and returns the full cosine matrix with block bounds.
inline SimilarityReport similarity_report(const LabeledCorpus& corpus,
                                          const Vocabulary& vocab, int attr_index,
                                          const Embedder& embedder) {
  if (attr_index < 0 || attr_index >= corpus.schema.size())
    throw std::invalid_argument("similarity: attribute index out of range");
  const auto& attr = corpus.schema.attributes[static_cast<std::size_t>(attr_index)];

  SimilarityReport report;
  std::vector<std::pair<long, Vec<float>>> kept;  // original index, embedding
  std::vector<int> kept_label;
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    Vec<float> e(embedder.dim());
    if (!embedder.embed(decode_sentence(corpus.examples[i].tokens, vocab), &e)) {
      ++report.excluded;
      continue;
    }
    kept.emplace_back(static_cast<long>(i), std::move(e));
    kept_label.push_back(
        corpus.examples[i].attributes.labels[static_cast<std::size_t>(attr_index)]);
  }

  std::vector<std::size_t> order(kept.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return kept_label[a] < kept_label[b];
  });

  Mat<float> emb(embedder.dim(), static_cast<Eigen::Index>(order.size()));
  std::vector<long> counts(attr.values.size(), 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    emb.col(static_cast<Eigen::Index>(r)) = kept[order[r]].second;
    report.row_example.push_back(kept[order[r]].first);
    ++counts[static_cast<std::size_t>(kept_label[order[r]])];
  }
  for (std::size_t v = 0; v < attr.values.size(); ++v) {
    report.class_names.push_back(attr.values[v]);
    report.class_sizes.push_back(counts[v]);
  }
  report.matrix = cosine_similarity_matrix(emb);
  return report;
}

// Mean similarity between a sample and its k most-similar members of one
// cluster, self excluded. A cluster smaller than k lowers k with a flag; a
// cluster with nobody but the sample itself is an error.
struct ClusterScore {
  double score = 0;
  int k_used = 0;
  bool k_lowered = false;
};

inline ClusterScore cluster_similarity_score(const Mat<float>& sim, long sample,
                                             const std::vector<long>& cluster,
                                             int k_neighbors = 50) {
  if (k_neighbors < 1)
    throw std::invalid_argument("similarity score: k_neighbors must be >= 1");
  if (sample < 0 || sample >= sim.rows())
    throw std::invalid_argument("similarity score: sample index out of range");
  std::vector<double> sims;
  for (long member : cluster) {
    if (member == sample) continue;
    if (member < 0 || member >= sim.rows())
      throw std::invalid_argument("similarity score: cluster index out of range");
    sims.push_back(static_cast<double>(sim(sample, member)));
  }
  if (sims.empty())
    throw std::invalid_argument("similarity score: cluster holds only the sample itself");

  ClusterScore out;
  out.k_used = std::min<int>(k_neighbors, static_cast<int>(sims.size()));
  out.k_lowered = out.k_used < k_neighbors;
  std::partial_sort(sims.begin(), sims.begin() + out.k_used, sims.end(),
                    std::greater<double>());
  double acc = 0;
  for (int i = 0; i < out.k_used; ++i) acc += sims[static_cast<std::size_t>(i)];
  out.score = acc / out.k_used;
  return out;
}

// Histograms of each class-block pair, binned over [-1, 1]. Diagonal blocks
// count each unordered pair once and skip the self-similarity diagonal.
inline nlohmann::json similarity_histograms(const SimilarityReport& report,
                                            double bin_width = 0.02) {
  if (bin_width <= 0) throw std::invalid_argument("histogram: bin_width must be positive");
  const int bins = static_cast<int>(std::ceil(2.0 / bin_width));
  std::vector<long> offsets(report.class_sizes.size() + 1, 0);
  for (std::size_t b = 0; b < report.class_sizes.size(); ++b)
    offsets[b + 1] = offsets[b] + report.class_sizes[b];

  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t br = 0; br < report.class_sizes.size(); ++br) {
    for (std::size_t bc = br; bc < report.class_sizes.size(); ++bc) {
      std::vector<long> counts(static_cast<std::size_t>(bins), 0);
      double sum = 0;
      long total = 0;
      for (long i = offsets[br]; i < offsets[br + 1]; ++i) {
        const long j_begin = br == bc ? i + 1 : offsets[bc];
        for (long j = j_begin; j < offsets[bc + 1]; ++j) {
          const double s = static_cast<double>(report.matrix(i, j));
          int bin = static_cast<int>(std::floor((s + 1.0) / bin_width));
          bin = std::clamp(bin, 0, bins - 1);
          ++counts[static_cast<std::size_t>(bin)];
          sum += s;
          ++total;
        }
      }
      nlohmann::json block;
      block["row_class"] = report.class_names[br];
      block["col_class"] = report.class_names[bc];
      block["counts"] = counts;
      block["pairs"] = total;
      block["mean"] = total > 0 ? sum / total : 0.0;
      blocks.push_back(std::move(block));
    }
  }
  nlohmann::json out;
  out["bin_width"] = bin_width;
  out["lo"] = -1.0;
  out["classes"] = report.class_names;
  out["class_sizes"] = report.class_sizes;
  out["excluded"] = report.excluded;
  out["blocks"] = std::move(blocks);
  return out;
}

// ---------------------------------------------------------------------------
// Disentanglement probe: how much attribute signal a linear classifier can
// still read out of the latent codes.

struct ProbeConfig {
  int epochs = 300;
  double lr = 0.1;
  double l2 = 1e-3;
  double valid_frac = 0.25;
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("probe: epochs must be >= 1");
    if (lr <= 0) throw std::invalid_argument("probe: lr must be positive");
    if (l2 < 0) throw std::invalid_argument("probe: l2 must be >= 0");
    if (valid_frac <= 0 || valid_frac >= 1)
      throw std::invalid_argument("probe: valid_frac must be in (0,1)");
  }
};

struct LogisticProbe {
  Mat<double> W;
  Vec<double> b;
  double accuracy = 0;  // held-out
};

// Full-batch multinomial logistic regression with L2, plain gradient
// descent. Deterministic in the seed. Features are standardized per
// dimension with training-split moments; latent scales vary by orders of
// magnitude across runs and raw codes stall the fixed learning rate.
inline LogisticProbe train_logistic_probe(const Mat<float>& z, const std::vector<int>& labels,
                                          int classes, const ProbeConfig& cfg = {}) {
  cfg.validate();
  const int n = static_cast<int>(z.cols());
  if (n != static_cast<int>(labels.size()))
    throw std::invalid_argument("probe: one label per code required");
  if (classes < 2) throw std::invalid_argument("probe: need at least two classes");
  if (n < 4) throw std::invalid_argument("probe: too few codes");
  for (int l : labels)
    if (l < 0 || l >= classes) throw std::invalid_argument("probe: label out of range");

  Rng rng = Rng::substream(cfg.seed, "probe-split");
  const auto perm = rng.permutation(n);
  const int n_valid = std::max(1, static_cast<int>(std::lround(cfg.valid_frac * n)));
  if (n_valid >= n) throw std::invalid_argument("probe: too few codes to split");
  const int n_train = n - n_valid;

  const int d = static_cast<int>(z.rows());
  Mat<double> ztr(d, n_train), zva(d, n_valid);
  std::vector<int> ytr(static_cast<std::size_t>(n_train)), yva(static_cast<std::size_t>(n_valid));
  for (int i = 0; i < n_train; ++i) {
    ztr.col(i) = z.col(perm[static_cast<std::size_t>(i)]).cast<double>();
    ytr[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  for (int i = 0; i < n_valid; ++i) {
    zva.col(i) = z.col(perm[static_cast<std::size_t>(n_train + i)]).cast<double>();
    yva[static_cast<std::size_t>(i)] =
        labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(n_train + i)])];
  }

  const Vec<double> mean = ztr.rowwise().mean();
  const Vec<double> sd =
      ((ztr.colwise() - mean).array().square().rowwise().mean() + 1e-12).sqrt();
  ztr = (ztr.colwise() - mean).array().colwise() / sd.array();
  zva = (zva.colwise() - mean).array().colwise() / sd.array();

  LogisticProbe probe;
  probe.W = Mat<double>::Zero(classes, d);
  probe.b = Vec<double>::Zero(classes);
  Mat<double> onehot = Mat<double>::Zero(classes, n_train);
  for (int i = 0; i < n_train; ++i) onehot(ytr[static_cast<std::size_t>(i)], i) = 1.0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Mat<double> logits = (probe.W * ztr).colwise() + probe.b;
    Mat<double> p = logits;
    for (int i = 0; i < n_train; ++i) {
      const double m = p.col(i).maxCoeff();
      p.col(i) = (p.col(i).array() - m).exp();
      p.col(i) /= p.col(i).sum();
    }
    const Mat<double> delta = (p - onehot) / static_cast<double>(n_train);
    probe.W -= cfg.lr * (delta * ztr.transpose() + cfg.l2 * probe.W);
    probe.b -= cfg.lr * delta.rowwise().sum();
  }

  long correct = 0;
  for (int i = 0; i < n_valid; ++i) {
    Eigen::Index arg = 0;
    (probe.W * zva.col(i) + probe.b).maxCoeff(&arg);
    if (static_cast<int>(arg) == yva[static_cast<std::size_t>(i)]) ++correct;
  }
  probe.accuracy = static_cast<double>(correct) / n_valid;
  return probe;
}

struct ProbeRow {
  std::string attribute;
  double accuracy = 0;
};

// Posterior-mean codes for the whole corpus, one probe per attribute.
inline std::vector<ProbeRow> probe_disentanglement(const ModelState<float>& model,
                                                   const LabeledCorpus& corpus,
                                                   const ProbeConfig& cfg = {}) {
  if (corpus.examples.empty()) throw std::invalid_argument("probe: empty corpus");
  Mat<float> z(model.config.d_z, static_cast<Eigen::Index>(corpus.examples.size()));
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    Vec<float> mu;
    encode_values<float>(model, detail::strip_trailing_pad(corpus.examples[i].tokens), &mu,
                         nullptr);
    z.col(static_cast<Eigen::Index>(i)) = mu;
  }

  std::vector<ProbeRow> rows;
  for (int k = 0; k < corpus.schema.size(); ++k) {
    std::vector<int> labels;
    labels.reserve(corpus.examples.size());
    for (const auto& ex : corpus.examples)
      labels.push_back(ex.attributes.labels[static_cast<std::size_t>(k)]);
    const auto& attr = corpus.schema.attributes[static_cast<std::size_t>(k)];
    const auto probe =
        train_logistic_probe(z, labels, static_cast<int>(attr.values.size()), cfg);
    rows.push_back({attr.name, probe.accuracy});
  }
  return rows;
}

}  // namespace cga
