#pragma once

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cga/attributes.hpp"
#include "cga/rng.hpp"

namespace cga {

// Special token ids occupy the first five slots of every vocabulary.
constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kSosId = 2;
constexpr int kEosId = 3;
constexpr int kNumId = 4;
constexpr int kNumSpecials = 5;

inline const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> s = {"<pad>", "<unk>", "<sos>", "<eos>", "NUM"};
  return s;
}

constexpr int kMaxSentenceLen = 20;  // content tokens, before SOS/EOS framing

// Lowercases, splits punctuation into single-character tokens, keeps
// apostrophes inside words ("i'm" stays whole), and collapses digit runs to
// the NUM token.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  bool cur_is_digits = false;
  auto flush = [&]() {
    if (cur.empty()) return;
    out.push_back(cur_is_digits ? std::string("NUM") : cur);
    cur.clear();
    cur_is_digits = false;
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (std::isdigit(c)) {
      if (!cur.empty() && !cur_is_digits) flush();
      cur_is_digits = true;
      cur.push_back(static_cast<char>(c));
    } else if (std::isalpha(c) || c == '\'') {
      if (cur_is_digits) flush();
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      out.push_back(std::string(1, static_cast<char>(c)));
    }
  }
  flush();
  return out;
}

class Vocabulary {
 public:
  Vocabulary() {
    for (const auto& s : special_tokens()) {
      token_to_id_[s] = static_cast<int>(id_to_token_.size());
      id_to_token_.push_back(s);
    }
  }

  int add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = static_cast<int>(id_to_token_.size());
    token_to_id_.emplace(token, id);
    id_to_token_.push_back(token);
    return id;
  }

  // UNK for out-of-vocabulary tokens.
  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
  }

  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

  const std::string& token(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("vocabulary: id out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }

  // Newline-delimited tokens, line number = id, first five lines specials.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("vocabulary: cannot write " + path);
    for (const auto& t : id_to_token_) out << t << "\n";
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("vocabulary: cannot read " + path);
    Vocabulary v;
    std::string line;
    int idx = 0;
    while (std::getline(in, line)) {
      if (idx < kNumSpecials) {
        if (line != special_tokens()[static_cast<std::size_t>(idx)])
          throw std::runtime_error("vocabulary: bad special token at line " + std::to_string(idx));
      } else {
        v.add(line);
      }
      ++idx;
    }
    if (idx < kNumSpecials) throw std::runtime_error("vocabulary: truncated file " + path);
    return v;
  }

  bool operator==(const Vocabulary& o) const { return id_to_token_ == o.id_to_token_; }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Tokens with frequency >= min_freq enter the vocabulary in order of first
// occurrence; everything else maps to UNK at encode time.
inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpus,
                                   int min_freq = 1) {
  if (corpus.empty()) throw std::invalid_argument("build_vocabulary: empty corpus");
  std::unordered_map<std::string, int> freq;
  for (const auto& sent : corpus)
    for (const auto& tok : sent) ++freq[tok];
  Vocabulary v;
  for (const auto& sent : corpus)
    for (const auto& tok : sent)
      if (!v.contains(tok) && freq[tok] >= min_freq) v.add(tok);
  return v;
}

// SOS + ids (content truncated to max_len) + EOS.
inline std::vector<int> encode_sentence(const std::vector<std::string>& tokens,
                                        const Vocabulary& vocab,
                                        int max_len = kMaxSentenceLen) {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(kSosId);
  const int n = std::min<int>(static_cast<int>(tokens.size()), max_len);
  for (int i = 0; i < n; ++i) ids.push_back(vocab.id(tokens[i]));
  ids.push_back(kEosId);
  return ids;
}

// Content tokens only; SOS/EOS/PAD are framing.
inline std::vector<std::string> decode_sentence(const std::vector<int>& ids,
                                                const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kSosId || id == kPadId) continue;
    if (id == kEosId) break;
    out.push_back(vocab.token(id));
  }
  return out;
}

// A sentence after tokenization and rule labeling, before any vocabulary is
// fixed. This is the unit of the labeled-corpus JSONL interchange format.
struct LabeledSentence {
  std::vector<std::string> tokens;
  std::map<std::string, std::string> labels;
};

struct LabeledExample {
  std::vector<int> tokens;  // framed SOS ... EOS
  AttributeVector attributes;
  std::string raw_text;
};

struct LabeledCorpus {
  AttributeSchema schema;
  std::vector<LabeledExample> examples;
};

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

// Raw corpus input: one JSON object per line,
// {"text": string, "rating": int optional, "labels": {attr: value} optional}.
struct RawRecord {
  std::string text;
  std::optional<int> rating;
  std::map<std::string, std::string> labels;
};

inline std::vector<RawRecord> read_raw_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<RawRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    RawRecord r;
    r.text = j.at("text").get<std::string>();
    if (j.contains("rating")) r.rating = j.at("rating").get<int>();
    if (j.contains("labels"))
      r.labels = j.at("labels").get<std::map<std::string, std::string>>();
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_labeled_jsonl(const std::vector<LabeledSentence>& sents,
                                const std::string& path,
                                const nlohmann::json& provenance = {}) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& s : sents) {
    nlohmann::json j{{"tokens", s.tokens}, {"labels", s.labels}};
    if (!provenance.empty())
      for (auto it = provenance.begin(); it != provenance.end(); ++it) j[it.key()] = it.value();
    out << j.dump() << "\n";
  }
}

inline std::vector<LabeledSentence> read_labeled_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<LabeledSentence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    LabeledSentence s;
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    s.labels = j.at("labels").get<std::map<std::string, std::string>>();
    out.push_back(std::move(s));
  }
  return out;
}

inline LabeledCorpus encode_corpus(const std::vector<LabeledSentence>& sents,
                                   const AttributeSchema& schema, const Vocabulary& vocab,
                                   int max_len = kMaxSentenceLen) {
  LabeledCorpus c;
  c.schema = schema;
  c.examples.reserve(sents.size());
  for (const auto& s : sents) {
    LabeledExample ex;
    ex.tokens = encode_sentence(s.tokens, vocab, max_len);
    std::vector<std::string> labels(schema.size());
    for (int k = 0; k < schema.size(); ++k) {
      auto it = s.labels.find(schema.attributes[k].name);
      if (it == s.labels.end())
        throw std::runtime_error("encode_corpus: sentence missing label '" +
                                 schema.attributes[k].name + "'");
      labels[k] = it->second;
    }
    ex.attributes = make_attribute_vector(labels, schema);
    ex.raw_text = join_tokens(s.tokens);
    c.examples.push_back(std::move(ex));
  }
  return c;
}

template <class T>
struct Splits {
  std::vector<T> train, valid, test;
};

// Deterministic given seed; disjoint and exhaustive.
template <class T>
Splits<T> make_splits(const std::vector<T>& items, double train_frac, double valid_frac,
                      double test_frac, std::uint64_t seed) {
  const double sum = train_frac + valid_frac + test_frac;
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("make_splits: fractions must sum to 1");
  const int n = static_cast<int>(items.size());
  Rng rng = Rng::substream(seed, "splits");
  std::vector<int> order = rng.permutation(n);
  const int n_train = static_cast<int>(std::lround(train_frac * n));
  const int n_valid = static_cast<int>(std::lround(valid_frac * n));
  Splits<T> out;
  for (int i = 0; i < n; ++i) {
    const T& item = items[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    if (i < n_train)
      out.train.push_back(item);
    else if (i < n_train + n_valid)
      out.valid.push_back(item);
    else
      out.test.push_back(item);
  }
  return out;
}

}  // namespace cga
