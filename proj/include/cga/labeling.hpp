#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "cga/attributes.hpp"
#include "cga/pos.hpp"

namespace cga {

// Each labeler returns None (or Balanced for person number) when the rule
// evidence ties. Sentences with a None label for a requested attribute are
// excluded from the corpus rather than guessed.
enum class Tense { Present, Past, None };
enum class PersonNumber { Singular, Plural, Balanced };
enum class Sentiment { Positive, Negative, None };

inline const char* tense_name(Tense t) {
  switch (t) {
    case Tense::Present: return "present";
    case Tense::Past: return "past";
    case Tense::None: return "none";
  }
  return "none";
}

inline const char* person_number_name(PersonNumber p) {
  switch (p) {
    case PersonNumber::Singular: return "singular";
    case PersonNumber::Plural: return "plural";
    case PersonNumber::Balanced: return "balanced";
  }
  return "balanced";
}

inline const char* sentiment_name(Sentiment s) {
  switch (s) {
    case Sentiment::Positive: return "positive";
    case Sentiment::Negative: return "negative";
    case Sentiment::None: return "none";
  }
  return "none";
}

// Present-tense verb tags (VBP, VBZ) against past-tense (VBD); majority wins.
inline Tense label_tense(const std::vector<PosTag>& tags) {
  int present = 0, past = 0;
  for (PosTag t : tags) {
    if (t == PosTag::VBP || t == PosTag::VBZ) ++present;
    if (t == PosTag::VBD) ++past;
  }
  if (present > past) return Tense::Present;
  if (past > present) return Tense::Past;
  return Tense::None;
}

inline const std::unordered_set<std::string>& singular_pronouns() {
  static const std::unordered_set<std::string> s = {"i", "he", "she", "it", "myself"};
  return s;
}

inline const std::unordered_set<std::string>& plural_pronouns() {
  static const std::unordered_set<std::string> s = {"we", "they", "themselves", "ourselves"};
  return s;
}

// Singular evidence: singular pronouns and NN tokens. Plural evidence: plural
// pronouns and NNS tokens. A tie (including no evidence) is the balanced
// class, which is kept as a label of its own.
inline PersonNumber label_person_number(const std::vector<std::string>& tokens,
                                        const std::vector<PosTag>& tags) {
  if (tokens.size() != tags.size())
    throw std::invalid_argument("label_person_number: token/tag length mismatch");
  int singular = 0, plural = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (singular_pronouns().count(tokens[i])) ++singular;
    if (plural_pronouns().count(tokens[i])) ++plural;
    if (tags[i] == PosTag::NN) ++singular;
    if (tags[i] == PosTag::NNS) ++plural;
  }
  if (singular > plural) return PersonNumber::Singular;
  if (plural > singular) return PersonNumber::Plural;
  return PersonNumber::Balanced;
}

// Star ratings: 4-5 positive, 1-2 negative, 3 excluded.
inline Sentiment label_sentiment(int rating) {
  if (rating < 1 || rating > 5)
    throw std::out_of_range("label_sentiment: rating must be in 1..5, got " +
                            std::to_string(rating));
  if (rating >= 4) return Sentiment::Positive;
  if (rating <= 2) return Sentiment::Negative;
  return Sentiment::None;
}

// Word-list sentiment classifier: majority vote of polar words, tie or no
// polar words -> None.
class SentimentLexicon {
 public:
  SentimentLexicon() = default;
  SentimentLexicon(std::unordered_set<std::string> positive,
                   std::unordered_set<std::string> negative)
      : positive_(std::move(positive)), negative_(std::move(negative)) {}

  Sentiment classify(const std::vector<std::string>& tokens) const {
    int pos = 0, neg = 0;
    for (const auto& t : tokens) {
      if (positive_.count(t)) ++pos;
      if (negative_.count(t)) ++neg;
    }
    if (pos > neg) return Sentiment::Positive;
    if (neg > pos) return Sentiment::Negative;
    return Sentiment::None;
  }

  bool is_positive_word(const std::string& t) const { return positive_.count(t) > 0; }
  bool is_negative_word(const std::string& t) const { return negative_.count(t) > 0; }

  // One "word<TAB>positive|negative" entry per line.
  static SentimentLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("sentiment lexicon: cannot read " + path);
    SentimentLexicon lex;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected word<TAB>polarity");
      const std::string word = line.substr(0, tab);
      const std::string polarity = line.substr(tab + 1);
      if (polarity == "positive")
        lex.positive_.insert(word);
      else if (polarity == "negative")
        lex.negative_.insert(word);
      else
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown polarity '" +
                                 polarity + "'");
    }
    return lex;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("sentiment lexicon: cannot write " + path);
    std::vector<std::string> words(positive_.begin(), positive_.end());
    std::sort(words.begin(), words.end());
    for (const auto& w : words) out << w << "\tpositive\n";
    words.assign(negative_.begin(), negative_.end());
    std::sort(words.begin(), words.end());
    for (const auto& w : words) out << w << "\tnegative\n";
  }

 private:
  std::unordered_set<std::string> positive_;
  std::unordered_set<std::string> negative_;
};

// The three rule-labelable attributes with their value sets, in canonical
// order. Schemas are built by picking a subset of these names.
inline AttributeSchema schema_from_names(const std::vector<std::string>& names) {
  AttributeSchema schema;
  for (const auto& name : names) {
    if (name == "tense")
      schema.attributes.push_back({"tense", {"present", "past"}});
    else if (name == "person")
      schema.attributes.push_back({"person", {"singular", "plural", "balanced"}});
    else if (name == "sentiment")
      schema.attributes.push_back({"sentiment", {"positive", "negative"}});
    else
      throw std::invalid_argument("schema_from_names: unknown attribute '" + name + "'");
  }
  schema.validate();
  return schema;
}

// Labels one tokenized sentence for every attribute in the schema. Returns
// nullopt when any attribute comes out undecidable (tense tie, neutral
// sentiment), which drops the sentence from the corpus. Sentiment prefers an
// explicit rating; without one it falls back to the lexicon.
class SentenceLabeler {
 public:
  SentenceLabeler(const Tagger& tagger, const SentimentLexicon& lexicon)
      : tagger_(&tagger), lexicon_(&lexicon) {}

  std::optional<std::map<std::string, std::string>> label(
      const std::vector<std::string>& tokens, std::optional<int> rating,
      const AttributeSchema& schema) const {
    const std::vector<PosTag> tags = tagger_->tag(tokens);
    std::map<std::string, std::string> out;
    for (const auto& attr : schema.attributes) {
      if (attr.name == "tense") {
        const Tense t = label_tense(tags);
        if (t == Tense::None) return std::nullopt;
        out["tense"] = tense_name(t);
      } else if (attr.name == "person") {
        out["person"] = person_number_name(label_person_number(tokens, tags));
      } else if (attr.name == "sentiment") {
        const Sentiment s = rating ? label_sentiment(*rating) : lexicon_->classify(tokens);
        if (s == Sentiment::None) return std::nullopt;
        out["sentiment"] = sentiment_name(s);
      } else {
        throw std::invalid_argument("labeler: unknown attribute '" + attr.name + "'");
      }
    }
    return out;
  }

 private:
  const Tagger* tagger_;
  const SentimentLexicon* lexicon_;
};

}  // namespace cga
