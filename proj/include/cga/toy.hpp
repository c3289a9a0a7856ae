#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cga/attributes.hpp"
#include "cga/corpus.hpp"
#include "cga/labeling.hpp"
#include "cga/pos.hpp"
#include "cga/rng.hpp"

// A small template grammar over a closed vocabulary, used for end-to-end
// verification. Every generated sentence is re-labeled with the same rules
// the corpus pipeline uses, so requested attributes and rule labels agree by
// construction:
//   - exactly one tensed verb per sentence,
//   - exactly one polarity of sentiment words per sentence,
//   - object noun number matches the subject's class, and the balanced
//     person class only gets noun-free predicates.
// Label-neutral choices (adverb use, deixis, subject mix) are sampled with
// class-dependent frequencies, the way register and topic shadow sentiment
// and tense in natural text. The rule labels never depend on them, but they
// keep latent codes statistically tied to the attributes, which the
// disentanglement checks rely on.

namespace cga {

struct VerbForms {
  std::string vbp, vbz, vbd;
};

struct ToyLexemes {
  std::vector<std::string> singular_subjects, plural_subjects, balanced_subjects;
  std::vector<VerbForms> link_verbs, neutral_verbs, positive_verbs, negative_verbs;
  std::vector<std::string> positive_adjectives, negative_adjectives;
  std::vector<std::string> singular_nouns, plural_nouns;  // parallel pairs
  std::vector<std::string> adverbs;
  std::vector<std::string> singular_determiners, plural_determiners;
};

// `compact` keeps roughly a third of the open-class words. Both variants
// stay under the 200-word budget the end-to-end checks assume.
inline const ToyLexemes& toy_lexemes(bool compact = false) {
  static const ToyLexemes full = {
      {"i", "he", "she", "it"},
      {"we", "they"},
      {"you"},
      {{"seem", "seems", "seemed"},
       {"look", "looks", "looked"},
       {"feel", "feels", "felt"},
       {"sound", "sounds", "sounded"}},
      {{"see", "sees", "saw"},
       {"watch", "watches", "watched"},
       {"visit", "visits", "visited"},
       {"remember", "remembers", "remembered"},
       {"describe", "describes", "described"},
       {"try", "tries", "tried"}},
      {{"enjoy", "enjoys", "enjoyed"},
       {"love", "loves", "loved"},
       {"adore", "adores", "adored"},
       {"recommend", "recommends", "recommended"},
       {"praise", "praises", "praised"},
       {"appreciate", "appreciates", "appreciated"}},
      {{"hate", "hates", "hated"},
       {"dislike", "dislikes", "disliked"},
       {"regret", "regrets", "regretted"},
       {"despise", "despises", "despised"},
       {"dread", "dreads", "dreaded"},
       {"resent", "resents", "resented"}},
      {"great", "good", "wonderful", "amazing", "excellent", "fantastic", "lovely", "superb",
       "delightful", "pleasant", "brilliant", "charming", "enjoyable", "terrific", "awesome"},
      {"bad", "terrible", "awful", "horrible", "boring", "dreadful", "lousy", "unpleasant",
       "disappointing", "mediocre", "dull", "nasty", "gross", "miserable", "annoying"},
      {"movie", "film", "book", "song", "show", "meal", "place", "game", "story", "dish"},
      {"movies", "films", "books", "songs", "shows", "meals", "places", "games", "stories",
       "dishes"},
      {"really", "very", "quite", "so", "rather"},
      {"this", "that", "the", "a"},
      {"these", "those", "the"},
  };
  static const ToyLexemes small = [] {
    ToyLexemes t = full;
    auto take = [](auto& v, std::size_t n) { v.resize(std::min(v.size(), n)); };
    take(t.link_verbs, 2);
    take(t.neutral_verbs, 3);
    take(t.positive_verbs, 3);
    take(t.negative_verbs, 3);
    take(t.positive_adjectives, 5);
    take(t.negative_adjectives, 5);
    take(t.singular_nouns, 4);
    take(t.plural_nouns, 4);
    take(t.adverbs, 2);
    take(t.singular_determiners, 2);
    take(t.plural_determiners, 2);
    return t;
  }();
  return compact ? small : full;
}

// Every toy word gets an explicit lexicon entry, so the suffix fallbacks
// never fire on toy sentences.
inline RuleTagger toy_tagger(bool compact = false) {
  const ToyLexemes& lx = toy_lexemes(compact);
  RuleTagger tagger;
  for (const auto& w : lx.singular_subjects) tagger.add(w, PosTag::PRP);
  for (const auto& w : lx.plural_subjects) tagger.add(w, PosTag::PRP);
  for (const auto& w : lx.balanced_subjects) tagger.add(w, PosTag::PRP);
  auto add_verbs = [&](const std::vector<VerbForms>& vs) {
    for (const auto& v : vs) {
      tagger.add(v.vbp, PosTag::VBP);
      tagger.add(v.vbz, PosTag::VBZ);
      tagger.add(v.vbd, PosTag::VBD);
    }
  };
  add_verbs(lx.link_verbs);
  add_verbs(lx.neutral_verbs);
  add_verbs(lx.positive_verbs);
  add_verbs(lx.negative_verbs);
  for (const auto& w : lx.singular_nouns) tagger.add(w, PosTag::NN);
  for (const auto& w : lx.plural_nouns) tagger.add(w, PosTag::NNS);
  for (const auto& w : lx.positive_adjectives) tagger.add(w, PosTag::OTHER);
  for (const auto& w : lx.negative_adjectives) tagger.add(w, PosTag::OTHER);
  for (const auto& w : lx.adverbs) tagger.add(w, PosTag::OTHER);
  for (const auto& w : lx.singular_determiners) tagger.add(w, PosTag::OTHER);
  for (const auto& w : lx.plural_determiners) tagger.add(w, PosTag::OTHER);
  tagger.add(".", PosTag::OTHER);
  return tagger;
}

inline SentimentLexicon toy_sentiment_lexicon(bool compact = false) {
  const ToyLexemes& lx = toy_lexemes(compact);
  std::unordered_set<std::string> pos, neg;
  for (const auto& w : lx.positive_adjectives) pos.insert(w);
  for (const auto& w : lx.negative_adjectives) neg.insert(w);
  for (const auto& v : lx.positive_verbs) {
    pos.insert(v.vbp);
    pos.insert(v.vbz);
    pos.insert(v.vbd);
  }
  for (const auto& v : lx.negative_verbs) {
    neg.insert(v.vbp);
    neg.insert(v.vbz);
    neg.insert(v.vbd);
  }
  return SentimentLexicon(std::move(pos), std::move(neg));
}

// Deliberately sparse: a handful of clusters, most words left without
// synonyms. Replacements stay inside one polarity, tense form, and noun
// number, so swapping never flips a label.
inline const std::map<std::string, std::vector<std::string>>& toy_synonym_table() {
  static const std::map<std::string, std::vector<std::string>> table = [] {
    std::map<std::string, std::vector<std::string>> t;
    auto cluster = [&t](const std::vector<std::string>& words) {
      for (const auto& w : words) {
        for (const auto& o : words)
          if (o != w) t[w].push_back(o);
      }
    };
    cluster({"great", "wonderful", "excellent"});
    cluster({"amazing", "fantastic", "superb"});
    cluster({"bad", "terrible", "awful"});
    cluster({"boring", "dull", "dreadful"});
    cluster({"movie", "film"});
    cluster({"movies", "films"});
    cluster({"book", "story"});
    cluster({"books", "stories"});
    cluster({"enjoy", "love"});
    cluster({"enjoys", "loves"});
    cluster({"enjoyed", "loved"});
    cluster({"hate", "dislike"});
    cluster({"hates", "dislikes"});
    cluster({"hated", "disliked"});
    cluster({"really", "very"});
    return t;
  }();
  return table;
}

namespace detail {

enum class PersonClass { Singular, Plural, Balanced };

inline const std::string& pick(Rng& rng, const std::vector<std::string>& v) {
  return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(v.size()) - 1))];
}

inline const VerbForms& pick(Rng& rng, const std::vector<VerbForms>& v) {
  return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(v.size()) - 1))];
}

// Picks `preferred` with probability p, otherwise uniformly among the rest.
// Falls back to a uniform pick when the pool does not carry the preferred
// word (the compact pools drop some of them).
inline const std::string& pick_preferring(Rng& rng, const std::vector<std::string>& v,
                                          const std::string& preferred, double p) {
  const auto it = std::find(v.begin(), v.end(), preferred);
  if (it == v.end() || v.size() < 2) return pick(rng, v);
  if (rng.bernoulli(p)) return *it;
  std::size_t i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(v.size()) - 2));
  if (i >= static_cast<std::size_t>(it - v.begin())) ++i;
  return v[i];
}

// Uniform pick from the pool members inside (or outside) a preference set.
inline const std::string& pick_among(Rng& rng, const std::vector<std::string>& v,
                                     const std::vector<std::string>& wanted, bool members) {
  std::vector<const std::string*> side;
  for (const auto& w : v) {
    const bool in = std::find(wanted.begin(), wanted.end(), w) != wanted.end();
    if (in == members) side.push_back(&w);
  }
  if (side.empty()) return pick(rng, v);
  return *side[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(side.size()) - 1))];
}

// Agreement: VBZ for third-person-singular subjects, VBP otherwise.
inline std::string tensed(const VerbForms& v, Tense tense, const std::string& subject) {
  if (tense == Tense::Past) return v.vbd;
  const bool third_singular = subject == "he" || subject == "she" || subject == "it";
  return third_singular ? v.vbz : v.vbp;
}

// Class-dependent style frequencies. Sentiment shifts how often an adverb
// appears, tense shifts which adverb, which deictic determiner, and which
// subjects are in fashion. None of these choices move any rule label.
constexpr double kAdverbIfPositive = 0.8;
constexpr double kAdverbIfNegative = 0.2;
constexpr double kPreferredAdverb = 0.8;
constexpr double kPreferredDeixis = 0.75;
constexpr double kPreferredSubject = 0.7;

inline std::vector<std::string> toy_sentence(Rng& rng, const ToyLexemes& lx, Tense tense,
                                             PersonClass person, Sentiment sentiment) {
  const bool positive = sentiment == Sentiment::Positive;
  const bool past = tense == Tense::Past;
  const auto& polar_adjs = positive ? lx.positive_adjectives : lx.negative_adjectives;
  const auto& polar_verbs = positive ? lx.positive_verbs : lx.negative_verbs;

  static const std::vector<std::string> present_favorites = {"he", "she", "we"};
  std::string subject;
  switch (person) {
    case PersonClass::Singular:
      subject = pick_among(rng, lx.singular_subjects, present_favorites,
                           rng.bernoulli(kPreferredSubject) ? !past : past);
      break;
    case PersonClass::Plural:
      subject = pick_among(rng, lx.plural_subjects, present_favorites,
                           rng.bernoulli(kPreferredSubject) ? !past : past);
      break;
    case PersonClass::Balanced: subject = pick(rng, lx.balanced_subjects); break;
  }

  const bool want_adverb = rng.bernoulli(positive ? kAdverbIfPositive : kAdverbIfNegative);
  const auto adverb = [&]() -> const std::string& {
    return pick_preferring(rng, lx.adverbs, past ? "very" : "really", kPreferredAdverb);
  };

  // Balanced subjects only take the noun-free template; a noun on either
  // side would tip the person-number vote.
  const int n_templates = person == PersonClass::Balanced ? 1 : 3;
  const int tpl = rng.uniform_int(0, n_templates - 1);

  std::vector<std::string> s;
  s.push_back(subject);
  if (tpl == 0) {
    s.push_back(tensed(pick(rng, lx.link_verbs), tense, subject));
    if (want_adverb) s.push_back(adverb());
    s.push_back(pick(rng, polar_adjs));
  } else {
    const bool plural_object = person == PersonClass::Plural;
    const auto& dets = plural_object ? lx.plural_determiners : lx.singular_determiners;
    const auto& nouns = plural_object ? lx.plural_nouns : lx.singular_nouns;
    const std::string deictic = plural_object ? (past ? "those" : "these")
                                              : (past ? "that" : "this");
    if (tpl == 1) {
      if (want_adverb) s.push_back(adverb());
      s.push_back(tensed(pick(rng, polar_verbs), tense, subject));
      s.push_back(pick_preferring(rng, dets, deictic, kPreferredDeixis));
      s.push_back(pick(rng, nouns));
    } else {
      s.push_back(tensed(pick(rng, lx.neutral_verbs), tense, subject));
      s.push_back(pick_preferring(rng, dets, deictic, kPreferredDeixis));
      if (want_adverb) s.push_back(adverb());
      s.push_back(pick(rng, polar_adjs));
      s.push_back(pick(rng, nouns));
    }
  }
  s.push_back(".");
  return s;
}

}  // namespace detail

// Balanced corpus: combinations of the schema's values are filled round-robin
// in canonical order. Attributes outside the schema are still varied (drawn
// uniformly) but not recorded. Every sentence is verified against the rule
// labeler before it is accepted.
inline std::vector<LabeledSentence> make_toy_sentences(int n, const AttributeSchema& schema,
                                                       std::uint64_t seed, bool compact = false) {
  schema.validate();
  const ToyLexemes& lx = toy_lexemes(compact);
  const RuleTagger tagger = toy_tagger(compact);
  const SentimentLexicon lexicon = toy_sentiment_lexicon(compact);
  const SentenceLabeler labeler(tagger, lexicon);

  const int tense_idx = schema.attribute_index("tense");
  const int person_idx = schema.attribute_index("person");
  const int sentiment_idx = schema.attribute_index("sentiment");

  Rng rng = Rng::substream(seed, "toy-corpus");
  std::vector<LabeledSentence> out;
  out.reserve(static_cast<std::size_t>(n));
  const int n_combos = schema.combination_count();
  for (int i = 0; i < n; ++i) {
    const std::vector<int> combo = schema.combination(i % n_combos);

    Tense tense = rng.bernoulli(0.5) ? Tense::Present : Tense::Past;
    if (tense_idx >= 0)
      tense = schema.attributes[static_cast<std::size_t>(tense_idx)]
                          .values[static_cast<std::size_t>(combo[static_cast<std::size_t>(tense_idx)])] ==
                      "present"
                  ? Tense::Present
                  : Tense::Past;

    detail::PersonClass person =
        rng.bernoulli(0.5) ? detail::PersonClass::Singular : detail::PersonClass::Plural;
    if (person_idx >= 0) {
      const std::string& v =
          schema.attributes[static_cast<std::size_t>(person_idx)]
              .values[static_cast<std::size_t>(combo[static_cast<std::size_t>(person_idx)])];
      person = v == "singular"  ? detail::PersonClass::Singular
               : v == "plural"  ? detail::PersonClass::Plural
                                : detail::PersonClass::Balanced;
    }

    Sentiment sentiment = rng.bernoulli(0.5) ? Sentiment::Positive : Sentiment::Negative;
    if (sentiment_idx >= 0)
      sentiment = schema.attributes[static_cast<std::size_t>(sentiment_idx)]
                              .values[static_cast<std::size_t>(
                                  combo[static_cast<std::size_t>(sentiment_idx)])] == "positive"
                      ? Sentiment::Positive
                      : Sentiment::Negative;

    // Relabel-verify with a resample cap; a miss here means the grammar and
    // the labeling rules have drifted apart.
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      std::vector<std::string> tokens = detail::toy_sentence(rng, lx, tense, person, sentiment);
      auto labels = labeler.label(tokens, std::nullopt, schema);
      if (!labels) continue;
      bool match = true;
      for (int k = 0; k < schema.size(); ++k) {
        const auto& attr = schema.attributes[static_cast<std::size_t>(k)];
        if ((*labels)[attr.name] !=
            attr.values[static_cast<std::size_t>(combo[static_cast<std::size_t>(k)])]) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      out.push_back({std::move(tokens), std::move(*labels)});
      accepted = true;
    }
    if (!accepted)
      throw std::runtime_error("toy corpus: could not realize attribute combination " +
                               std::to_string(i % n_combos));
  }
  return out;
}

// Vocabulary over the full toy word list (not just one sample), so encode
// maps are stable across corpus draws.
inline Vocabulary toy_vocabulary(bool compact = false) {
  const ToyLexemes& lx = toy_lexemes(compact);
  Vocabulary v;
  for (const auto& w : lx.singular_subjects) v.add(w);
  for (const auto& w : lx.plural_subjects) v.add(w);
  for (const auto& w : lx.balanced_subjects) v.add(w);
  auto add_verbs = [&](const std::vector<VerbForms>& vs) {
    for (const auto& f : vs) {
      v.add(f.vbp);
      v.add(f.vbz);
      v.add(f.vbd);
    }
  };
  add_verbs(lx.link_verbs);
  add_verbs(lx.neutral_verbs);
  add_verbs(lx.positive_verbs);
  add_verbs(lx.negative_verbs);
  for (const auto& w : lx.positive_adjectives) v.add(w);
  for (const auto& w : lx.negative_adjectives) v.add(w);
  for (const auto& w : lx.singular_nouns) v.add(w);
  for (const auto& w : lx.plural_nouns) v.add(w);
  for (const auto& w : lx.adverbs) v.add(w);
  for (const auto& w : lx.singular_determiners) v.add(w);
  for (const auto& w : lx.plural_determiners) v.add(w);
  v.add(".");
  return v;
}

}  // namespace cga
