#include "cga/toy.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

namespace {

TEST(ToyVocabulary, StaysUnderTheWordBudget) {
  const cga::Vocabulary full = cga::toy_vocabulary(false);
  const cga::Vocabulary compact = cga::toy_vocabulary(true);
  EXPECT_LE(full.size(), 200);
  EXPECT_GT(full.size(), compact.size());
  EXPECT_LE(compact.size(), 100);
  EXPECT_TRUE(full.contains("movie"));
  EXPECT_TRUE(full.contains("."));
}

TEST(ToyCorpus, BalancedOverAllAttributeCombinations) {
  const auto schema = cga::schema_from_names({"tense", "person", "sentiment"});
  const auto sents = cga::make_toy_sentences(120, schema, 11);
  ASSERT_EQ(sents.size(), 120u);

  std::map<std::string, int> combo_counts;
  for (const auto& s : sents) {
    std::string key;
    for (const auto& [k, v] : s.labels) key += k + "=" + v + ";";
    ++combo_counts[key];
  }
  EXPECT_EQ(combo_counts.size(), 12u);
  for (const auto& [key, count] : combo_counts) EXPECT_EQ(count, 10) << key;
}

TEST(ToyCorpus, RecordedLabelsMatchIndependentRelabeling) {
  const auto schema = cga::schema_from_names({"tense", "person", "sentiment"});
  const auto tagger = cga::toy_tagger();
  const auto lexicon = cga::toy_sentiment_lexicon();
  const cga::SentenceLabeler labeler(tagger, lexicon);

  for (const auto& s : cga::make_toy_sentences(240, schema, 12)) {
    const auto relabeled = labeler.label(s.tokens, std::nullopt, schema);
    ASSERT_TRUE(relabeled.has_value()) << cga::join_tokens(s.tokens);
    EXPECT_EQ(*relabeled, s.labels) << cga::join_tokens(s.tokens);
  }
}

TEST(ToyCorpus, TokensComeFromTheClosedVocabulary) {
  const auto schema = cga::schema_from_names({"tense", "person", "sentiment"});
  const cga::Vocabulary vocab = cga::toy_vocabulary();
  for (const auto& s : cga::make_toy_sentences(120, schema, 13)) {
    EXPECT_LE(s.tokens.size(), 8u);
    for (const auto& t : s.tokens) EXPECT_TRUE(vocab.contains(t)) << t;
  }
}

TEST(ToyCorpus, SeedDeterminesTheCorpus) {
  const auto schema = cga::schema_from_names({"tense", "sentiment"});
  const auto a = cga::make_toy_sentences(50, schema, 21);
  const auto b = cga::make_toy_sentences(50, schema, 21);
  const auto c = cga::make_toy_sentences(50, schema, 22);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].tokens, b[i].tokens);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].tokens != c[i].tokens) any_diff = true;
  EXPECT_TRUE(any_diff);
}

TEST(ToyCorpus, SubsetSchemasWork) {
  const auto schema = cga::schema_from_names({"sentiment"});
  const auto sents = cga::make_toy_sentences(40, schema, 31, /*compact=*/true);
  int pos = 0;
  for (const auto& s : sents) {
    ASSERT_EQ(s.labels.size(), 1u);
    if (s.labels.at("sentiment") == "positive") ++pos;
  }
  EXPECT_EQ(pos, 20);
}

TEST(ToySynonyms, ClustersPreservePolarityAndNumber) {
  const auto& table = cga::toy_synonym_table();
  const auto great = table.at("great");
  EXPECT_NE(std::find(great.begin(), great.end(), "wonderful"), great.end());
  const auto movies = table.at("movies");
  EXPECT_EQ(movies, (std::vector<std::string>{"films"}));
  // Sparse on purpose: most words have no synonyms.
  EXPECT_EQ(table.count("she"), 0u);
  EXPECT_EQ(table.count("horrible"), 0u);

  const auto lexicon = cga::toy_sentiment_lexicon();
  for (const auto& [word, syns] : table) {
    for (const auto& syn : syns) {
      EXPECT_EQ(lexicon.is_positive_word(word), lexicon.is_positive_word(syn)) << word;
      EXPECT_EQ(lexicon.is_negative_word(word), lexicon.is_negative_word(syn)) << word;
    }
  }
}

TEST(ToySentimentLexicon, CoversVerbFormsAndAdjectives) {
  const auto lex = cga::toy_sentiment_lexicon();
  EXPECT_TRUE(lex.is_positive_word("enjoyed"));
  EXPECT_TRUE(lex.is_positive_word("enjoys"));
  EXPECT_TRUE(lex.is_negative_word("hated"));
  EXPECT_TRUE(lex.is_negative_word("awful"));
  EXPECT_FALSE(lex.is_positive_word("movie"));
  EXPECT_FALSE(lex.is_negative_word("movie"));
}

}  // namespace
