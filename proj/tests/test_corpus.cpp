#include "cga/corpus.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

namespace {

std::string tmp_path(const std::string& name) { return ::testing::TempDir() + name; }

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(cga::tokenize("I'm GREAT!"), (std::vector<std::string>{"i'm", "great", "!"}));
  EXPECT_EQ(cga::tokenize("hello,world"), (std::vector<std::string>{"hello", ",", "world"}));
  EXPECT_EQ(cga::tokenize("  spaced   out  "), (std::vector<std::string>{"spaced", "out"}));
}

TEST(Tokenize, DigitRunsCollapseToNumToken) {
  EXPECT_EQ(cga::tokenize("it was 10/10."),
            (std::vector<std::string>{"it", "was", "NUM", "/", "NUM", "."}));
  EXPECT_EQ(cga::tokenize("abc123def"), (std::vector<std::string>{"abc", "NUM", "def"}));
  EXPECT_EQ(cga::tokenize("42"), (std::vector<std::string>{"NUM"}));
}

TEST(Tokenize, EmptyInputYieldsNoTokens) {
  EXPECT_TRUE(cga::tokenize("").empty());
  EXPECT_TRUE(cga::tokenize("   ").empty());
}

TEST(Vocabulary, SpecialsOccupyFirstFiveIds) {
  cga::Vocabulary v;
  EXPECT_EQ(v.size(), 5);
  EXPECT_EQ(v.token(cga::kPadId), "<pad>");
  EXPECT_EQ(v.token(cga::kUnkId), "<unk>");
  EXPECT_EQ(v.token(cga::kSosId), "<sos>");
  EXPECT_EQ(v.token(cga::kEosId), "<eos>");
  EXPECT_EQ(v.token(cga::kNumId), "NUM");
}

TEST(Vocabulary, AddIsIdempotentAndOovMapsToUnk) {
  cga::Vocabulary v;
  const int id = v.add("cat");
  EXPECT_EQ(v.add("cat"), id);
  EXPECT_EQ(v.id("cat"), id);
  EXPECT_EQ(v.id("dog"), cga::kUnkId);
  EXPECT_THROW(v.token(999), std::out_of_range);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  cga::Vocabulary v;
  v.add("alpha");
  v.add("beta");
  const std::string path = tmp_path("vocab_roundtrip.txt");
  v.save(path);
  const cga::Vocabulary back = cga::Vocabulary::load(path);
  EXPECT_TRUE(v == back);
  std::remove(path.c_str());
}

TEST(Vocabulary, LoadRejectsCorruptedSpecials) {
  const std::string path = tmp_path("vocab_bad_specials.txt");
  std::ofstream(path) << "<pad>\n<unk>\nWRONG\n<eos>\nNUM\n";
  EXPECT_THROW(cga::Vocabulary::load(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST(BuildVocabulary, MinFreqFiltersRareTokens) {
  const std::vector<std::vector<std::string>> corpus = {
      {"the", "cat"}, {"the", "dog"}, {"a", "cat"}};
  const cga::Vocabulary v = cga::build_vocabulary(corpus, 2);
  EXPECT_TRUE(v.contains("the"));
  EXPECT_TRUE(v.contains("cat"));
  EXPECT_FALSE(v.contains("dog"));
  EXPECT_FALSE(v.contains("a"));
  // First-occurrence order after the specials.
  EXPECT_EQ(v.id("the"), 5);
  EXPECT_EQ(v.id("cat"), 6);
}

TEST(BuildVocabulary, EmptyCorpusIsAnError) {
  EXPECT_THROW(cga::build_vocabulary({}, 1), std::invalid_argument);
}

TEST(EncodeSentence, FramesWithSosEosAndTruncates) {
  cga::Vocabulary v;
  const int cat = v.add("cat");
  const auto ids = cga::encode_sentence({"cat", "dog"}, v);
  EXPECT_EQ(ids, (std::vector<int>{cga::kSosId, cat, cga::kUnkId, cga::kEosId}));

  std::vector<std::string> long_sent(30, "cat");
  const auto truncated = cga::encode_sentence(long_sent, v, 20);
  EXPECT_EQ(truncated.size(), 22u);
  EXPECT_EQ(truncated.front(), cga::kSosId);
  EXPECT_EQ(truncated.back(), cga::kEosId);
}

TEST(DecodeSentence, StripsFramingAndStopsAtEos) {
  cga::Vocabulary v;
  const int cat = v.add("cat");
  const int dog = v.add("dog");
  const std::vector<int> ids = {cga::kSosId, cat, cga::kEosId, dog};
  EXPECT_EQ(cga::decode_sentence(ids, v), (std::vector<std::string>{"cat"}));
  const std::vector<int> padded = {cga::kSosId, dog, cga::kPadId, cat, cga::kEosId};
  EXPECT_EQ(cga::decode_sentence(padded, v), (std::vector<std::string>{"dog", "cat"}));
}

TEST(RawJsonl, ReadsTextRatingAndLabels) {
  const std::string path = tmp_path("raw.jsonl");
  std::ofstream(path) << R"({"text": "great food", "rating": 5})" << "\n"
                      << R"({"text": "meh", "labels": {"tense": "past"}})" << "\n";
  const auto recs = cga::read_raw_jsonl(path);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].text, "great food");
  ASSERT_TRUE(recs[0].rating.has_value());
  EXPECT_EQ(*recs[0].rating, 5);
  EXPECT_FALSE(recs[1].rating.has_value());
  EXPECT_EQ(recs[1].labels.at("tense"), "past");
  std::remove(path.c_str());
}

TEST(RawJsonl, BadJsonReportsLineNumber) {
  const std::string path = tmp_path("raw_bad.jsonl");
  std::ofstream(path) << R"({"text": "ok"})" << "\n" << "{broken\n";
  try {
    cga::read_raw_jsonl(path);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  std::remove(path.c_str());
}

TEST(LabeledJsonl, RoundTripPreservesTokensAndLabels) {
  const std::vector<cga::LabeledSentence> sents = {
      {{"i", "loved", "it", "."}, {{"tense", "past"}, {"sentiment", "positive"}}},
      {{"we", "hate", "films", "."}, {{"tense", "present"}, {"sentiment", "negative"}}},
  };
  const std::string path = tmp_path("labeled.jsonl");
  cga::write_labeled_jsonl(sents, path);
  const auto back = cga::read_labeled_jsonl(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].tokens, sents[0].tokens);
  EXPECT_EQ(back[1].labels, sents[1].labels);
  std::remove(path.c_str());
}

TEST(EncodeCorpus, BuildsExamplesAndChecksLabels) {
  const cga::AttributeSchema schema({{"sentiment", {"positive", "negative"}}});
  cga::Vocabulary v;
  v.add("good");
  const std::vector<cga::LabeledSentence> sents = {{{"good"}, {{"sentiment", "positive"}}}};
  const auto corpus = cga::encode_corpus(sents, schema, v);
  ASSERT_EQ(corpus.examples.size(), 1u);
  EXPECT_EQ(corpus.examples[0].tokens,
            (std::vector<int>{cga::kSosId, v.id("good"), cga::kEosId}));
  EXPECT_EQ(corpus.examples[0].attributes.labels, (std::vector<int>{0}));
  EXPECT_EQ(corpus.examples[0].raw_text, "good");

  const std::vector<cga::LabeledSentence> missing = {{{"good"}, {}}};
  EXPECT_THROW(cga::encode_corpus(missing, schema, v), std::runtime_error);
}

TEST(MakeSplits, PartitionIsDisjointExhaustiveAndSeeded) {
  std::vector<int> items(100);
  for (int i = 0; i < 100; ++i) items[i] = i;
  const auto s = cga::make_splits(items, 0.8, 0.1, 0.1, 42);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.valid.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.valid.begin(), s.valid.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 100u);

  const auto again = cga::make_splits(items, 0.8, 0.1, 0.1, 42);
  EXPECT_EQ(s.train, again.train);
  const auto other = cga::make_splits(items, 0.8, 0.1, 0.1, 43);
  EXPECT_NE(s.train, other.train);

  EXPECT_THROW(cga::make_splits(items, 0.5, 0.1, 0.1, 1), std::invalid_argument);
}

}  // namespace
