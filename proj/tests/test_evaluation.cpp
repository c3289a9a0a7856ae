#include "cga/evaluation.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <string>
#include <vector>

#include "cga/toy.hpp"

namespace {

std::string temp_path(const std::string& name) {
  return ::testing::TempDir() + name;
}

cga::AttributeSchema two_bit_schema() {
  cga::AttributeSchema schema;
  schema.attributes = {{"tense", {"present", "past"}},
                       {"sentiment", {"positive", "negative"}}};
  return schema;
}

cga::LabeledCorpus toy_corpus(int n, std::uint64_t seed) {
  const auto schema = two_bit_schema();
  const auto sentences = cga::make_toy_sentences(n, schema, seed, /*compact=*/true);
  return cga::encode_corpus(sentences, schema, cga::toy_vocabulary(/*compact=*/true));
}

cga::TextCnnConfig small_cnn_config() {
  cga::TextCnnConfig cfg;
  cfg.emb_dim = 24;
  cfg.windows = {2, 3};
  cfg.filters = 12;
  cfg.epochs = 10;
  cfg.batch_size = 16;
  cfg.lr = 3e-3;
  cfg.valid_frac = 0.15;
  cfg.seed = 5;
  return cfg;
}

TEST(TextCnn, LearnsToySentiment) {
  const auto corpus = toy_corpus(240, 51);
  const auto vocab = cga::toy_vocabulary(true);
  const auto cnn = cga::train_text_cnn(corpus, corpus.schema.attribute_index("sentiment"),
                                       vocab.size(), small_cnn_config());
  EXPECT_GE(cnn.held_out_accuracy, 0.95) << "held-out accuracy " << cnn.held_out_accuracy;

  // Deterministic prediction on a fixed sentence.
  const auto& ex = corpus.examples.front();
  EXPECT_EQ(cnn.predict(ex.tokens), cnn.predict(ex.tokens));
}

TEST(TextCnn, RejectsSingleClassCorpus) {
  auto corpus = toy_corpus(40, 52);
  const int k = corpus.schema.attribute_index("sentiment");
  for (auto& ex : corpus.examples) {
    ex.attributes.labels[k] = 0;
    // Rebuild the one-hot block to stay consistent with the label.
    ex.attributes = cga::attribute_vector_from_indices(ex.attributes.labels, corpus.schema);
  }
  EXPECT_THROW(
      cga::train_text_cnn(corpus, k, cga::toy_vocabulary(true).size(), small_cnn_config()),
      std::invalid_argument);
}

TEST(TextCnn, PadsShortSentences) {
  const auto corpus = toy_corpus(40, 53);
  const auto vocab = cga::toy_vocabulary(true);
  auto cfg = small_cnn_config();
  cfg.epochs = 1;
  const auto cnn = cga::train_text_cnn(corpus, 0, vocab.size(), cfg);
  // Shorter than the largest window; prediction must still work.
  const std::vector<int> tiny = {cga::kSosId, 7, cga::kEosId};
  EXPECT_NO_THROW(cnn.predict(tiny));
  EXPECT_GE(cnn.prepare(tiny).size(), 3u);
}

TEST(AttributeMatching, PerfectAndHalfOracles) {
  const auto corpus = toy_corpus(40, 54);
  const auto vocab = cga::toy_vocabulary(true);

  // Reads the requested label straight from a side table keyed by text.
  std::map<std::string, std::vector<int>> truth;
  for (const auto& ex : corpus.examples)
    truth[cga::join_tokens(cga::decode_sentence(ex.tokens, vocab))] = ex.attributes.labels;

  int flip = 0;
  const cga::Oracle perfect = [&](const std::vector<std::string>& toks) {
    return cga::OraclePrediction{truth.at(cga::join_tokens(toks))[0], false};
  };
  const cga::Oracle half = [&](const std::vector<std::string>& toks) {
    const int label = truth.at(cga::join_tokens(toks))[1];
    return cga::OraclePrediction{(flip++ % 2) ? label : 1 - label, false};
  };

  const auto rows = cga::attribute_matching(corpus, vocab, {perfect, half}, 4);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].mean, 1.0);
  EXPECT_DOUBLE_EQ(rows[0].stddev, 0.0);
  EXPECT_EQ(rows[0].evaluated, 40);
  EXPECT_EQ(rows[0].abstained, 0);
  EXPECT_DOUBLE_EQ(rows[1].mean, 0.5);

  EXPECT_THROW(cga::attribute_matching(corpus, vocab, {perfect}, 4), std::invalid_argument);
}

TEST(AttributeMatching, AbstentionsLeaveTheDenominator) {
  const auto corpus = toy_corpus(40, 55);
  const auto vocab = cga::toy_vocabulary(true);

  // Abstains on every odd sentence, correct on the rest.
  std::map<std::string, std::vector<int>> truth;
  for (const auto& ex : corpus.examples)
    truth[cga::join_tokens(cga::decode_sentence(ex.tokens, vocab))] = ex.attributes.labels;
  int seen = 0;
  const cga::Oracle flaky = [&](const std::vector<std::string>& toks) {
    if ((seen++ % 4) >= 2) return cga::OraclePrediction{};
    return cga::OraclePrediction{truth.at(cga::join_tokens(toks))[0], false};
  };
  const cga::Oracle steady = [&](const std::vector<std::string>& toks) {
    return cga::OraclePrediction{truth.at(cga::join_tokens(toks))[1], false};
  };

  // Each sentence is probed once per attribute, in order, so the flaky
  // oracle abstains on exactly half, alternating in pairs so both splits
  // keep usable sentences.
  const auto rows = cga::attribute_matching(corpus, vocab, {flaky, steady}, 2);
  EXPECT_DOUBLE_EQ(rows[0].mean, 1.0);
  EXPECT_EQ(rows[0].abstained, 20);
  EXPECT_EQ(rows[0].evaluated, 20);
  EXPECT_EQ(rows[1].evaluated, 40);

  const auto csv = cga::attribute_match_csv(rows);
  EXPECT_NE(csv.find("attribute,mean,std,evaluated,abstained"), std::string::npos);
  EXPECT_NE(csv.find("tense,1.000000"), std::string::npos);
}

TEST(AttributeMatching, RuleOracleAgreesWithCorpusLabels) {
  const auto corpus = toy_corpus(60, 56);
  const auto vocab = cga::toy_vocabulary(true);
  const auto tense_oracle = cga::rule_oracle(cga::toy_tagger(true), cga::toy_sentiment_lexicon(true),
                                             corpus.schema.attributes[0]);
  const auto sent_oracle = cga::rule_oracle(cga::toy_tagger(true), cga::toy_sentiment_lexicon(true),
                                            corpus.schema.attributes[1]);
  // The toy corpus is generated to agree with its own labelers, so the rule
  // oracles match everywhere.
  const auto rows = cga::attribute_matching(corpus, vocab, {tense_oracle, sent_oracle}, 5);
  EXPECT_DOUBLE_EQ(rows[0].mean, 1.0);
  EXPECT_DOUBLE_EQ(rows[1].mean, 1.0);
}

TEST(Embedder, HashedVectorsAreUnitNormAndStable) {
  const cga::HashedWordEmbedder emb(32, 3);
  cga::Vec<float> a(32), b(32), c(32);
  ASSERT_TRUE(emb.embed({"good", "cake"}, &a));
  ASSERT_TRUE(emb.embed({"good", "cake"}, &b));
  EXPECT_NEAR(a.norm(), 1.0f, 1e-6f);
  EXPECT_TRUE(a == b);

  // Mean pooling makes token multiplicity of a one-word sentence irrelevant.
  ASSERT_TRUE(emb.embed({"good"}, &a));
  ASSERT_TRUE(emb.embed({"good", "good"}, &c));
  EXPECT_NEAR(a.dot(c), 1.0f, 1e-6f);

  EXPECT_FALSE(emb.embed({}, &a));
}

TEST(Embedder, WordTableLoadsAndFlagsUnknown) {
  const auto path = temp_path("vectors.txt");
  {
    std::ofstream os(path);
    os << "good 1 0 0\n";
    os << "bad 0 1 0\n";
    os << "cake 0 0 2\n";
  }
  const cga::WordTableEmbedder emb(path);
  EXPECT_EQ(emb.dim(), 3);

  cga::Vec<float> v(3);
  ASSERT_TRUE(emb.embed({"good", "zzz"}, &v));  // unknown word skipped
  EXPECT_NEAR(v[0], 1.0f, 1e-6f);
  EXPECT_FALSE(emb.embed({"zzz", "qqq"}, &v));

  const auto bad = temp_path("vectors_bad.txt");
  {
    std::ofstream os(bad);
    os << "good 1 0 0\n";
    os << "bad 0 1\n";
  }
  EXPECT_THROW(cga::WordTableEmbedder{bad}, std::runtime_error);
  EXPECT_THROW(cga::WordTableEmbedder{temp_path("vectors_missing.txt")}, std::runtime_error);
}

TEST(Similarity, OrthogonalEmbeddingsGiveIdentity) {
  cga::Mat<float> emb(2, 2);
  emb << 1, 0, 0, 1;
  const auto sim = cga::cosine_similarity_matrix(emb);
  EXPECT_NEAR(sim(0, 0), 1.0f, 1e-6f);
  EXPECT_NEAR(sim(1, 1), 1.0f, 1e-6f);
  EXPECT_NEAR(sim(0, 1), 0.0f, 1e-6f);
  EXPECT_NEAR(sim(1, 0), 0.0f, 1e-6f);
}

TEST(Similarity, ReportIsSymmetricWithUnitDiagonalAndBlocks) {
  const auto corpus = toy_corpus(60, 57);
  const auto vocab = cga::toy_vocabulary(true);
  const cga::HashedWordEmbedder emb(48, 9);
  const auto report = cga::similarity_report(corpus, vocab, 1, emb);

  const long n = report.matrix.rows();
  ASSERT_EQ(n, 60);
  EXPECT_EQ(report.excluded, 0);
  ASSERT_EQ(report.class_sizes.size(), 2u);
  EXPECT_EQ(report.class_sizes[0] + report.class_sizes[1], n);
  EXPECT_EQ(report.class_names[0], "positive");

  for (long i = 0; i < n; ++i) {
    EXPECT_NEAR(report.matrix(i, i), 1.0f, 1e-6f);
    for (long j = i + 1; j < n; ++j)
      EXPECT_NEAR(report.matrix(i, j), report.matrix(j, i), 1e-6f);
  }

  // Rows inside one class keep corpus order (stable grouping).
  for (std::size_t r = 1; r < report.row_example.size(); ++r) {
    const long block = r < static_cast<std::size_t>(report.class_sizes[0]) ? 0 : 1;
    const std::size_t first_of_block =
        block == 0 ? 0 : static_cast<std::size_t>(report.class_sizes[0]);
    if (r > first_of_block) {
      EXPECT_LT(report.row_example[r - 1], report.row_example[r]);
    }
  }
}

TEST(Similarity, PermutedCorpusGivesPermutedMatrix) {
  const auto corpus = toy_corpus(24, 58);
  const auto vocab = cga::toy_vocabulary(true);
  const cga::HashedWordEmbedder emb(32, 11);
  const auto base = cga::similarity_report(corpus, vocab, 0, emb);

  cga::LabeledCorpus shuffled;
  shuffled.schema = corpus.schema;
  cga::Rng rng(4);
  auto order = rng.permutation(static_cast<int>(corpus.examples.size()));
  for (int idx : order) shuffled.examples.push_back(corpus.examples[idx]);
  const auto mixed = cga::similarity_report(shuffled, vocab, 0, emb);

  // row_example maps rows back to corpus indices; aligned through it the two
  // matrices must agree entry for entry.
  std::map<long, long> base_row, mixed_row;
  for (std::size_t r = 0; r < base.row_example.size(); ++r)
    base_row[base.row_example[r]] = static_cast<long>(r);
  for (std::size_t r = 0; r < mixed.row_example.size(); ++r)
    mixed_row[order[mixed.row_example[r]]] = static_cast<long>(r);
  ASSERT_EQ(base_row.size(), mixed_row.size());
  for (const auto& [ex_i, ri] : base_row)
    for (const auto& [ex_j, rj] : base_row)
      EXPECT_NEAR(base.matrix(ri, rj), mixed.matrix(mixed_row.at(ex_i), mixed_row.at(ex_j)),
                  1e-6f);
}

TEST(ClusterScore, IdenticalAndOrthogonalNeighbors) {
  cga::Mat<float> emb(3, 4);
  emb.col(0) << 1, 0, 0;
  emb.col(1) << 1, 0, 0;
  emb.col(2) << 1, 0, 0;
  emb.col(3) << 0, 1, 0;
  const auto sim = cga::cosine_similarity_matrix(emb);

  const auto same = cga::cluster_similarity_score(sim, 0, {0, 1, 2}, 2);
  EXPECT_DOUBLE_EQ(same.score, 1.0);
  EXPECT_EQ(same.k_used, 2);
  EXPECT_FALSE(same.k_lowered);

  const auto ortho = cga::cluster_similarity_score(sim, 3, {0, 1, 2}, 3);
  EXPECT_DOUBLE_EQ(ortho.score, 0.0);

  const auto lowered = cga::cluster_similarity_score(sim, 0, {0, 1}, 50);
  EXPECT_EQ(lowered.k_used, 1);
  EXPECT_TRUE(lowered.k_lowered);

  EXPECT_THROW(cga::cluster_similarity_score(sim, 0, {0}, 5), std::invalid_argument);
  EXPECT_THROW(cga::cluster_similarity_score(sim, 0, {0, 1}, 0), std::invalid_argument);
}

TEST(ClusterScore, AddingStrongNeighborNeverLowersTheScore) {
  cga::Mat<float> sim(4, 4);
  sim << 1.0f, 0.9f, 0.2f, 0.95f,
         0.9f, 1.0f, 0.1f, 0.8f,
         0.2f, 0.1f, 1.0f, 0.3f,
         0.95f, 0.8f, 0.3f, 1.0f;
  const auto before = cga::cluster_similarity_score(sim, 0, {1, 2}, 2);
  const auto after = cga::cluster_similarity_score(sim, 0, {1, 2, 3}, 2);
  EXPECT_GE(after.score, before.score);
}

TEST(Similarity, HistogramCountsPairsOnce) {
  cga::SimilarityReport report;
  cga::Mat<float> emb(2, 4);
  emb.col(0) << 1, 0;
  emb.col(1) << 1, 0;
  emb.col(2) << 0, 1;
  emb.col(3) << 0, 1;
  report.matrix = cga::cosine_similarity_matrix(emb);
  report.class_names = {"neg", "pos"};
  report.class_sizes = {2, 2};

  const auto j = cga::similarity_histograms(report, 0.5);
  ASSERT_EQ(j["blocks"].size(), 3u);  // nn, np, pp
  long nn_pairs = j["blocks"][0]["pairs"].get<long>();
  long np_pairs = j["blocks"][1]["pairs"].get<long>();
  long pp_pairs = j["blocks"][2]["pairs"].get<long>();
  EXPECT_EQ(nn_pairs, 1);
  EXPECT_EQ(np_pairs, 4);
  EXPECT_EQ(pp_pairs, 1);
  EXPECT_DOUBLE_EQ(j["blocks"][0]["mean"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["blocks"][1]["mean"].get<double>(), 0.0);
  EXPECT_EQ(j["bin_width"].get<double>(), 0.5);
}

TEST(Probe, ReadsOneHotCodesPerfectly) {
  const int n = 80;
  cga::Mat<float> z = cga::Mat<float>::Zero(2, n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2;
    z(labels[i], i) = 1.0f;
  }
  const auto probe = cga::train_logistic_probe(z, labels, 2);
  EXPECT_DOUBLE_EQ(probe.accuracy, 1.0);
}

TEST(Probe, RandomCodesScoreNearChance) {
  const int n = 400;
  cga::Rng rng(6);
  cga::Mat<float> z(4, n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i % 2;
    for (int d = 0; d < 4; ++d) z(d, i) = static_cast<float>(rng.normal());
  }
  const auto probe = cga::train_logistic_probe(z, labels, 2);
  EXPECT_GE(probe.accuracy, 0.3);
  EXPECT_LE(probe.accuracy, 0.7);
}

TEST(Probe, PerAttributeReportOnModelCodes) {
  const auto corpus = toy_corpus(80, 59);
  cga::ModelConfig config;
  config.vocab = cga::toy_vocabulary(true).size();
  config.emb_dim = 6;
  config.hidden = 8;
  config.d_z = 4;
  config.disc_hidden = 4;
  config.head_sizes = {2, 2};
  const auto model = cga::ModelState<float>::init(config, corpus.schema, 13);

  const auto rows = cga::probe_disentanglement(model, corpus);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].attribute, "tense");
  for (const auto& r : rows) {
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
  }
}

}  // namespace
