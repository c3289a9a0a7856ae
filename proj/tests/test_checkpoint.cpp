#include "cga/checkpoint.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <string>
#include <vector>

#include "cga/model.hpp"
#include "cga/rng.hpp"

namespace {

using Matf = cga::Mat<float>;

std::string temp_path(const std::string& name) {
  return ::testing::TempDir() + name;
}

std::string read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

cga::Checkpoint sample_checkpoint() {
  cga::Checkpoint c;
  c.meta = {{"note", "sample"}, {"count", 3}, {"ratio", 0.25}};
  Matf a(2, 3);
  a << 1.5f, -2.25f, 0.0f, 4.0f, 1e-7f, -3.5f;
  c.add_array("weights", a);
  c.add_array("bias", Matf::Constant(1, 1, 9.0f));
  return c;
}

cga::ModelState<float> sample_model(std::uint64_t seed = 5) {
  cga::AttributeSchema schema;
  schema.attributes = {{"tense", {"present", "past"}}, {"mood", {"calm", "tense", "wild"}}};
  cga::ModelConfig config;
  config.vocab = 12;
  config.emb_dim = 4;
  config.hidden = 5;
  config.d_z = 3;
  config.disc_hidden = 4;
  config.max_len = 8;
  config.head_sizes = {2, 3};
  return cga::ModelState<float>::init(config, schema, seed);
}

TEST(Checkpoint, RoundTripPreservesArraysMetaAndOrder) {
  const auto path = temp_path("ckpt_roundtrip.bin");
  const auto original = sample_checkpoint();
  cga::save_checkpoint(path, original);
  const auto loaded = cga::load_checkpoint(path);

  EXPECT_EQ(loaded.meta, original.meta);
  ASSERT_EQ(loaded.array_names, original.array_names);
  for (const auto& name : original.array_names)
    EXPECT_TRUE(loaded.array(name) == original.array(name)) << name;
}

TEST(Checkpoint, SecondSaveIsByteIdentical) {
  const auto path_a = temp_path("ckpt_bytes_a.bin");
  const auto path_b = temp_path("ckpt_bytes_b.bin");
  cga::save_checkpoint(path_a, sample_checkpoint());
  cga::save_checkpoint(path_b, cga::load_checkpoint(path_a));
  const auto bytes_a = read_bytes(path_a);
  ASSERT_FALSE(bytes_a.empty());
  EXPECT_EQ(bytes_a, read_bytes(path_b));
}

TEST(Checkpoint, RejectsForeignAndDamagedFiles) {
  const auto garbage = temp_path("ckpt_garbage.bin");
  {
    std::ofstream os(garbage, std::ios::binary);
    os << "definitely not a checkpoint";
  }
  EXPECT_THROW(cga::load_checkpoint(garbage), std::runtime_error);
  EXPECT_THROW(cga::load_checkpoint(temp_path("ckpt_missing.bin")), std::runtime_error);

  const auto valid = temp_path("ckpt_valid.bin");
  cga::save_checkpoint(valid, sample_checkpoint());
  const auto bytes = read_bytes(valid);

  const auto truncated = temp_path("ckpt_truncated.bin");
  {
    std::ofstream os(truncated, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
  }
  EXPECT_THROW(cga::load_checkpoint(truncated), std::runtime_error);

  const auto padded = temp_path("ckpt_padded.bin");
  {
    std::ofstream os(padded, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os << "extra";
  }
  EXPECT_THROW(cga::load_checkpoint(padded), std::runtime_error);
}

TEST(Checkpoint, ArrayAccessorsEnforceNamesAndShapes) {
  auto c = sample_checkpoint();
  EXPECT_THROW(c.add_array("weights", Matf::Zero(1, 1)), std::invalid_argument);
  EXPECT_THROW(c.array("absent"), std::out_of_range);
  EXPECT_NO_THROW(c.array_as<double>("weights", 2, 3));
  try {
    c.array_as<double>("weights", 3, 2);
    FAIL() << "expected dimension mismatch";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("weights"), std::string::npos);
  }
}

TEST(Checkpoint, ModelRoundTripIsExact) {
  const auto path = temp_path("ckpt_model.bin");
  const auto model = sample_model();
  cga::save_checkpoint(path, cga::checkpoint_from_model(model));
  const auto back = cga::model_from_checkpoint<float>(cga::load_checkpoint(path));

  EXPECT_TRUE(back.config == model.config);
  EXPECT_TRUE(back.schema == model.schema);
  ASSERT_EQ(back.param_names, model.param_names);
  for (const auto& name : model.param_names)
    EXPECT_TRUE(back.params.at(name) == model.params.at(name)) << name;
  for (const auto& name : model.buffer_names)
    EXPECT_TRUE(back.buffers.at(name) == model.buffers.at(name)) << name;
}

TEST(Checkpoint, ModelLoadRejectsWrongVocab) {
  const auto path = temp_path("ckpt_model_vocab.bin");
  cga::save_checkpoint(path, cga::checkpoint_from_model(sample_model()));
  auto tampered = cga::load_checkpoint(path);
  tampered.meta["model_config"]["vocab"] = 13;
  EXPECT_THROW(cga::model_from_checkpoint<float>(tampered), std::runtime_error);
}

TEST(Checkpoint, ModelLoadRejectsMissingMetadata) {
  cga::Checkpoint bare;
  bare.add_array("emb", Matf::Zero(4, 12));
  EXPECT_THROW(cga::model_from_checkpoint<float>(bare), std::runtime_error);
}

TEST(Checkpoint, LoadedModelGeneratesWithoutCorpusAccess) {
  const auto path = temp_path("ckpt_model_gen.bin");
  cga::save_checkpoint(path, cga::checkpoint_from_model(sample_model()));
  const auto model = cga::model_from_checkpoint<float>(cga::load_checkpoint(path));

  // The schema rides in the checkpoint, so an attribute vector can be built
  // from value names alone.
  const auto a = cga::make_attribute_vector({"past", "wild"}, model.schema);
  cga::Rng rng(3);
  const cga::Vec<float> z = cga::Vec<float>::Zero(3);
  const auto tokens = cga::decode_free(model, z, a, cga::DecodeMode::greedy_mode(),
                                       model.config.max_len, rng);
  EXPECT_EQ(tokens.front(), cga::kSosId);
}

}  // namespace
