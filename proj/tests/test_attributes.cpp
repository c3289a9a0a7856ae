#include "cga/attributes.hpp"

#include <gtest/gtest.h>

namespace {

cga::AttributeSchema two_attr_schema() {
  return cga::AttributeSchema({{"tense", {"present", "past"}},
                               {"person", {"singular", "plural", "balanced"}}});
}

TEST(AttributeSchema, ValidationRejectsDegenerateSchemas) {
  cga::AttributeSchema empty;
  EXPECT_THROW(empty.validate(), std::invalid_argument);
  const std::vector<cga::AttributeSchema::Attribute> one_value = {{"a", {"only"}}};
  EXPECT_THROW(cga::AttributeSchema{one_value}, std::invalid_argument);
}

TEST(AttributeSchema, OneHotLayoutIsConcatenatedBlocks) {
  const auto s = two_attr_schema();
  EXPECT_EQ(s.size(), 2);
  EXPECT_EQ(s.onehot_dim(), 5);
  EXPECT_EQ(s.block_offset(0), 0);
  EXPECT_EQ(s.block_offset(1), 2);
}

TEST(AttributeSchema, LookupsReturnMinusOneOnMiss) {
  const auto s = two_attr_schema();
  EXPECT_EQ(s.attribute_index("person"), 1);
  EXPECT_EQ(s.attribute_index("mood"), -1);
  EXPECT_EQ(s.value_index(0, "past"), 1);
  EXPECT_EQ(s.value_index(0, "future"), -1);
}

TEST(AttributeSchema, CombinationsEnumerateRowMajor) {
  const auto s = two_attr_schema();
  EXPECT_EQ(s.combination_count(), 6);
  EXPECT_EQ(s.combination(0), (std::vector<int>{0, 0}));
  EXPECT_EQ(s.combination(1), (std::vector<int>{0, 1}));
  EXPECT_EQ(s.combination(2), (std::vector<int>{0, 2}));
  EXPECT_EQ(s.combination(3), (std::vector<int>{1, 0}));
  EXPECT_EQ(s.combination(5), (std::vector<int>{1, 2}));
}

TEST(AttributeSchema, JsonRoundTripPreservesOrder) {
  const auto s = two_attr_schema();
  const auto j = s.to_json();
  const auto back = cga::AttributeSchema::from_json(j);
  EXPECT_TRUE(s == back);
  EXPECT_EQ(j[0]["name"], "tense");
  EXPECT_EQ(j[1]["values"][2], "balanced");
}

TEST(AttributeVector, OneHotPlacesOnesAtBlockOffsets) {
  const auto s = two_attr_schema();
  const auto av = cga::attribute_vector_from_indices({1, 2}, s);
  EXPECT_EQ(av.onehot, (std::vector<float>{0, 1, 0, 0, 1}));
  EXPECT_EQ(av.labels, (std::vector<int>{1, 2}));
}

TEST(AttributeVector, NamedConstructionMatchesIndexConstruction) {
  const auto s = two_attr_schema();
  const auto a = cga::make_attribute_vector({"past", "balanced"}, s);
  const auto b = cga::attribute_vector_from_indices({1, 2}, s);
  EXPECT_EQ(a.onehot, b.onehot);
  EXPECT_EQ(cga::attribute_labels(a, s), (std::vector<std::string>{"past", "balanced"}));
}

TEST(AttributeVector, ErrorsNameTheOffendingAttribute) {
  const auto s = two_attr_schema();
  EXPECT_THROW(cga::attribute_vector_from_indices({0}, s), std::invalid_argument);
  EXPECT_THROW(cga::attribute_vector_from_indices({0, 3}, s), std::invalid_argument);
  try {
    cga::make_attribute_vector({"present", "dual"}, s);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("person"), std::string::npos);
  }
}

}  // namespace
