#pragma once

#include <json.hpp>

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cga {

// K categorical attributes with a fixed, persisted order. The order defines
// the layout of the concatenated one-hot encoding, so it must never be
// re-derived from an unordered container.
struct AttributeSchema {
  struct Attribute {
    std::string name;
    std::vector<std::string> values;
  };

  std::vector<Attribute> attributes;

  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<Attribute> attrs) : attributes(std::move(attrs)) {
    validate();
  }

  void validate() const {
    if (attributes.empty()) throw std::invalid_argument("schema: needs at least one attribute");
    for (const auto& a : attributes) {
      if (a.values.size() < 2)
        throw std::invalid_argument("schema: attribute '" + a.name + "' needs >= 2 values");
    }
  }

  int size() const { return static_cast<int>(attributes.size()); }

  int onehot_dim() const {
    int d = 0;
    for (const auto& a : attributes) d += static_cast<int>(a.values.size());
    return d;
  }

  int block_offset(int attr) const {
    int off = 0;
    for (int k = 0; k < attr; ++k) off += static_cast<int>(attributes[k].values.size());
    return off;
  }

  int attribute_index(const std::string& name) const {
    for (int k = 0; k < size(); ++k)
      if (attributes[k].name == name) return k;
    return -1;
  }

  // Index of `value` within attribute k, or -1.
  int value_index(int attr, const std::string& value) const {
    const auto& vals = attributes[attr].values;
    for (int i = 0; i < static_cast<int>(vals.size()); ++i)
      if (vals[i] == value) return i;
    return -1;
  }

  // Number of attribute combinations (product of value-set sizes).
  long combination_count() const {
    long n = 1;
    for (const auto& a : attributes) n *= static_cast<long>(a.values.size());
    return n;
  }

  // Enumerates combination `idx` in row-major order (last attribute fastest).
  std::vector<int> combination(long idx) const {
    std::vector<int> labels(size());
    for (int k = size() - 1; k >= 0; --k) {
      const long vk = static_cast<long>(attributes[k].values.size());
      labels[k] = static_cast<int>(idx % vk);
      idx /= vk;
    }
    return labels;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : attributes)
      arr.push_back({{"name", a.name}, {"values", a.values}});
    return arr;
  }

  static AttributeSchema from_json(const nlohmann::json& j) {
    std::vector<Attribute> attrs;
    for (const auto& a : j)
      attrs.push_back({a.at("name").get<std::string>(),
                       a.at("values").get<std::vector<std::string>>()});
    return AttributeSchema(std::move(attrs));
  }

  bool operator==(const AttributeSchema& o) const {
    if (attributes.size() != o.attributes.size()) return false;
    for (std::size_t k = 0; k < attributes.size(); ++k)
      if (attributes[k].name != o.attributes[k].name ||
          attributes[k].values != o.attributes[k].values)
        return false;
    return true;
  }
};

// One value index per attribute plus the concatenated one-hot blocks
// (symbol a in the decoder conditioning).
struct AttributeVector {
  std::vector<int> labels;
  std::vector<float> onehot;
};

inline AttributeVector attribute_vector_from_indices(const std::vector<int>& labels,
                                                     const AttributeSchema& schema) {
  if (static_cast<int>(labels.size()) != schema.size())
    throw std::invalid_argument("attribute vector: label count != schema size");
  AttributeVector av;
  av.labels = labels;
  av.onehot.assign(schema.onehot_dim(), 0.0f);
  for (int k = 0; k < schema.size(); ++k) {
    const int nk = static_cast<int>(schema.attributes[k].values.size());
    if (labels[k] < 0 || labels[k] >= nk)
      throw std::invalid_argument("attribute vector: label index out of range for '" +
                                  schema.attributes[k].name + "'");
    av.onehot[schema.block_offset(k) + labels[k]] = 1.0f;
  }
  return av;
}

inline AttributeVector make_attribute_vector(const std::vector<std::string>& labels,
                                             const AttributeSchema& schema) {
  if (static_cast<int>(labels.size()) != schema.size())
    throw std::invalid_argument("attribute vector: label count != schema size");
  std::vector<int> idx(schema.size());
  for (int k = 0; k < schema.size(); ++k) {
    idx[k] = schema.value_index(k, labels[k]);
    if (idx[k] < 0)
      throw std::invalid_argument("attribute vector: value '" + labels[k] +
                                  "' not in attribute '" + schema.attributes[k].name + "'");
  }
  return attribute_vector_from_indices(idx, schema);
}

inline std::vector<std::string> attribute_labels(const AttributeVector& av,
                                                 const AttributeSchema& schema) {
  std::vector<std::string> out(schema.size());
  for (int k = 0; k < schema.size(); ++k)
    out[k] = schema.attributes[k].values[av.labels[k]];
  return out;
}

}  // namespace cga
