#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cga/model.hpp"

namespace cga {

// Self-describing binary container: fixed magic, format version, a JSON
// header (metadata plus the array directory), then the raw array payloads as
// row-major 32-bit floats in directory order. Writing what load() returned
// reproduces the original file byte for byte.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::string> array_names;
  std::map<std::string, Mat<float>> arrays;

  void add_array(const std::string& name, Mat<float> value) {
    if (arrays.count(name) > 0)
      throw std::invalid_argument("checkpoint: duplicate array '" + name + "'");
    array_names.push_back(name);
    arrays.emplace(name, std::move(value));
  }

  bool has_array(const std::string& name) const { return arrays.count(name) > 0; }

  const Mat<float>& array(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end())
      throw std::out_of_range("checkpoint: missing array '" + name + "'");
    return it->second;
  }

  // Typed fetch with a shape contract; dimension mismatches are load errors.
  template <class S>
  Mat<S> array_as(const std::string& name, Eigen::Index rows, Eigen::Index cols) const {
    const Mat<float>& a = array(name);
    if (a.rows() != rows || a.cols() != cols)
      throw std::runtime_error("checkpoint: array '" + name + "' is " +
                               std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                               ", expected " + std::to_string(rows) + "x" +
                               std::to_string(cols));
    return a.template cast<S>();
  }
};

namespace detail {

constexpr char kCheckpointMagic[8] = {'C', 'G', 'A', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["version"] = detail::kCheckpointVersion;
  header["meta"] = ckpt.meta;
  nlohmann::json dir = nlohmann::json::array();
  for (const auto& name : ckpt.array_names) {
    const Mat<float>& a = ckpt.array(name);
    dir.push_back({{"name", name},
                   {"rows", static_cast<std::int64_t>(a.rows())},
                   {"cols", static_cast<std::int64_t>(a.cols())}});
  }
  header["arrays"] = dir;
  const std::string header_text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  detail::write_u64(os, header_text.size());
  os.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& name : ckpt.array_names) {
    const Mat<float>& a = ckpt.array(name);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const float v = a(i, j);
        char buf[4];
        std::memcpy(buf, &v, 4);
        os.write(buf, 4);
      }
    }
  }
  if (!os) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, detail::kCheckpointMagic, 8) != 0)
    throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
  const std::uint64_t header_len = detail::read_u64(is);
  std::string header_text(header_len, '\0');
  is.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!is) throw std::runtime_error("checkpoint: truncated header in '" + path + "'");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: bad header in '" + path + "': " + e.what());
  }
  const auto version = header.at("version").get<std::uint32_t>();
  if (version != detail::kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version) +
                             " in '" + path + "'");

  Checkpoint ckpt;
  ckpt.meta = header.at("meta");
  for (const auto& entry : header.at("arrays")) {
    const auto name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<std::int64_t>();
    const auto cols = entry.at("cols").get<std::int64_t>();
    if (rows <= 0 || cols <= 0)
      throw std::runtime_error("checkpoint: bad shape for array '" + name + "'");
    Mat<float> a(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
      for (std::int64_t j = 0; j < cols; ++j) {
        char buf[4];
        is.read(buf, 4);
        if (!is)
          throw std::runtime_error("checkpoint: truncated payload for array '" + name + "'");
        float v;
        std::memcpy(&v, buf, 4);
        a(i, j) = v;
      }
    }
    ckpt.add_array(name, std::move(a));
  }
  // Trailing bytes mean the directory and payload disagree.
  is.peek();
  if (!is.eof()) throw std::runtime_error("checkpoint: trailing bytes in '" + path + "'");
  return ckpt;
}

// Model bridging. Parameters and buffers are stored under their own names;
// the model config and attribute schema ride in the metadata so generation
// needs no corpus access.

template <class S>
void add_model_to_checkpoint(Checkpoint& ckpt, const ModelState<S>& state) {
  ckpt.meta["model_config"] = state.config.to_json();
  ckpt.meta["attribute_schema"] = state.schema.to_json();
  for (const auto& name : state.param_names)
    ckpt.add_array(name, state.params.at(name).template cast<float>());
  for (const auto& name : state.buffer_names)
    ckpt.add_array(name, state.buffers.at(name).template cast<float>());
}

template <class S>
Checkpoint checkpoint_from_model(const ModelState<S>& state) {
  Checkpoint ckpt;
  add_model_to_checkpoint(ckpt, state);
  return ckpt;
}

template <class S>
ModelState<S> model_from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.meta.contains("model_config") || !ckpt.meta.contains("attribute_schema"))
    throw std::runtime_error("checkpoint: missing model config or attribute schema");
  const ModelConfig config = ModelConfig::from_json(ckpt.meta.at("model_config"));
  const AttributeSchema schema = AttributeSchema::from_json(ckpt.meta.at("attribute_schema"));
  // Seed value is irrelevant: every parameter is overwritten below.
  ModelState<S> state = ModelState<S>::init(config, schema, 0);
  for (const auto& name : state.param_names)
    state.params.at(name) =
        ckpt.array_as<S>(name, state.params.at(name).rows(), state.params.at(name).cols());
  for (const auto& name : state.buffer_names)
    state.buffers.at(name) =
        ckpt.array_as<S>(name, state.buffers.at(name).rows(), state.buffers.at(name).cols());
  return state;
}

}  // namespace cga
