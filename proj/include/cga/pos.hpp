#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cga {

// The subset of Penn Treebank tags the attribute rules consume. Everything
// else collapses to OTHER.
enum class PosTag { VBP, VBZ, VBD, NN, NNS, PRP, OTHER };

inline const char* pos_tag_name(PosTag t) {
  switch (t) {
    case PosTag::VBP: return "VBP";
    case PosTag::VBZ: return "VBZ";
    case PosTag::VBD: return "VBD";
    case PosTag::NN: return "NN";
    case PosTag::NNS: return "NNS";
    case PosTag::PRP: return "PRP";
    case PosTag::OTHER: return "OTHER";
  }
  return "OTHER";
}

inline PosTag pos_tag_from_name(const std::string& name) {
  if (name == "VBP") return PosTag::VBP;
  if (name == "VBZ") return PosTag::VBZ;
  if (name == "VBD") return PosTag::VBD;
  if (name == "NN") return PosTag::NN;
  if (name == "NNS") return PosTag::NNS;
  if (name == "PRP") return PosTag::PRP;
  return PosTag::OTHER;
}

class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual std::vector<PosTag> tag(const std::vector<std::string>& tokens) const = 0;
};

// Lexicon lookup with two fallback suffix rules for unknown words: -ed is
// treated as a past-tense verb and -s as a plural noun. Good enough for the
// closed toy vocabularies; real corpora should go through an external tagger
// via the tagged-file exchange format below.
class RuleTagger : public Tagger {
 public:
  RuleTagger() = default;
  explicit RuleTagger(std::unordered_map<std::string, PosTag> lexicon)
      : lexicon_(std::move(lexicon)) {}

  void add(const std::string& token, PosTag tag) { lexicon_[token] = tag; }

  std::vector<PosTag> tag(const std::vector<std::string>& tokens) const override {
    std::vector<PosTag> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
      auto it = lexicon_.find(tok);
      if (it != lexicon_.end()) {
        out.push_back(it->second);
      } else if (ends_with(tok, "ed") && tok.size() > 3) {
        out.push_back(PosTag::VBD);
      } else if (ends_with(tok, "s") && tok.size() > 3 && !ends_with(tok, "ss")) {
        out.push_back(PosTag::NNS);
      } else {
        out.push_back(PosTag::OTHER);
      }
    }
    return out;
  }

 private:
  static bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  }

  std::unordered_map<std::string, PosTag> lexicon_;
};

// Exchange format for externally produced tags: one "token<TAB>tag" line per
// token, sentences separated by blank lines.
inline void write_tagged_file(const std::vector<std::vector<std::string>>& sentences,
                              const std::vector<std::vector<PosTag>>& tags,
                              const std::string& path) {
  if (sentences.size() != tags.size())
    throw std::invalid_argument("write_tagged_file: sentence/tag count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].size() != tags[i].size())
      throw std::invalid_argument("write_tagged_file: token/tag length mismatch at sentence " +
                                  std::to_string(i));
    for (std::size_t j = 0; j < sentences[i].size(); ++j)
      out << sentences[i][j] << '\t' << pos_tag_name(tags[i][j]) << "\n";
    out << "\n";
  }
}

struct TaggedFile {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::vector<PosTag>> tags;
};

inline TaggedFile read_tagged_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  TaggedFile out;
  std::vector<std::string> toks;
  std::vector<PosTag> tags;
  std::string line;
  auto flush = [&]() {
    if (!toks.empty()) {
      out.sentences.push_back(toks);
      out.tags.push_back(tags);
      toks.clear();
      tags.clear();
    }
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected token<TAB>tag");
    toks.push_back(line.substr(0, tab));
    tags.push_back(pos_tag_from_name(line.substr(tab + 1)));
  }
  flush();
  return out;
}

// Serves precomputed tags keyed by the exact token sequence. Lets an external
// tagger's output stand in wherever a Tagger is expected.
class FileTagger : public Tagger {
 public:
  explicit FileTagger(const TaggedFile& f) {
    for (std::size_t i = 0; i < f.sentences.size(); ++i)
      table_.emplace(key(f.sentences[i]), f.tags[i]);
  }

  std::vector<PosTag> tag(const std::vector<std::string>& tokens) const override {
    auto it = table_.find(key(tokens));
    if (it == table_.end())
      throw std::runtime_error("file tagger: no tags for sentence '" + key(tokens) + "'");
    return it->second;
  }

 private:
  static std::string key(const std::vector<std::string>& tokens) {
    std::string s;
    for (const auto& t : tokens) {
      s += t;
      s += '\x1f';
    }
    return s;
  }

  std::unordered_map<std::string, std::vector<PosTag>> table_;
};

}  // namespace cga
