#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cga/attributes.hpp"
#include "cga/corpus.hpp"
#include "cga/model.hpp"
#include "cga/rng.hpp"

namespace cga {

// Latent prior draws, one standard-normal column per requested code.
inline Mat<float> sample_prior(int n, int d_z, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_prior: n must be >= 1");
  if (d_z < 1) throw std::invalid_argument("sample_prior: d_z must be >= 1");
  Mat<float> z(d_z, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < d_z; ++i) z(i, j) = static_cast<float>(rng.normal());
  return z;
}

// Decode one latent code under the requested attributes. The stored labels
// are the request, not a reading of the produced text; downstream consumers
// treat them as ground truth.
inline LabeledExample generate(const ModelState<float>& state, const Vec<float>& z,
                               const AttributeVector& attrs, DecodeMode mode, Rng& rng) {
  state.check_finite();
  LabeledExample ex;
  ex.tokens = decode_free(state, z, attrs, mode, state.config.max_len, rng);
  ex.attributes = attrs;
  return ex;
}

// Per-combination sentence counts in the schema's canonical combination
// order. Duplicate filtering is opt-in; when the retry budget runs out the
// duplicate is kept so counts stay exact, and the result carries a flag.
struct GenerationRequest {
  std::vector<long> counts;
  DecodeMode mode = DecodeMode::sample(1.0);
  int max_len = kMaxSentenceLen;
  std::uint64_t seed = 1;
  bool dedup = false;
  int dedup_retries = 20;

  static GenerationRequest balanced(long per_combo, const AttributeSchema& schema) {
    GenerationRequest req;
    req.counts.assign(static_cast<std::size_t>(schema.combination_count()), per_combo);
    return req;
  }

  void validate(const AttributeSchema& schema) const {
    if (static_cast<long>(counts.size()) != schema.combination_count())
      throw std::invalid_argument("generation: need one count per attribute combination (" +
                                  std::to_string(schema.combination_count()) + ")");
    for (long c : counts)
      if (c < 0) throw std::invalid_argument("generation: counts must be >= 0");
    if (max_len < 1) throw std::invalid_argument("generation: max_len must be >= 1");
    if (dedup_retries < 0)
      throw std::invalid_argument("generation: dedup_retries must be >= 0");
  }
};

struct GenerationResult {
  LabeledCorpus corpus;
  bool shortfall = false;  // dedup retry budget ran out at least once
};

// Every sentence gets its own rng stream keyed by its global index, so the
// output is independent of batching or worker count and reproducible from
// the seed alone.
inline GenerationResult generate_dataset(const ModelState<float>& state,
                                         const Vocabulary& vocab,
                                         const GenerationRequest& req) {
  req.validate(state.schema);
  state.check_finite();

  GenerationResult out;
  out.corpus.schema = state.schema;
  std::set<std::vector<int>> seen;
  long index = 0;
  for (long combo = 0; combo < state.schema.combination_count(); ++combo) {
    const auto attrs =
        attribute_vector_from_indices(state.schema.combination(combo), state.schema);
    for (long i = 0; i < req.counts[static_cast<std::size_t>(combo)]; ++i) {
      Rng rng = Rng::substream(req.seed, "gen-" + std::to_string(index));
      ++index;

      LabeledExample ex;
      for (int attempt = 0;; ++attempt) {
        Vec<float> z(state.config.d_z);
        for (Eigen::Index d = 0; d < z.size(); ++d)
          z[d] = static_cast<float>(rng.normal());
        ex.tokens = decode_free(state, z, attrs, req.mode, req.max_len, rng);
        if (!req.dedup || seen.insert(ex.tokens).second) break;
        if (attempt >= req.dedup_retries) {
          out.shortfall = true;
          break;
        }
      }
      ex.attributes = attrs;
      ex.raw_text = join_tokens(decode_sentence(ex.tokens, vocab));
      out.corpus.examples.push_back(std::move(ex));
    }
  }
  return out;
}

// Interchange rows for the labeled-corpus JSONL format; pair with a
// provenance object such as generation_provenance() when writing.
inline std::vector<LabeledSentence> to_labeled_sentences(const LabeledCorpus& corpus,
                                                         const Vocabulary& vocab) {
  std::vector<LabeledSentence> out;
  out.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples) {
    LabeledSentence s;
    s.tokens = decode_sentence(ex.tokens, vocab);
    const auto values = attribute_labels(ex.attributes, corpus.schema);
    for (int k = 0; k < corpus.schema.size(); ++k)
      s.labels[corpus.schema.attributes[static_cast<std::size_t>(k)].name] =
          values[static_cast<std::size_t>(k)];
    out.push_back(std::move(s));
  }
  return out;
}

inline nlohmann::json generation_provenance(const std::string& checkpoint,
                                            std::uint64_t seed) {
  return {{"provenance",
           {{"source", "cga"}, {"checkpoint", checkpoint}, {"seed", seed}}}};
}

}  // namespace cga
