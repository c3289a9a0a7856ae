#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cga/config.hpp"
#include "cga/toy.hpp"

namespace cga {

namespace detail {

inline std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return fnv1a64(bytes.data(), bytes.size());
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Internal parallelism cap; the pipelines here are sequential, so the value
// is recorded and otherwise only validated.
inline int worker_cap() {
  const char* env = std::getenv("CGA_NUM_WORKERS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1)
    throw std::runtime_error("CGA_NUM_WORKERS must be a positive integer, got '" +
                             std::string(env) + "'");
  return static_cast<int>(n);
}

// Default sibling file, e.g. the vocabulary written next to a data file.
inline std::string sibling_path(const std::string& anchor, const std::string& name) {
  return (std::filesystem::path(anchor).parent_path() / name).string();
}

}  // namespace detail

// Options shared by every subcommand plus each command's file arguments.
struct CliInvocation {
  std::string config_path;
  std::string profile;
  std::vector<std::string> sets;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  std::string input;       // label: raw jsonl to annotate
  std::string data;        // train / eval / augment: labeled jsonl
  std::string test_data;   // augment: held-out labeled jsonl
  std::string vocab_path;  // defaults to vocab.txt next to the data file
  std::string checkpoint;  // generate / eval probe / augment
  std::string generated;   // eval: generated jsonl
  std::string results;     // report: results csv or its directory
  std::string resume;      // train: checkpoint to continue from
};

namespace detail {

// Accumulates the manifest while a subcommand runs, then lands it in the
// output directory as the final artifact.
class ManifestWriter {
 public:
  ManifestWriter(std::string subcommand, std::string out_dir, const RunConfig& cfg)
      : out_dir_(std::move(out_dir)) {
    std::filesystem::create_directories(out_dir_);
    manifest_["subcommand"] = std::move(subcommand);
    manifest_["seed"] = cfg.seed;
    manifest_["workers"] = worker_cap();
    nlohmann::json conf = nlohmann::json::object();
    for (const auto& k : config_keys()) conf[k.path] = k.get(cfg);
    manifest_["config"] = std::move(conf);
    manifest_["inputs"] = nlohmann::json::object();
    manifest_["outputs"] = nlohmann::json::array();
  }

  void input(const std::string& path) {
    if (!path.empty()) manifest_["inputs"][path] = hash_hex(file_hash(path));
  }

  // Returns the absolute path; records the name as an output artifact.
  std::string output(const std::string& name) {
    manifest_["outputs"].push_back(name);
    return (std::filesystem::path(out_dir_) / name).string();
  }

  void note(const std::string& key, const nlohmann::json& value) { manifest_[key] = value; }

  void finish() {
    manifest_["outputs"].push_back("manifest.json");
    write_text((std::filesystem::path(out_dir_) / "manifest.json").string(),
               manifest_.dump(2) + "\n");
  }

 private:
  std::string out_dir_;
  nlohmann::json manifest_;
};

inline int attribute_index_or_throw(const AttributeSchema& schema, const std::string& name,
                                    const char* what) {
  if (name.empty()) return 0;
  for (int i = 0; i < schema.size(); ++i)
    if (schema.attributes[static_cast<std::size_t>(i)].name == name) return i;
  throw std::invalid_argument(std::string(what) + ": unknown attribute '" + name + "'");
}

inline std::vector<Oracle> build_oracles(const RunConfig& cfg, const AttributeSchema& schema,
                                         const Vocabulary& vocab,
                                         const std::string& labeled_path) {
  std::vector<Oracle> oracles;
  if (cfg.eval_oracle == "rules") {
    for (const auto& attr : schema.attributes)
      oracles.push_back(rule_oracle(toy_tagger(cfg.label_compact),
                                    toy_sentiment_lexicon(cfg.label_compact), attr));
    return oracles;
  }
  // textcnn: one classifier per attribute, trained on real labeled data.
  if (labeled_path.empty())
    throw std::invalid_argument("eval: the textcnn oracle needs --data with labeled sentences");
  const auto sents = read_labeled_jsonl(labeled_path);
  const LabeledCorpus corpus = encode_corpus(sents, schema, vocab);
  for (int a = 0; a < schema.size(); ++a) {
    TextCnnConfig cnn_cfg = cfg.cnn;
    cnn_cfg.seed = fnv1a64("oracle:" + schema.attributes[static_cast<std::size_t>(a)].name,
                           cfg.seed);
    oracles.push_back(
        text_cnn_oracle(train_text_cnn(corpus, a, vocab.size(), cnn_cfg), vocab));
  }
  return oracles;
}

inline ModelState<float> load_model_or_throw(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("missing --checkpoint");
  return model_from_checkpoint<float>(load_checkpoint(path));
}

inline Vocabulary load_vocab_for(const CliInvocation& inv, const std::string& anchor) {
  const std::string path =
      inv.vocab_path.empty() ? sibling_path(anchor, "vocab.txt") : inv.vocab_path;
  return Vocabulary::load(path);
}

inline std::string vocab_path_for(const CliInvocation& inv, const std::string& anchor) {
  return inv.vocab_path.empty() ? sibling_path(anchor, "vocab.txt") : inv.vocab_path;
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns 0 and writes its artifacts plus a manifest.

inline int cmd_label(const CliInvocation& inv, const RunConfig& cfg, std::ostream& out) {
  const AttributeSchema schema = schema_from_names(cfg.attributes);
  ManifestWriter manifest("label", inv.out_dir, cfg);
  manifest.input(inv.config_path);

  std::vector<LabeledSentence> sents;
  long dropped = 0;
  Vocabulary vocab;
  nlohmann::json provenance;
  if (cfg.label_toy_count > 0) {
    sents = make_toy_sentences(static_cast<int>(cfg.label_toy_count), schema, cfg.seed,
                               cfg.label_compact);
    vocab = toy_vocabulary(cfg.label_compact);
    provenance = {{"provenance", {{"source", "toy"}, {"seed", cfg.seed}}}};
  } else {
    if (inv.input.empty())
      throw std::invalid_argument("label: need --input, or label.toy_count > 0");
    manifest.input(inv.input);
    const RuleTagger tagger = toy_tagger(cfg.label_compact);
    const SentimentLexicon lexicon = toy_sentiment_lexicon(cfg.label_compact);
    const SentenceLabeler labeler(tagger, lexicon);
    for (const auto& rec : read_raw_jsonl(inv.input)) {
      const auto tokens = tokenize(rec.text);
      if (tokens.empty()) {
        ++dropped;
        continue;
      }
      const auto labels = labeler.label(tokens, rec.rating, schema);
      if (!labels) {
        ++dropped;
        continue;
      }
      sents.push_back({tokens, *labels});
      for (const auto& t : tokens) vocab.add(t);
    }
    provenance = {{"provenance", {{"source", "rules"}, {"input", inv.input}}}};
  }

  write_labeled_jsonl(sents, manifest.output("data.jsonl"), provenance);
  vocab.save(manifest.output("vocab.txt"));
  manifest.note("labeled", static_cast<long>(sents.size()));
  manifest.note("dropped", dropped);
  manifest.finish();
  out << "labeled " << sents.size() << " sentences (" << dropped << " dropped) -> "
      << inv.out_dir << "\n";
  return 0;
}

inline int cmd_train(const CliInvocation& inv, const RunConfig& cfg, std::ostream& out) {
  if (inv.data.empty()) throw std::invalid_argument("train: missing --data");
  const AttributeSchema schema = schema_from_names(cfg.attributes);
  const Vocabulary vocab = load_vocab_for(inv, inv.data);

  ManifestWriter manifest("train", inv.out_dir, cfg);
  manifest.input(inv.config_path);
  manifest.input(inv.data);
  manifest.input(vocab_path_for(inv, inv.data));
  manifest.input(inv.resume);

  const auto sents = read_labeled_jsonl(inv.data);
  const LabeledCorpus corpus = encode_corpus(sents, schema, vocab, cfg.trainer.model.max_len);
  const auto splits =
      make_splits(corpus.examples, cfg.train_frac, 1.0 - cfg.train_frac, 0.0, cfg.seed);
  const LabeledCorpus train_set{schema, splits.train};
  const LabeledCorpus valid_set{schema, splits.valid};

  TrainerConfig tc = cfg.trainer;
  tc.model.vocab = vocab.size();
  tc.model.head_sizes.clear();
  for (const auto& attr : schema.attributes)
    tc.model.head_sizes.push_back(static_cast<int>(attr.values.size()));
  tc.seed = cfg.seed;
  tc.checkpoint_dir = inv.out_dir;
  tc.loss_csv = (std::filesystem::path(inv.out_dir) / "loss.csv").string();
  tc.config_echo = config_echo(cfg);

  // cfg.trainer.epochs is the total target; a resumed run picks up at the
  // checkpoint's epoch and trains until it reaches that target.
  TrainResult result;
  if (!inv.resume.empty()) {
    TrainState state = load_train_state(inv.resume, tc);
    if (state.epoch >= tc.epochs)
      throw std::invalid_argument("train: checkpoint already has " +
                                  std::to_string(state.epoch) + " epochs, target is " +
                                  std::to_string(tc.epochs));
    result = train_from(std::move(state), train_set, valid_set, tc);
  } else {
    result = train(train_set, valid_set, tc);
  }

  manifest.output("loss.csv");
  for (const auto& e : result.epochs)
    manifest.output(std::filesystem::path(e.checkpoint_path).filename().string());
  if (!result.best_checkpoint.empty())
    manifest.output(std::filesystem::path(result.best_checkpoint).filename().string());
  manifest.note("train_sentences", static_cast<long>(train_set.examples.size()));
  manifest.note("valid_sentences", static_cast<long>(valid_set.examples.size()));
  manifest.note("final_step", result.state.step);
  manifest.note("best_valid_loss", result.state.best_valid);
  manifest.finish();

  out << "trained to step " << result.state.step << " (epoch " << result.state.epoch
      << "), best validation loss " << result.state.best_valid << "\n";
  out << "best checkpoint: " << result.best_checkpoint << "\n";
  return 0;
}

inline int cmd_generate(const CliInvocation& inv, const RunConfig& cfg, std::ostream& out) {
  const ModelState<float> model = load_model_or_throw(inv.checkpoint);
  const Vocabulary vocab = load_vocab_for(inv, inv.checkpoint);

  ManifestWriter manifest("generate", inv.out_dir, cfg);
  manifest.input(inv.config_path);
  manifest.input(inv.checkpoint);
  manifest.input(vocab_path_for(inv, inv.checkpoint));

  GenerationRequest req = GenerationRequest::balanced(cfg.gen_per_combo, model.schema);
  req.mode = cfg.gen_mode == "greedy" ? DecodeMode::greedy_mode()
                                      : DecodeMode::sample(cfg.gen_temperature);
  req.max_len = model.config.max_len;
  req.seed = cfg.seed;
  req.dedup = cfg.gen_dedup;
  req.dedup_retries = cfg.gen_dedup_retries;

  const GenerationResult result = generate_dataset(model, vocab, req);
  const auto sents = to_labeled_sentences(result.corpus, vocab);
  write_labeled_jsonl(sents, manifest.output("generated.jsonl"),
                      generation_provenance(inv.checkpoint, cfg.seed));
  manifest.note("sentences", static_cast<long>(sents.size()));
  manifest.note("dedup_shortfall", result.shortfall);
  manifest.finish();

  out << "generated " << sents.size() << " sentences";
  if (result.shortfall) out << " (dedup retries ran out; duplicates kept)";
  out << "\n";
  return 0;
}

inline int cmd_eval_attr_match(const CliInvocation& inv, const RunConfig& cfg,
                               std::ostream& out) {
  if (inv.generated.empty()) throw std::invalid_argument("eval: missing --generated");
  const AttributeSchema schema = schema_from_names(cfg.attributes);
  const Vocabulary vocab = load_vocab_for(inv, inv.generated);

  ManifestWriter manifest("eval attr-match", inv.out_dir, cfg);
  manifest.input(inv.config_path);
  manifest.input(inv.generated);
  manifest.input(vocab_path_for(inv, inv.generated));
  manifest.input(inv.data);

  const auto sents = read_labeled_jsonl(inv.generated);
  const LabeledCorpus generated = encode_corpus(sents, schema, vocab);
  const auto oracles = build_oracles(cfg, schema, vocab, inv.data);
  const auto rows = attribute_matching(generated, vocab, oracles, cfg.eval_splits);

  const std::string csv = attribute_match_csv(rows);
  write_text(manifest.output("attr_match.csv"), csv);
  manifest.finish();
  out << csv;
  return 0;
}

inline int cmd_eval_similarity(const CliInvocation& inv, const RunConfig& cfg,
                               std::ostream& out) {
  if (inv.generated.empty()) throw std::invalid_argument("eval: missing --generated");
  const AttributeSchema schema = schema_from_names(cfg.attributes);
  const Vocabulary vocab = load_vocab_for(inv, inv.generated);
  const int attr_index = attribute_index_or_throw(schema, cfg.eval_attribute, "similarity");

  ManifestWriter manifest("eval similarity", inv.out_dir, cfg);
  manifest.input(inv.config_path);
  manifest.input(inv.generated);
  manifest.input(vocab_path_for(inv, inv.generated));

  const auto sents = read_labeled_jsonl(inv.generated);
  const LabeledCorpus generated = encode_corpus(sents, schema, vocab);
  const HashedWordEmbedder embedder(cfg.eval_embed_dim);
  const SimilarityReport report = similarity_report(generated, vocab, attr_index, embedder);
  const nlohmann::json hist = similarity_histograms(report);

  // Per class-pair block means, plus the within/between aggregate.
  std::ostringstream csv;
  csv << "class_a,class_b,pairs,mean\n";
  double intra_sum = 0, cross_sum = 0;
  long intra_pairs = 0, cross_pairs = 0;
  for (const auto& block : hist.at("blocks")) {
    const std::string a = block.at("row_class").get<std::string>();
    const std::string b = block.at("col_class").get<std::string>();
    const long pairs = block.at("pairs").get<long>();
    const double mean = block.at("mean").get<double>();
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%s,%ld,%.6f\n", a.c_str(), b.c_str(), pairs, mean);
    csv << buf;
    if (a == b) {
      intra_sum += mean * static_cast<double>(pairs);
      intra_pairs += pairs;
    } else {
      cross_sum += mean * static_cast<double>(pairs);
      cross_pairs += pairs;
    }
  }

  write_text(manifest.output("similarity.json"), hist.dump(2) + "\n");
  write_text(manifest.output("similarity.csv"), csv.str());
  manifest.note("excluded", report.excluded);
  manifest.finish();

  char buf[160];
  std::snprintf(buf, sizeof buf, "within-class mean %.4f over %ld pairs\n",
                intra_pairs > 0 ? intra_sum / static_cast<double>(intra_pairs) : 0.0,
                intra_pairs);
  out << buf;
  std::snprintf(buf, sizeof buf, "between-class mean %.4f over %ld pairs\n",
                cross_pairs > 0 ? cross_sum / static_cast<double>(cross_pairs) : 0.0,
                cross_pairs);
  out << buf;
  return 0;
}

inline int cmd_eval_probe(const CliInvocation& inv, const RunConfig& cfg, std::ostream& out) {
  if (inv.data.empty()) throw std::invalid_argument("eval: missing --data");
  const ModelState<float> model = load_model_or_throw(inv.checkpoint);
  const Vocabulary vocab = load_vocab_for(inv, inv.data);

  ManifestWriter manifest("eval probe", inv.out_dir, cfg);
  manifest.input(inv.config_path);
  manifest.input(inv.checkpoint);
  manifest.input(inv.data);
  manifest.input(vocab_path_for(inv, inv.data));

  const auto sents = read_labeled_jsonl(inv.data);
  const LabeledCorpus corpus = encode_corpus(sents, model.schema, vocab,
                                             model.config.max_len);
  ProbeConfig probe_cfg = cfg.probe;
  probe_cfg.seed = cfg.seed;
  const auto rows = probe_disentanglement(model, corpus, probe_cfg);

  std::ostringstream csv;
  csv << "attribute,accuracy\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%.6f\n", r.attribute.c_str(), r.accuracy);
    csv << buf;
  }
  write_text(manifest.output("probe.csv"), csv.str());
  manifest.finish();
  out << csv.str();
  return 0;
}

inline int cmd_augment_grid(const CliInvocation& inv, const RunConfig& cfg,
                            std::ostream& out) {
  if (inv.data.empty()) throw std::invalid_argument("augment: missing --data");
  if (inv.test_data.empty()) throw std::invalid_argument("augment: missing --test");
  const ModelState<float> model = load_model_or_throw(inv.checkpoint);
  const Vocabulary vocab = load_vocab_for(inv, inv.data);
  const AttributeSchema schema = schema_from_names(cfg.attributes);
  const int attr_index =
      attribute_index_or_throw(schema, cfg.augment_attribute, "augment");

  ManifestWriter manifest("augment grid", inv.out_dir, cfg);
  manifest.input(inv.config_path);
  manifest.input(inv.checkpoint);
  manifest.input(inv.data);
  manifest.input(inv.test_data);
  manifest.input(vocab_path_for(inv, inv.data));

  const LabeledCorpus pool = encode_corpus(read_labeled_jsonl(inv.data), schema, vocab);
  const LabeledCorpus test = encode_corpus(read_labeled_jsonl(inv.test_data), schema, vocab);

  AugmentationInputs gi;
  gi.pool = &pool;
  gi.test = &test;
  gi.model = &model;
  gi.vocab = &vocab;
  gi.synonyms = &toy_synonym_table();
  gi.attr_index = attr_index;
  gi.eda_alpha = cfg.eda_alpha;
  gi.eda_ops = cfg.eda_ops;

  const AugmentationResults results =
      run_augmentation_grid(cfg.grid, gi, cfg.downstream, cfg.seed);
  const auto rows = aggregate_results(results);
  const std::string table = best_rows_markdown(rows);

  write_text(manifest.output("results.csv"), results_csv(results));
  write_text(manifest.output("summary.csv"), summary_csv(rows));
  write_text(manifest.output("table.md"), table);
  manifest.finish();
  out << table;
  return 0;
}

inline int cmd_report(const CliInvocation& inv, const RunConfig& cfg, std::ostream& out) {
  if (inv.results.empty()) throw std::invalid_argument("report: missing --results");
  std::string path = inv.results;
  if (std::filesystem::is_directory(path))
    path = (std::filesystem::path(path) / "results.csv").string();

  ManifestWriter manifest("report", inv.out_dir, cfg);
  manifest.input(inv.config_path);

  AugmentationResults results;
  if (std::filesystem::exists(path)) {
    manifest.input(path);
    std::ifstream in(path);
    results = parse_results_csv(in);
  }

  const auto rows = aggregate_results(results);
  const std::string table = best_rows_markdown(rows);
  write_text(manifest.output("summary.csv"), summary_csv(rows));
  write_text(manifest.output("table.md"), table);
  manifest.finish();
  out << table;
  return 0;
}

}  // namespace detail

// Parses argv (without the program name) and dispatches. Failures come back
// as one JSON line on `err` and a nonzero status.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"attribute-controlled text generation workbench"};
  app.require_subcommand(1);

  CliInvocation inv;
  auto add_common = [&inv](CLI::App* cmd) {
    cmd->add_option("--config", inv.config_path, "run-config file");
    cmd->add_option("--profile", inv.profile, "hyperparameter profile: yelp, imdb, toy");
    cmd->add_option("--set", inv.sets, "config override key=value (repeatable)");
    cmd->add_option("--out", inv.out_dir, "output directory")->required();
    cmd->add_option("--seed", inv.seed, "top-level seed (overrides config)");
  };

  CLI::App* label = app.add_subcommand("label", "synthesize or rule-label a corpus");
  add_common(label);
  label->add_option("--input", inv.input, "raw sentences jsonl to annotate");

  CLI::App* train = app.add_subcommand("train", "fit the generator");
  add_common(train);
  train->add_option("--data", inv.data, "labeled jsonl")->required();
  train->add_option("--vocab", inv.vocab_path, "vocabulary file");
  train->add_option("--resume", inv.resume, "checkpoint to continue from");

  CLI::App* generate = app.add_subcommand("generate", "sample labeled sentences");
  add_common(generate);
  generate->add_option("--checkpoint", inv.checkpoint, "model checkpoint")->required();
  generate->add_option("--vocab", inv.vocab_path, "vocabulary file");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a model or its samples");
  eval->require_subcommand(1);
  CLI::App* attr_match = eval->add_subcommand("attr-match", "oracle agreement rates");
  add_common(attr_match);
  attr_match->add_option("--generated", inv.generated, "generated jsonl")->required();
  attr_match->add_option("--vocab", inv.vocab_path, "vocabulary file");
  attr_match->add_option("--data", inv.data, "labeled jsonl (trains the textcnn oracle)");

  CLI::App* similarity = eval->add_subcommand("similarity", "class cosine structure");
  add_common(similarity);
  similarity->add_option("--generated", inv.generated, "generated jsonl")->required();
  similarity->add_option("--vocab", inv.vocab_path, "vocabulary file");

  CLI::App* probe = eval->add_subcommand("probe", "attribute recovery from codes");
  add_common(probe);
  probe->add_option("--checkpoint", inv.checkpoint, "model checkpoint")->required();
  probe->add_option("--data", inv.data, "labeled jsonl")->required();
  probe->add_option("--vocab", inv.vocab_path, "vocabulary file");

  CLI::App* augment = app.add_subcommand("augment", "augmentation experiments");
  augment->require_subcommand(1);
  CLI::App* grid = augment->add_subcommand("grid", "train downstream classifiers per cell");
  add_common(grid);
  grid->add_option("--data", inv.data, "labeled training pool jsonl")->required();
  grid->add_option("--test", inv.test_data, "labeled held-out jsonl")->required();
  grid->add_option("--checkpoint", inv.checkpoint, "model checkpoint")->required();
  grid->add_option("--vocab", inv.vocab_path, "vocabulary file");

  CLI::App* report = app.add_subcommand("report", "summarize augmentation results");
  add_common(report);
  report->add_option("--results", inv.results, "results.csv or its directory")->required();

  std::vector<const char*> argv;
  argv.push_back("cga");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << nlohmann::json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
    return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
  }

  std::string name;
  int (*body)(const CliInvocation&, const RunConfig&, std::ostream&) = nullptr;
  if (label->parsed()) {
    name = "label";
    body = detail::cmd_label;
  } else if (train->parsed()) {
    name = "train";
    body = detail::cmd_train;
  } else if (generate->parsed()) {
    name = "generate";
    body = detail::cmd_generate;
  } else if (eval->parsed()) {
    if (attr_match->parsed()) {
      name = "eval attr-match";
      body = detail::cmd_eval_attr_match;
    } else if (similarity->parsed()) {
      name = "eval similarity";
      body = detail::cmd_eval_similarity;
    } else {
      name = "eval probe";
      body = detail::cmd_eval_probe;
    }
  } else if (augment->parsed()) {
    name = "augment grid";
    body = detail::cmd_augment_grid;
  } else {
    name = "report";
    body = detail::cmd_report;
  }

  try {
    RunConfig cfg = load_run_config(inv.config_path, inv.profile, inv.sets);
    if (inv.seed) cfg.seed = *inv.seed;
    detail::worker_cap();  // fail fast on a bad env var
    return body(inv, cfg, out);
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", e.what()}, {"subcommand", name}}.dump() << "\n";
    return 1;
  }
}

inline int run_cli(const std::vector<std::string>& args) {
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace cga
