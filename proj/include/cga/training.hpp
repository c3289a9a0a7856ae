#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cga/attributes.hpp"
#include "cga/autodiff.hpp"
#include "cga/checkpoint.hpp"
#include "cga/corpus.hpp"
#include "cga/model.hpp"
#include "cga/objectives.hpp"
#include "cga/rng.hpp"

namespace cga {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam moments keyed by parameter name. Each optimizer owns a fixed name
// subset; apply() touches exactly those parameters.
struct AdamState {
  AdamConfig cfg;
  long t = 0;
  std::vector<std::string> names;
  std::map<std::string, Mat<float>> m, v;

  static AdamState create(const std::map<std::string, Mat<float>>& params,
                          std::vector<std::string> owned, AdamConfig cfg = {}) {
    AdamState s;
    s.cfg = cfg;
    s.names = std::move(owned);
    for (const auto& name : s.names) {
      auto it = params.find(name);
      if (it == params.end())
        throw std::invalid_argument("optimizer: unknown parameter '" + name + "'");
      s.m.emplace(name, Mat<float>::Zero(it->second.rows(), it->second.cols()));
      s.v.emplace(name, Mat<float>::Zero(it->second.rows(), it->second.cols()));
    }
    return s;
  }

  void apply(std::map<std::string, Mat<float>>& params,
             const std::map<std::string, Mat<float>>& grads) {
    ++t;
    const float b1 = static_cast<float>(cfg.beta1);
    const float b2 = static_cast<float>(cfg.beta2);
    const float corr1 = static_cast<float>(1.0 - std::pow(cfg.beta1, t));
    const float corr2 = static_cast<float>(1.0 - std::pow(cfg.beta2, t));
    const float lr = static_cast<float>(cfg.lr);
    const float eps = static_cast<float>(cfg.eps);
    for (const auto& name : names) {
      auto git = grads.find(name);
      if (git == grads.end())
        throw std::invalid_argument("optimizer: no gradient for '" + name + "'");
      const Mat<float>& g = git->second;
      Mat<float>& mm = m.at(name);
      Mat<float>& vv = v.at(name);
      mm = b1 * mm + (1 - b1) * g;
      vv = b2 * vv + (1 - b2) * g.cwiseProduct(g);
      params.at(name).array() -=
          lr * (mm.array() / corr1) / ((vv.array() / corr2).sqrt() + eps);
    }
  }
};

inline double gradient_norm(const std::map<std::string, Mat<float>>& grads) {
  double acc = 0;
  for (const auto& [name, g] : grads) acc += g.template cast<double>().squaredNorm();
  return std::sqrt(acc);
}

// Global-norm clipping: every gradient is scaled by the same factor.
inline void clip_gradient_norm(std::map<std::string, Mat<float>>& grads, double max_norm) {
  const double norm = gradient_norm(grads);
  if (norm <= max_norm || norm == 0) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (auto& [name, g] : grads) g *= scale;
}

struct TrainerConfig {
  ModelConfig model;
  ScheduleConfig schedule;
  AdversarialMode adversarial = AdversarialMode::Confusion;
  int batch_size = 32;
  int epochs = 15;
  double gen_lr = 1e-3;
  double disc_lr = 1e-3;
  double clip_norm = 5.0;
  int disc_steps = 1;  // discriminator half-steps per batch once the ramp is active
  std::uint64_t seed = 1;
  std::string checkpoint_dir;  // empty disables checkpoint files
  std::string loss_csv;        // empty disables the csv log
  std::string config_echo;     // run-config text echoed into checkpoints

  void validate() const {
    model.validate();
    schedule.validate();
    if (batch_size < 1) throw std::invalid_argument("trainer: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("trainer: epochs must be >= 1");
    if (gen_lr <= 0 || disc_lr <= 0)
      throw std::invalid_argument("trainer: learning rates must be positive");
    if (clip_norm <= 0) throw std::invalid_argument("trainer: clip_norm must be positive");
    if (disc_steps < 1) throw std::invalid_argument("trainer: disc_steps must be >= 1");
  }
};

inline std::vector<std::string> generator_param_names(const ModelState<float>& model) {
  std::vector<std::string> out;
  for (const auto& n : model.param_names)
    if (n.rfind("disc.", 0) != 0) out.push_back(n);
  return out;
}

inline std::vector<std::string> discriminator_param_names(const ModelState<float>& model) {
  std::vector<std::string> out;
  for (const auto& n : model.param_names)
    if (n.rfind("disc.", 0) == 0) out.push_back(n);
  return out;
}

struct TrainState {
  ModelState<float> model;
  long step = 0;   // optimizer iterations; the schedule argument
  long epoch = 0;  // completed epochs
  AdamState gen_opt;
  AdamState disc_opt;
  Rng rng{0};
  double best_valid = std::numeric_limits<double>::infinity();
};

inline TrainState make_train_state(const TrainerConfig& cfg, const AttributeSchema& schema) {
  cfg.validate();
  TrainState st;
  st.model = ModelState<float>::init(cfg.model, schema, cfg.seed);
  st.gen_opt = AdamState::create(st.model.params, generator_param_names(st.model),
                                 AdamConfig{cfg.gen_lr, 0.9, 0.999, 1e-8});
  st.disc_opt = AdamState::create(st.model.params, discriminator_param_names(st.model),
                                  AdamConfig{cfg.disc_lr, 0.9, 0.999, 1e-8});
  st.rng = Rng::substream(cfg.seed, "training");
  return st;
}

namespace detail {

// Tokens may arrive padded to a uniform batch length; padding is inert for
// every loss term, so strip it before building the graph.
inline std::vector<int> strip_trailing_pad(const std::vector<int>& tokens) {
  std::size_t n = tokens.size();
  while (n > 0 && tokens[n - 1] == kPadId) --n;
  return std::vector<int>(tokens.begin(), tokens.begin() + n);
}

inline std::string batch_dump(const std::vector<const LabeledExample*>& batch) {
  std::ostringstream os;
  for (const auto* ex : batch) {
    os << "\n  ";
    if (!ex->raw_text.empty()) {
      os << ex->raw_text;
    } else {
      for (std::size_t i = 0; i < ex->tokens.size(); ++i)
        os << (i ? " " : "") << ex->tokens[i];
    }
  }
  return os.str();
}

}  // namespace detail

// Greedy round trip through the decoder and encoder: decode z with its
// attribute vector, re-encode, return the posterior mean. The result is used
// as a constant target, so no gradient flows through it.
inline Vec<float> back_encode(const ModelState<float>& model, const Vec<float>& z,
                              const AttributeVector& a) {
  Rng unused(0);
  const auto decoded =
      decode_free(model, z, a, DecodeMode::greedy_mode(), model.config.max_len, unused);
  Vec<float> mu;
  encode_values<float>(model, decoded, &mu, nullptr);
  return mu;
}

// Discriminator half-step: posterior codes are computed without gradient
// tracking and enter the discriminator graph as constants, so encoder and
// decoder parameters cannot move. Batch-norm running statistics advance here
// and only here.
inline double discriminator_half_step(TrainState& state,
                                      const std::vector<const LabeledExample*>& batch,
                                      const TrainerConfig& cfg) {
  std::vector<Mat<float>> z_vals;
  std::vector<const AttributeVector*> attrs;
  for (const auto* ex : batch) {
    const auto seq = detail::strip_trailing_pad(ex->tokens);
    Vec<float> mu, lv;
    encode_values<float>(state.model, seq, &mu, &lv);
    Vec<float> eps(mu.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i)
      eps[i] = static_cast<float>(state.rng.normal());
    Mat<float> z(mu.size(), 1);
    z.col(0) = reparameterize_value<float>(mu, lv, eps);
    z_vals.push_back(std::move(z));
    attrs.push_back(&ex->attributes);
  }

  Tape<float> tape;
  TapedModel<float> model(tape, state.model);
  std::vector<int> cols;
  for (const auto& z : z_vals) cols.push_back(tape.leaf(z));
  DiscBatchStats<float> stats;
  const auto logits =
      model.discriminator_logits(cols, TapedModel<float>::BnStats::Batch, &stats);

  int acc = -1;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    for (std::size_t k = 0; k < logits[e].size(); ++k) {
      const int term = tape.softmax_xent(logits[e][k], attrs[e]->labels[k]);
      acc = acc < 0 ? term : tape.add(acc, term);
    }
  }
  const int root = tape.scale(acc, 1.0 / static_cast<double>(batch.size()));
  const double loss = tape.value(root)(0, 0);
  if (!std::isfinite(loss))
    throw std::runtime_error("discriminator loss is non-finite at step " +
                             std::to_string(state.step) + "; batch:" +
                             detail::batch_dump(batch));
  tape.backward(root);

  std::map<std::string, Mat<float>> grads;
  for (const auto& name : state.disc_opt.names) grads.emplace(name, model.param_grad(name));
  clip_gradient_norm(grads, cfg.clip_norm);
  state.disc_opt.apply(state.model.params, grads);
  update_running_stats(state.model, stats);
  return loss;
}

// Encoder/decoder half-step on the full objective. Discriminator parameters
// participate in the graph (the adversarial term needs them) but their
// updates are discarded; only generator-side parameters move.
inline LossBreakdown generator_half_step(TrainState& state,
                                         const std::vector<const LabeledExample*>& batch,
                                         const TrainerConfig& cfg) {
  const long s = state.step;
  const double zeta = word_dropout_rate(s, cfg.schedule);
  const double lkl = kl_weight(s, cfg.schedule);
  const double ldisc = discriminator_weight(s, cfg.schedule);
  const double lctx = cfg.schedule.ctx_weight;
  const int n = static_cast<int>(batch.size());

  Tape<float> tape;
  TapedModel<float> model(tape, state.model);
  std::vector<int> z_nodes;
  std::vector<int> totals;
  double recon_sum = 0, kl_sum = 0, ctx_sum = 0;

  for (const auto* ex : batch) {
    const auto seq = detail::strip_trailing_pad(ex->tokens);
    if (seq.size() < 2)
      throw std::invalid_argument("train: sequence shorter than two tokens");
    const auto latent = model.encode(seq);
    Mat<float> eps(state.model.config.d_z, 1);
    for (Eigen::Index i = 0; i < eps.rows(); ++i)
      eps(i, 0) = static_cast<float>(state.rng.normal());
    const int z = model.reparameterize(latent, eps);
    z_nodes.push_back(z);

    std::vector<int> inputs(seq.begin(), seq.end() - 1);
    inputs = apply_word_dropout(inputs, zeta, state.rng);
    const auto logits = model.decode_teacher_logits(z, ex->attributes, inputs);
    int recon = -1;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      if (seq[t + 1] == kPadId) continue;
      const int term = tape.softmax_xent(logits[t], seq[t + 1]);
      recon = recon < 0 ? term : tape.add(recon, term);
    }
    const int kl = tape.gaussian_kl_node(latent.mu, latent.logvar);
    int total = tape.add(recon, tape.scale(kl, lkl));
    if (lctx > 0) {
      const Vec<float> zb =
          back_encode(state.model, tape.value(z).col(0), ex->attributes);
      Mat<float> zbm(zb.size(), 1);
      zbm.col(0) = zb;
      const int ctx = tape.l1_to_const(z, zbm);
      ctx_sum += tape.value(ctx)(0, 0);
      total = tape.add(total, tape.scale(ctx, lctx));
    }
    recon_sum += tape.value(recon)(0, 0);
    kl_sum += tape.value(kl)(0, 0);
    totals.push_back(total);
  }

  double disc_truth = 0;
  if (ldisc > 0) {
    const auto head_logits =
        model.discriminator_logits(z_nodes, TapedModel<float>::BnStats::Batch);
    for (int e = 0; e < n; ++e) {
      int adv = -1;
      for (std::size_t k = 0; k < head_logits[e].size(); ++k) {
        const int head = head_logits[e][k];
        int term;
        if (cfg.adversarial == AdversarialMode::Literal) {
          term = tape.softmax_xent(head, batch[e]->attributes.labels[k]);
        } else {
          term = tape.sub(tape.logsumexp_col(head),
                          tape.scale(tape.sum_all(head),
                                     1.0 / static_cast<double>(tape.value(head).rows())));
        }
        adv = adv < 0 ? term : tape.add(adv, term);
        // The reported discriminator loss is always the truth loss, whatever
        // the adversarial mode.
        const Vec<float> l = tape.value(head).col(0);
        disc_truth +=
            logsumexp<float>(l) - l[batch[e]->attributes.labels[k]];
      }
      const double sign = cfg.adversarial == AdversarialMode::Literal ? -ldisc : ldisc;
      totals[e] = tape.add(totals[e], tape.scale(adv, sign));
    }
    disc_truth /= n;
  }

  int acc = totals[0];
  for (int e = 1; e < n; ++e) acc = tape.add(acc, totals[e]);
  const int root = tape.scale(acc, 1.0 / static_cast<double>(n));

  LossBreakdown bd;
  bd.recon_nll = recon_sum / n;
  bd.kl = kl_sum / n;
  bd.kl_weighted = lkl * bd.kl;
  bd.disc = disc_truth;
  bd.ctx = ctx_sum / n;
  bd.total_generator = tape.value(root)(0, 0);
  if (!std::isfinite(bd.total_generator))
    throw std::runtime_error("generator loss is non-finite at step " + std::to_string(s) +
                             "; batch:" + detail::batch_dump(batch));

  tape.backward(root);
  std::map<std::string, Mat<float>> grads;
  for (const auto& name : state.gen_opt.names) grads.emplace(name, model.param_grad(name));
  clip_gradient_norm(grads, cfg.clip_norm);
  state.gen_opt.apply(state.model.params, grads);
  return bd;
}

// One alternation: discriminator half-step(s) if the ramp is active, then
// the generator half-step. The step counter advances exactly once.
inline LossBreakdown train_step(TrainState& state,
                                const std::vector<const LabeledExample*>& batch,
                                const TrainerConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("train: empty batch");
  double disc_loss = 0;
  bool disc_ran = false;
  if (discriminator_weight(state.step, cfg.schedule) > 0) {
    for (int r = 0; r < cfg.disc_steps; ++r)
      disc_loss = discriminator_half_step(state, batch, cfg);
    disc_ran = true;
  }
  LossBreakdown bd = generator_half_step(state, batch, cfg);
  bd.total_discriminator = disc_ran ? disc_loss : bd.disc;
  state.step += 1;
  return bd;
}

// Model-selection loss: reconstruction from the posterior mean plus
// unweighted KL, no word dropout, so the number is comparable across steps
// regardless of schedule position.
inline double validation_loss(const ModelState<float>& model, const LabeledCorpus& corpus,
                              double* recon_out = nullptr, double* kl_out = nullptr) {
  if (corpus.examples.empty())
    throw std::invalid_argument("validation: empty corpus");
  double recon_acc = 0, kl_acc = 0;
  for (const auto& ex : corpus.examples) {
    const auto seq = detail::strip_trailing_pad(ex.tokens);
    Tape<float> tape(false);
    TapedModel<float> model_fwd(tape, model);
    const auto latent = model_fwd.encode(seq);
    const std::vector<int> inputs(seq.begin(), seq.end() - 1);
    const auto logits = model_fwd.decode_teacher_logits(latent.mu, ex.attributes, inputs);
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      if (seq[t + 1] == kPadId) continue;
      recon_acc += tape.value(tape.softmax_xent(logits[t], seq[t + 1]))(0, 0);
    }
    kl_acc += tape.value(tape.gaussian_kl_node(latent.mu, latent.logvar))(0, 0);
  }
  const double n = static_cast<double>(corpus.examples.size());
  if (recon_out) *recon_out = recon_acc / n;
  if (kl_out) *kl_out = kl_acc / n;
  return (recon_acc + kl_acc) / n;
}

inline const char* loss_csv_header() {
  return "step,recon,kl,lambda_kl,disc,ctx,zeta,lambda_disc,total";
}

inline std::string loss_csv_row(long step, const LossBreakdown& bd,
                                const ScheduleConfig& sched) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", step,
                bd.recon_nll, bd.kl, kl_weight(step, sched), bd.disc, bd.ctx,
                word_dropout_rate(step, sched), discriminator_weight(step, sched),
                bd.total_generator);
  return std::string(buf);
}

// TrainState <-> checkpoint. Optimizer moments ride alongside the model
// arrays; counters and the rng state go into the metadata block.
inline Checkpoint checkpoint_from_train_state(const TrainState& st,
                                              const std::string& config_echo = "") {
  Checkpoint c = checkpoint_from_model(st.model);
  for (const auto& name : st.gen_opt.names) {
    c.add_array("opt.gen.m." + name, st.gen_opt.m.at(name));
    c.add_array("opt.gen.v." + name, st.gen_opt.v.at(name));
  }
  for (const auto& name : st.disc_opt.names) {
    c.add_array("opt.disc.m." + name, st.disc_opt.m.at(name));
    c.add_array("opt.disc.v." + name, st.disc_opt.v.at(name));
  }
  nlohmann::json train;
  train["step"] = st.step;
  train["epoch"] = st.epoch;
  train["gen_t"] = st.gen_opt.t;
  train["disc_t"] = st.disc_opt.t;
  train["rng"] = st.rng.serialize();
  if (std::isfinite(st.best_valid)) train["best_valid"] = st.best_valid;
  c.meta["train"] = train;
  if (!config_echo.empty()) c.meta["run_config"] = config_echo;
  return c;
}

inline TrainState train_state_from_checkpoint(const Checkpoint& c, const TrainerConfig& cfg) {
  TrainState st;
  st.model = model_from_checkpoint<float>(c);
  st.gen_opt = AdamState::create(st.model.params, generator_param_names(st.model),
                                 AdamConfig{cfg.gen_lr, 0.9, 0.999, 1e-8});
  st.disc_opt = AdamState::create(st.model.params, discriminator_param_names(st.model),
                                  AdamConfig{cfg.disc_lr, 0.9, 0.999, 1e-8});
  for (const auto& name : st.gen_opt.names) {
    const auto& p = st.model.params.at(name);
    st.gen_opt.m.at(name) = c.array_as<float>("opt.gen.m." + name, p.rows(), p.cols());
    st.gen_opt.v.at(name) = c.array_as<float>("opt.gen.v." + name, p.rows(), p.cols());
  }
  for (const auto& name : st.disc_opt.names) {
    const auto& p = st.model.params.at(name);
    st.disc_opt.m.at(name) = c.array_as<float>("opt.disc.m." + name, p.rows(), p.cols());
    st.disc_opt.v.at(name) = c.array_as<float>("opt.disc.v." + name, p.rows(), p.cols());
  }
  if (!c.meta.contains("train"))
    throw std::runtime_error("checkpoint: missing training metadata");
  const auto& train = c.meta.at("train");
  st.step = train.at("step").get<long>();
  st.epoch = train.at("epoch").get<long>();
  st.gen_opt.t = train.at("gen_t").get<long>();
  st.disc_opt.t = train.at("disc_t").get<long>();
  st.rng.deserialize(train.at("rng").get<std::string>());
  st.best_valid = train.contains("best_valid")
                      ? train.at("best_valid").get<double>()
                      : std::numeric_limits<double>::infinity();
  return st;
}

inline void save_train_state(const TrainState& st, const std::string& path,
                             const std::string& config_echo = "") {
  save_checkpoint(path, checkpoint_from_train_state(st, config_echo));
}

inline TrainState load_train_state(const std::string& path, const TrainerConfig& cfg) {
  return train_state_from_checkpoint(load_checkpoint(path), cfg);
}

struct EpochSummary {
  long epoch = 0;
  double valid_loss = 0;
  std::string checkpoint_path;
};

struct TrainResult {
  TrainState state;
  long first_step = 0;                 // step number of steps[0]
  std::vector<LossBreakdown> steps;    // one row per train_step
  std::vector<EpochSummary> epochs;
  std::string best_checkpoint;
  std::string last_checkpoint;
};

// Epoch loop over shuffled batches, starting from an existing state (fresh
// or restored from a checkpoint). Runs until cfg.epochs total epochs are
// complete; validation, loss log, and checkpoint files are appended as
// configured.
inline TrainResult train_from(TrainState state, const LabeledCorpus& train_set,
                              const LabeledCorpus& valid_set, const TrainerConfig& cfg) {
  cfg.validate();
  if (train_set.examples.empty()) throw std::invalid_argument("train: empty corpus");

  std::ofstream csv;
  if (!cfg.loss_csv.empty()) {
    const bool fresh = state.step == 0;
    csv.open(cfg.loss_csv, fresh ? std::ios::trunc : std::ios::app);
    if (!csv) throw std::runtime_error("train: cannot open loss log '" + cfg.loss_csv + "'");
    if (fresh) csv << loss_csv_header() << "\n";
  }
  if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

  TrainResult result;
  result.first_step = state.step;
  const long n = static_cast<long>(train_set.examples.size());

  for (long epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> perm = state.rng.permutation(static_cast<int>(n));
    for (long start = 0; start < n; start += cfg.batch_size) {
      const long end = std::min(n, start + cfg.batch_size);
      std::vector<const LabeledExample*> batch;
      batch.reserve(end - start);
      for (long i = start; i < end; ++i)
        batch.push_back(&train_set.examples[perm[static_cast<std::size_t>(i)]]);
      const long step_used = state.step;
      const LossBreakdown bd = train_step(state, batch, cfg);
      result.steps.push_back(bd);
      if (csv.is_open()) csv << loss_csv_row(step_used, bd, cfg.schedule) << "\n";
    }
    state.epoch = epoch + 1;

    EpochSummary summary;
    summary.epoch = state.epoch;
    summary.valid_loss = validation_loss(state.model, valid_set);
    if (!cfg.checkpoint_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "ckpt_epoch%04ld.bin", state.epoch);
      summary.checkpoint_path = cfg.checkpoint_dir + "/" + name;
    }
    const bool improved = summary.valid_loss < state.best_valid;
    if (improved) state.best_valid = summary.valid_loss;
    if (!cfg.checkpoint_dir.empty()) {
      save_train_state(state, summary.checkpoint_path, cfg.config_echo);
      result.last_checkpoint = summary.checkpoint_path;
      if (improved) {
        result.best_checkpoint = cfg.checkpoint_dir + "/ckpt_best.bin";
        save_train_state(state, result.best_checkpoint, cfg.config_echo);
      }
    }
    result.epochs.push_back(summary);
  }

  result.state = std::move(state);
  return result;
}

inline TrainResult train(const LabeledCorpus& train_set, const LabeledCorpus& valid_set,
                         const TrainerConfig& cfg) {
  return train_from(make_train_state(cfg, train_set.schema), train_set, valid_set, cfg);
}

}  // namespace cga
