#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cga/corpus.hpp"
#include "cga/rng.hpp"

namespace cga {

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// KL(q || N(0, I)) for a diagonal Gaussian given as mean and log-variance.
template <class S>
S gaussian_kl(const Vec<S>& mu, const Vec<S>& logvar) {
  if (mu.size() != logvar.size())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  S acc = S(0);
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    acc += S(0.5) * (mu[i] * mu[i] + std::exp(logvar[i]) - S(1) - logvar[i]);
  return acc;
}

template <class S>
S logsumexp(const Vec<S>& v) {
  const S m = v.maxCoeff();
  S acc = S(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

// Token-level cross entropy summed over the sequence. PAD targets contribute
// nothing, so a padded tail is free.
template <class S>
S reconstruction_nll(const std::vector<Vec<S>>& logits, const std::vector<int>& targets) {
  if (logits.size() != targets.size())
    throw std::invalid_argument("reconstruction_nll: " + std::to_string(logits.size()) +
                                " logit rows for " + std::to_string(targets.size()) +
                                " targets");
  S acc = S(0);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] == kPadId) continue;
    acc += logsumexp(logits[t]) - logits[t][targets[t]];
  }
  return acc;
}

// Sum over attribute heads of the negative log probability the head assigns
// to the true value.
template <class S>
S discriminator_truth_loss(const std::vector<Vec<S>>& head_probs,
                           const std::vector<int>& labels) {
  if (head_probs.size() != labels.size())
    throw std::invalid_argument("discriminator_truth_loss: head/label count mismatch");
  S acc = S(0);
  for (std::size_t k = 0; k < head_probs.size(); ++k)
    acc -= std::log(head_probs[k][labels[k]]);
  return acc;
}

// Cross entropy of each head against the uniform distribution, summed over
// heads. Minimal exactly when every head is uniform, so minimizing it pushes
// the discriminator toward total confusion while staying bounded.
template <class S>
S confusion_loss(const std::vector<Vec<S>>& head_probs) {
  S acc = S(0);
  for (const auto& p : head_probs) {
    const S inv = S(1) / S(static_cast<double>(p.size()));
    for (Eigen::Index v = 0; v < p.size(); ++v) acc -= inv * std::log(p[v]);
  }
  return acc;
}

template <class S>
S context_loss(const Vec<S>& z, const Vec<S>& z_back) {
  if (z.size() != z_back.size())
    throw std::invalid_argument("context_loss: dimension mismatch");
  S acc = S(0);
  for (Eigen::Index i = 0; i < z.size(); ++i) acc += std::abs(z[i] - z_back[i]);
  return acc;
}

// How the generator's adversarial term is formed from the discriminator's
// output. Confusion is the default; Literal keeps the raw sign-flipped
// truth loss, which is unbounded below.
enum class AdversarialMode { Confusion, Literal };

inline AdversarialMode adversarial_mode_from_name(const std::string& name) {
  if (name == "confusion") return AdversarialMode::Confusion;
  if (name == "literal") return AdversarialMode::Literal;
  throw std::invalid_argument("unknown adversarial mode '" + name + "'");
}

inline const char* adversarial_mode_name(AdversarialMode m) {
  return m == AdversarialMode::Confusion ? "confusion" : "literal";
}

// The quantity that enters the generator total with a leading minus sign.
// Literal: the truth loss itself (generator maximizes it). Confusion: the
// negated confusion loss, so that subtracting it minimizes confusion loss.
template <class S>
S generator_adversarial_term(const std::vector<Vec<S>>& head_probs,
                             const std::vector<int>& labels, AdversarialMode mode) {
  if (mode == AdversarialMode::Literal) return discriminator_truth_loss(head_probs, labels);
  return -confusion_loss(head_probs);
}

template <class S>
S total_generator_loss(S recon_nll, S kl, S ctx, S disc_adv, S lambda_kl, S lambda_ctx,
                       S lambda_disc) {
  for (S v : {recon_nll, kl, ctx, disc_adv, lambda_kl, lambda_ctx, lambda_disc})
    if (!std::isfinite(static_cast<double>(v)))
      throw std::invalid_argument("total_generator_loss: non-finite input");
  return recon_nll + lambda_kl * kl + lambda_ctx * ctx - lambda_disc * disc_adv;
}

struct LossBreakdown {
  double recon_nll = 0;
  double kl = 0;
  double kl_weighted = 0;
  double disc = 0;  // adversarial term; total_generator subtracts lambda_disc * disc
  double ctx = 0;
  double total_generator = 0;
  double total_discriminator = 0;  // truth loss, the discriminator's own objective
};

// Schedule knobs. Word dropout runs flat at wd_k1 until wd_warmup, then
// follows a clamped cosine with period wd_tau. The KL weight is a logistic
// ramp centered at kl_x0 that reaches 1 - kl_eps at kl_steps. The adversary
// weight stays at zero until disc_k1, then ramps linearly to disc_t over
// disc_x0 steps.
struct ScheduleConfig {
  double wd_k1 = 0.6;
  long wd_tau = 500;
  long wd_warmup = 7000;
  long kl_x0 = 1000;
  double kl_eps = 1e-4;
  long kl_steps = 2000;
  double disc_t = 20.0;
  long disc_x0 = 6000;
  long disc_k1 = 12000;
  double ctx_weight = 0.5;

  void validate() const {
    if (wd_k1 < 0.0 || wd_k1 > 1.0)
      throw std::invalid_argument("schedule: wd_k1 must be in [0,1]");
    if (wd_tau <= 0 || wd_warmup <= 0 || kl_x0 <= 0 || kl_steps <= 0 || disc_x0 <= 0 ||
        disc_k1 <= 0)
      throw std::invalid_argument("schedule: step counts must be > 0");
    if (kl_steps <= kl_x0)
      throw std::invalid_argument("schedule: kl_steps must exceed kl_x0");
    if (disc_t < 0.0) throw std::invalid_argument("schedule: disc_t must be >= 0");
    if (kl_eps <= 0.0 || kl_eps >= 0.5)
      throw std::invalid_argument("schedule: kl_eps must be in (0, 0.5)");
  }
};

inline double word_dropout_rate(long step, const ScheduleConfig& cfg) {
  if (step <= cfg.wd_warmup) return cfg.wd_k1;
  constexpr double two_pi = 6.283185307179586476925287;
  const double c = std::cos(two_pi * static_cast<double>(step) / static_cast<double>(cfg.wd_tau));
  return std::max(0.0, c);
}

// Logistic ramp: the slope is fixed by requiring weight(kl_steps) = 1 - eps.
inline double kl_weight(long step, const ScheduleConfig& cfg) {
  const double K = std::log((1.0 - cfg.kl_eps) / cfg.kl_eps) /
                   static_cast<double>(cfg.kl_steps - cfg.kl_x0);
  return 1.0 / (1.0 + std::exp(-K * (static_cast<double>(step) - static_cast<double>(cfg.kl_x0))));
}

inline double discriminator_weight(long step, const ScheduleConfig& cfg) {
  if (step <= cfg.disc_k1) return 0.0;
  const double ramp = (cfg.disc_t / static_cast<double>(cfg.disc_x0)) *
                      static_cast<double>(step - cfg.disc_k1);
  return std::min(cfg.disc_t, ramp);
}

// Replaces each content token by UNK independently with the given rate.
// Framing tokens (SOS, EOS, PAD) pass through so the decoder input keeps its
// shape. Consumes exactly one uniform draw per content token.
inline std::vector<int> apply_word_dropout(const std::vector<int>& tokens, double rate,
                                           Rng& rng) {
  std::vector<int> out = tokens;
  for (int& id : out) {
    if (id == kSosId || id == kEosId || id == kPadId) continue;
    if (rng.bernoulli(rate)) id = kUnkId;
  }
  return out;
}

}  // namespace cga
