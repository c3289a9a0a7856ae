#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cga/objectives.hpp"

// Reverse-mode differentiation over dense Eigen matrices. A Tape is built
// forward by the ops below and differentiated once; creation order is the
// topological order, so backward() just walks the node list in reverse.
// Tapes are throwaway: one per training step, parameters re-bound as leaves.

namespace cga {

template <class S>
class Tape {
 public:
  using M = Mat<S>;

  // track = false gives a value-only tape: same forward code paths, no
  // gradient storage, backward() forbidden. Used for generation and eval.
  explicit Tape(bool track = true) : track_(track) {}

  bool tracking() const { return track_; }

  int leaf(const M& value) { return push(value); }

  int size() const { return static_cast<int>(values_.size()); }

  const M& value(int id) const { return values_.at(id); }
  const M& grad(int id) const { return grads_.at(id); }

  int matmul(int a, int b) {
    if (values_[a].cols() != values_[b].rows())
      throw std::invalid_argument("matmul: inner dimensions disagree");
    const int out = push(values_[a] * values_[b]);
    backs_[out] = [this, a, b, out] {
      grads_[a] += grads_[out] * values_[b].transpose();
      grads_[b] += values_[a].transpose() * grads_[out];
    };
    return out;
  }

  int add(int a, int b) {
    const int out = push(values_[a] + values_[b]);
    backs_[out] = [this, a, b, out] {
      grads_[a] += grads_[out];
      grads_[b] += grads_[out];
    };
    return out;
  }

  int sub(int a, int b) {
    const int out = push(values_[a] - values_[b]);
    backs_[out] = [this, a, b, out] {
      grads_[a] += grads_[out];
      grads_[b] -= grads_[out];
    };
    return out;
  }

  int cmul(int a, int b) {
    const int out = push(values_[a].cwiseProduct(values_[b]));
    backs_[out] = [this, a, b, out] {
      grads_[a] += grads_[out].cwiseProduct(values_[b]);
      grads_[b] += grads_[out].cwiseProduct(values_[a]);
    };
    return out;
  }

  int scale(int a, double c) {
    const int out = push(values_[a] * S(c));
    backs_[out] = [this, a, out, c] { grads_[a] += grads_[out] * S(c); };
    return out;
  }

  // col broadcast against every column of m.
  int add_bcast_col(int m, int c) {
    const int out = push(values_[m].colwise() + values_[c].col(0));
    backs_[out] = [this, m, c, out] {
      grads_[m] += grads_[out];
      grads_[c].col(0) += grads_[out].rowwise().sum();
    };
    return out;
  }

  int sub_bcast_col(int m, int c) {
    const int out = push(values_[m].colwise() - values_[c].col(0));
    backs_[out] = [this, m, c, out] {
      grads_[m] += grads_[out];
      grads_[c].col(0) -= grads_[out].rowwise().sum();
    };
    return out;
  }

  int mul_bcast_col(int m, int c) {
    const int out =
        push((values_[m].array().colwise() * values_[c].col(0).array()).matrix());
    backs_[out] = [this, m, c, out] {
      grads_[m].array() += grads_[out].array().colwise() * values_[c].col(0).array();
      grads_[c].col(0).array() +=
          (grads_[out].array() * values_[m].array()).rowwise().sum();
    };
    return out;
  }

  int sigmoid(int a) {
    M v = values_[a];
    for (Eigen::Index j = 0; j < v.size(); ++j)
      v.data()[j] = S(1) / (S(1) + std::exp(-v.data()[j]));
    const int out = push(std::move(v));
    backs_[out] = [this, a, out] {
      const M& s = values_[out];
      grads_[a].array() += grads_[out].array() * s.array() * (S(1) - s.array());
    };
    return out;
  }

  int tanh_(int a) {
    const int out = push(values_[a].array().tanh().matrix());
    backs_[out] = [this, a, out] {
      grads_[a].array() +=
          grads_[out].array() * (S(1) - values_[out].array() * values_[out].array());
    };
    return out;
  }

  int relu(int a) {
    const int out = push(values_[a].cwiseMax(S(0)));
    backs_[out] = [this, a, out] {
      grads_[a].array() +=
          grads_[out].array() * (values_[a].array() > S(0)).template cast<S>();
    };
    return out;
  }

  int exp_(int a) {
    const int out = push(values_[a].array().exp().matrix());
    backs_[out] = [this, a, out] {
      grads_[a].array() += grads_[out].array() * values_[out].array();
    };
    return out;
  }

  int log_(int a) {
    const int out = push(values_[a].array().log().matrix());
    backs_[out] = [this, a, out] {
      grads_[a].array() += grads_[out].array() / values_[a].array();
    };
    return out;
  }

  int square(int a) {
    const int out = push(values_[a].cwiseProduct(values_[a]));
    backs_[out] = [this, a, out] {
      grads_[a].array() += S(2) * grads_[out].array() * values_[a].array();
    };
    return out;
  }

  // (a + eps)^{-1/2}; eps keeps the pole away from zero variances.
  int rsqrt_eps(int a, double eps) {
    const int out = push((values_[a].array() + S(eps)).rsqrt().matrix());
    backs_[out] = [this, a, out] {
      grads_[a].array() += S(-0.5) * grads_[out].array() * values_[out].array() *
                           values_[out].array() * values_[out].array();
    };
    return out;
  }

  int sum_all(int a) {
    M v(1, 1);
    v(0, 0) = values_[a].sum();
    const int out = push(std::move(v));
    backs_[out] = [this, a, out] {
      grads_[a].array() += grads_[out](0, 0);
    };
    return out;
  }

  int mean_cols(int a) {
    const auto cols = values_[a].cols();
    M v = values_[a].rowwise().mean();
    const int out = push(std::move(v));
    backs_[out] = [this, a, out, cols] {
      const S inv = S(1) / S(static_cast<double>(cols));
      grads_[a].colwise() += (grads_[out].col(0) * inv).eval();
    };
    return out;
  }

  // Row-wise maximum over columns (n x m -> n x 1). The gradient goes to the
  // first column attaining the maximum in each row.
  int rowmax_cols(int a) {
    const M& x = values_[a];
    if (x.cols() < 1) throw std::invalid_argument("rowmax_cols: empty input");
    M v(x.rows(), 1);
    std::vector<Eigen::Index> arg(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      Eigen::Index j;
      v(i, 0) = x.row(i).maxCoeff(&j);
      arg[static_cast<std::size_t>(i)] = j;
    }
    const int out = push(std::move(v));
    backs_[out] = [this, a, out, arg = std::move(arg)] {
      for (Eigen::Index i = 0; i < grads_[a].rows(); ++i)
        grads_[a](i, arg[static_cast<std::size_t>(i)]) += grads_[out](i, 0);
    };
    return out;
  }

  int vcat(int a, int b) {
    if (values_[a].cols() != values_[b].cols())
      throw std::invalid_argument("vcat: column counts disagree");
    M v(values_[a].rows() + values_[b].rows(), values_[a].cols());
    v.topRows(values_[a].rows()) = values_[a];
    v.bottomRows(values_[b].rows()) = values_[b];
    const int out = push(std::move(v));
    const auto ra = values_[a].rows();
    const auto rb = values_[b].rows();
    backs_[out] = [this, a, b, out, ra, rb] {
      grads_[a] += grads_[out].topRows(ra);
      grads_[b] += grads_[out].bottomRows(rb);
    };
    return out;
  }

  // Column vectors side by side into a d x B matrix.
  int stack_cols(const std::vector<int>& cols) {
    if (cols.empty()) throw std::invalid_argument("stack_cols: no columns");
    const auto rows = values_[cols[0]].rows();
    M v(rows, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (values_[cols[j]].cols() != 1 || values_[cols[j]].rows() != rows)
        throw std::invalid_argument("stack_cols: inputs must be equal-length columns");
      v.col(static_cast<Eigen::Index>(j)) = values_[cols[j]].col(0);
    }
    const int out = push(std::move(v));
    std::vector<int> sources = cols;
    backs_[out] = [this, sources, out] {
      for (std::size_t j = 0; j < sources.size(); ++j)
        grads_[sources[j]].col(0) += grads_[out].col(static_cast<Eigen::Index>(j));
    };
    return out;
  }

  int col(int m, int j) {
    const int out = push(M(values_[m].col(j)));
    backs_[out] = [this, m, j, out] { grads_[m].col(j) += grads_[out].col(0); };
    return out;
  }

  // Column `token` of the embedding matrix; only that column gets gradient.
  int embedding_col(int emb, int token) {
    if (token < 0 || token >= values_[emb].cols())
      throw std::out_of_range("embedding_col: token id out of range");
    const int out = push(M(values_[emb].col(token)));
    backs_[out] = [this, emb, token, out] {
      grads_[emb].col(token) += grads_[out].col(0);
    };
    return out;
  }

  // Fused cross entropy of one softmax row: logsumexp(l) - l[target].
  int softmax_xent(int logits, int target) {
    const M& l = values_[logits];
    if (l.cols() != 1) throw std::invalid_argument("softmax_xent: logits must be a column");
    if (target < 0 || target >= l.rows())
      throw std::out_of_range("softmax_xent: target out of range");
    const S m = l.col(0).maxCoeff();
    const S lse = m + std::log((l.col(0).array() - m).exp().sum());
    M v(1, 1);
    v(0, 0) = lse - l(target, 0);
    const int out = push(std::move(v));
    backs_[out] = [this, logits, target, out, lse] {
      const S g = grads_[out](0, 0);
      grads_[logits].col(0).array() +=
          g * (values_[logits].col(0).array() - lse).exp();
      grads_[logits](target, 0) -= g;
    };
    return out;
  }

  int logsumexp_col(int logits) {
    const M& l = values_[logits];
    if (l.cols() != 1) throw std::invalid_argument("logsumexp_col: input must be a column");
    const S m = l.col(0).maxCoeff();
    const S lse = m + std::log((l.col(0).array() - m).exp().sum());
    M v(1, 1);
    v(0, 0) = lse;
    const int out = push(std::move(v));
    backs_[out] = [this, logits, out, lse] {
      grads_[logits].col(0).array() +=
          grads_[out](0, 0) * (values_[logits].col(0).array() - lse).exp();
    };
    return out;
  }

  // KL(N(mu, exp(logvar)) || N(0, I)) summed over dimensions, as one node.
  int gaussian_kl_node(int mu, int logvar) {
    const M& m = values_[mu];
    const M& lv = values_[logvar];
    if (m.rows() != lv.rows() || m.cols() != 1 || lv.cols() != 1)
      throw std::invalid_argument("gaussian_kl_node: expects equal-length columns");
    M v(1, 1);
    v(0, 0) = S(0.5) * (m.col(0).array().square() + lv.col(0).array().exp() - S(1) -
                        lv.col(0).array())
                           .sum();
    const int out = push(std::move(v));
    backs_[out] = [this, mu, logvar, out] {
      const S g = grads_[out](0, 0);
      grads_[mu].col(0) += g * values_[mu].col(0);
      grads_[logvar].col(0).array() +=
          g * S(0.5) * (values_[logvar].col(0).array().exp() - S(1));
    };
    return out;
  }

  // z = mu + exp(0.5 logvar) * noise, with the noise held constant.
  int reparam(int mu, int logvar, const M& noise) {
    const M& m = values_[mu];
    const M& lv = values_[logvar];
    if (m.rows() != lv.rows() || m.rows() != noise.rows() || m.cols() != 1)
      throw std::invalid_argument("reparam: dimension mismatch");
    M std_half = (lv.array() * S(0.5)).exp().matrix();
    const int out = push((m.array() + std_half.array() * noise.array()).matrix());
    M eps = noise;
    backs_[out] = [this, mu, logvar, out, eps] {
      grads_[mu] += grads_[out];
      grads_[logvar].array() += grads_[out].array() * S(0.5) *
                                (values_[logvar].array() * S(0.5)).exp() * eps.array();
    };
    return out;
  }

  // L1 distance to a constant target. Subgradient 0 where the difference is
  // exactly zero.
  int l1_to_const(int a, const M& target) {
    const M& v = values_[a];
    if (v.rows() != target.rows() || v.cols() != target.cols())
      throw std::invalid_argument("l1_to_const: dimension mismatch");
    M out_v(1, 1);
    out_v(0, 0) = (v - target).array().abs().sum();
    const int out = push(std::move(out_v));
    M tgt = target;
    backs_[out] = [this, a, out, tgt] {
      const S g = grads_[out](0, 0);
      grads_[a].array() += g * (values_[a] - tgt).array().sign();
    };
    return out;
  }

  void backward(int root) {
    if (!track_) throw std::logic_error("backward: tape is value-only");
    if (values_.at(root).rows() != 1 || values_.at(root).cols() != 1)
      throw std::invalid_argument("backward: root must be scalar");
    grads_[root](0, 0) = S(1);
    for (int i = root; i >= 0; --i)
      if (backs_[i]) backs_[i]();
  }

 private:
  int push(M value) {
    const int id = static_cast<int>(values_.size());
    grads_.emplace_back(track_ ? M(M::Zero(value.rows(), value.cols())) : M());
    values_.push_back(std::move(value));
    backs_.emplace_back();
    return id;
  }

  bool track_ = true;
  std::vector<M> values_;
  std::vector<M> grads_;
  std::vector<std::function<void()>> backs_;
};

}  // namespace cga
