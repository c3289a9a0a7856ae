#include "cga/autodiff.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "cga/rng.hpp"

namespace {

using Tape = cga::Tape<double>;
using Matd = cga::Mat<double>;

Matd random_matrix(cga::Rng& rng, int rows, int cols, double lo = -1.5, double hi = 1.5) {
  Matd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Central finite differences on every element of every input against the
// tape's analytic gradients. The builder must return a scalar node.
void check_gradients(std::vector<Matd> inputs,
                     const std::function<int(Tape&, const std::vector<int>&)>& build,
                     double h = 1e-6, double tol = 1e-6) {
  Tape tape;
  std::vector<int> ids;
  for (const auto& m : inputs) ids.push_back(tape.leaf(m));
  const int root = build(tape, ids);
  ASSERT_EQ(tape.value(root).size(), 1);
  tape.backward(root);

  auto eval = [&](const std::vector<Matd>& xs) {
    Tape t;
    std::vector<int> leaf_ids;
    for (const auto& m : xs) leaf_ids.push_back(t.leaf(m));
    return t.value(build(t, leaf_ids))(0, 0);
  };

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index i = 0; i < inputs[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < inputs[k].cols(); ++j) {
        std::vector<Matd> plus = inputs, minus = inputs;
        plus[k](i, j) += h;
        minus[k](i, j) -= h;
        const double fd = (eval(plus) - eval(minus)) / (2 * h);
        const double an = tape.grad(ids[k])(i, j);
        const double denom = std::max({1.0, std::fabs(fd), std::fabs(an)});
        EXPECT_LE(std::fabs(fd - an) / denom, tol)
            << "input " << k << " element (" << i << "," << j << "): fd=" << fd
            << " analytic=" << an;
      }
    }
  }
}

// Weights the op output by a fixed random matrix before reducing, so
// element-wise gradient errors cannot cancel in the sum.
int weighted_sum(Tape& t, int node, const Matd& weights) {
  return t.sum_all(t.cmul(node, t.leaf(weights)));
}

TEST(TapeOps, MatmulAddSubCmulScale) {
  cga::Rng rng(1);
  const Matd a = random_matrix(rng, 3, 4), b = random_matrix(rng, 4, 2);
  const Matd w = random_matrix(rng, 3, 2);
  check_gradients({a, b}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.matmul(in[0], in[1]), w);
  });

  const Matd c = random_matrix(rng, 3, 3), d = random_matrix(rng, 3, 3);
  const Matd w2 = random_matrix(rng, 3, 3);
  check_gradients({c, d}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.add(in[0], in[1]), w2);
  });
  check_gradients({c, d}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.sub(in[0], in[1]), w2);
  });
  check_gradients({c, d}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.cmul(in[0], in[1]), w2);
  });
  check_gradients({c}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.scale(in[0], -1.7), w2);
  });
}

TEST(TapeOps, ColumnBroadcasts) {
  cga::Rng rng(2);
  const Matd m = random_matrix(rng, 4, 3);
  const Matd c = random_matrix(rng, 4, 1);
  const Matd w = random_matrix(rng, 4, 3);
  check_gradients({m, c}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.add_bcast_col(in[0], in[1]), w);
  });
  check_gradients({m, c}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.sub_bcast_col(in[0], in[1]), w);
  });
  check_gradients({m, c}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.mul_bcast_col(in[0], in[1]), w);
  });
}

TEST(TapeOps, ElementwiseNonlinearities) {
  cga::Rng rng(3);
  const Matd a = random_matrix(rng, 3, 3);
  const Matd w = random_matrix(rng, 3, 3);
  for (auto op : {+[](Tape& t, int x) { return t.sigmoid(x); },
                  +[](Tape& t, int x) { return t.tanh_(x); },
                  +[](Tape& t, int x) { return t.exp_(x); },
                  +[](Tape& t, int x) { return t.square(x); }}) {
    check_gradients({a}, [&](Tape& t, const std::vector<int>& in) {
      return weighted_sum(t, op(t, in[0]), w);
    });
  }
  // log and rsqrt need positive inputs.
  const Matd pos = random_matrix(rng, 3, 3, 0.2, 2.0);
  check_gradients({pos}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.log_(in[0]), w);
  });
  check_gradients({pos}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.rsqrt_eps(in[0], 1e-3), w);
  });
  // relu, away from the kink.
  Matd far = random_matrix(rng, 3, 3);
  for (int i = 0; i < far.size(); ++i)
    if (std::fabs(far.data()[i]) < 0.05) far.data()[i] = 0.5;
  check_gradients({far}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.relu(in[0]), w);
  });
}

TEST(TapeOps, ReductionsAndReshapes) {
  cga::Rng rng(4);
  const Matd m = random_matrix(rng, 3, 4);
  check_gradients({m}, [&](Tape& t, const std::vector<int>& in) {
    return t.sum_all(in[0]);
  });
  const Matd wc = random_matrix(rng, 3, 1);
  check_gradients({m}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.mean_cols(in[0]), wc);
  });

  const Matd a = random_matrix(rng, 2, 3), b = random_matrix(rng, 4, 3);
  const Matd wv = random_matrix(rng, 6, 3);
  check_gradients({a, b}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.vcat(in[0], in[1]), wv);
  });

  const Matd c1 = random_matrix(rng, 3, 1), c2 = random_matrix(rng, 3, 1),
             c3 = random_matrix(rng, 3, 1);
  const Matd ws = random_matrix(rng, 3, 3);
  check_gradients({c1, c2, c3}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.stack_cols({in[0], in[1], in[2]}), ws);
  });

  check_gradients({m}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.col(in[0], 2), wc);
  });
  check_gradients({m}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.embedding_col(in[0], 1), wc);
  });
}

TEST(TapeOps, RowMaxOverColumns) {
  cga::Rng rng(14);
  // Well-separated entries keep the argmax stable under the probe step.
  const Matd m = random_matrix(rng, 4, 5, -20.0, 20.0);
  const Matd wc = random_matrix(rng, 4, 1);
  check_gradients({m}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.rowmax_cols(in[0]), wc);
  });

  // Forward values and tie handling: the first maximal column wins.
  Tape tape;
  Matd tied(2, 3);
  tied << 7.0, 7.0, 1.0, -2.0, 5.0, 5.0;
  const int node = tape.rowmax_cols(tape.leaf(tied));
  EXPECT_EQ(tape.value(node)(0, 0), 7.0);
  EXPECT_EQ(tape.value(node)(1, 0), 5.0);
  tape.backward(tape.sum_all(node));
  EXPECT_EQ(tape.grad(0)(0, 0), 1.0);
  EXPECT_EQ(tape.grad(0)(0, 1), 0.0);
  EXPECT_EQ(tape.grad(0)(1, 1), 1.0);
  EXPECT_EQ(tape.grad(0)(1, 2), 0.0);
}

TEST(TapeOps, FusedLossNodes) {
  cga::Rng rng(5);
  const Matd logits = random_matrix(rng, 6, 1);
  check_gradients({logits}, [&](Tape& t, const std::vector<int>& in) {
    return t.softmax_xent(in[0], 3);
  });
  check_gradients({logits}, [&](Tape& t, const std::vector<int>& in) {
    return t.logsumexp_col(in[0]);
  });

  const Matd mu = random_matrix(rng, 4, 1), lv = random_matrix(rng, 4, 1);
  check_gradients({mu, lv}, [&](Tape& t, const std::vector<int>& in) {
    return t.gaussian_kl_node(in[0], in[1]);
  });

  const Matd noise = random_matrix(rng, 4, 1);
  const Matd wz = random_matrix(rng, 4, 1);
  check_gradients({mu, lv}, [&](Tape& t, const std::vector<int>& in) {
    return weighted_sum(t, t.reparam(in[0], in[1], noise), wz);
  });

  const Matd target = random_matrix(rng, 4, 1);
  Matd z = random_matrix(rng, 4, 1);
  // Keep every coordinate away from the L1 kink at z == target.
  for (int i = 0; i < 4; ++i)
    if (std::fabs(z(i, 0) - target(i, 0)) < 0.05) z(i, 0) = target(i, 0) + 0.5;
  check_gradients({z}, [&](Tape& t, const std::vector<int>& in) {
    return t.l1_to_const(in[0], target);
  });
}

TEST(TapeOps, CompositeGraphWithSharedNodes) {
  cga::Rng rng(6);
  const Matd x = random_matrix(rng, 3, 1);
  const Matd wmat = random_matrix(rng, 3, 3);
  // y = tanh(Wx); loss = sum(y*y) + sum(y) exercises fan-out accumulation.
  check_gradients({x, wmat}, [&](Tape& t, const std::vector<int>& in) {
    const int y = t.tanh_(t.matmul(in[1], in[0]));
    return t.add(t.sum_all(t.square(y)), t.sum_all(y));
  });
}

TEST(TapeOps, SoftmaxXentMatchesManualComposition) {
  cga::Rng rng(7);
  const Matd logits = random_matrix(rng, 5, 1);
  Tape t;
  const int l = t.leaf(logits);
  const int fused = t.softmax_xent(l, 2);

  Tape t2;
  const int l2 = t2.leaf(logits);
  const int lse = t2.logsumexp_col(l2);
  // lse - l[2] via col extraction and a picking weight.
  Matd pick = Matd::Zero(5, 1);
  pick(2, 0) = 1.0;
  const int picked = t2.sum_all(t2.cmul(l2, t2.leaf(pick)));
  const int manual = t2.sub(lse, picked);

  EXPECT_NEAR(t.value(fused)(0, 0), t2.value(manual)(0, 0), 1e-12);
  t.backward(fused);
  t2.backward(manual);
  for (int i = 0; i < 5; ++i)
    EXPECT_NEAR(t.grad(l)(i, 0), t2.grad(l2)(i, 0), 1e-12);
}

TEST(TapeOps, ShapeErrorsAreRejected) {
  Tape t;
  const int a = t.leaf(Matd::Zero(2, 3));
  const int b = t.leaf(Matd::Zero(2, 3));
  EXPECT_THROW(t.matmul(a, b), std::invalid_argument);
  EXPECT_THROW(t.backward(a), std::invalid_argument);
  EXPECT_THROW(t.embedding_col(a, 5), std::out_of_range);
  const int s = t.sum_all(a);
  EXPECT_NO_THROW(t.backward(s));
  EXPECT_THROW(t.softmax_xent(b, 0), std::invalid_argument);
}

}  // namespace
