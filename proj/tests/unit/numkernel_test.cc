#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "decsde/common/random.h"
#include "decsde/numkernel/gradcheck.h"
#include "decsde/numkernel/ops.h"

using namespace decsde;
using namespace decsde::numkernel;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Element-wise triple loop, independent of the Eigen-backed kernel.
Tensor<double> matmul_oracle(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> out({a.rows(), b.cols()});
  for (int64_t i = 0; i < a.rows(); ++i)
    for (int64_t j = 0; j < b.cols(); ++j) {
      double s = 0;
      for (int64_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

SparseMatrix random_sparse(int64_t rows, int64_t cols, double density, Rng& rng) {
  std::vector<SparseEntry> entries;
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c)
      if (rng.bernoulli(density)) entries.push_back({r, c, static_cast<double>(1 + rng.below(3))});
  return SparseMatrix::from_entries(rows, cols, std::move(entries));
}

}  // namespace

TEST(Matmul, IdentityIsNeutral) {
  Tensor<double> eye({2, 2}, {1, 0, 0, 1});
  Tensor<double> a({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(matmul(eye, a), a);
}

TEST(Matmul, SmallProduct) {
  Tensor<double> a({2, 2}, {1, 2, 3, 4});
  Tensor<double> b({2, 1}, {1, 1});
  EXPECT_EQ(matmul(a, b), Tensor<double>({2, 1}, {3, 7}));
}

TEST(Matmul, MatchesTripleLoopOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_tensor<double>({3, 4}, rng);
    auto b = random_tensor<double>({4, 2}, rng);
    EXPECT_LE(max_abs_diff(matmul(a, b), matmul_oracle(a, b)), 1e-6);
    // transposed operand path
    EXPECT_LE(max_abs_diff(matmul(a, transpose(b), false, true), matmul_oracle(a, b)), 1e-12);
  }
}

TEST(Matmul, AssociativityAgreesWithOracle) {
  Rng rng(12);
  auto a = random_tensor<double>({3, 5}, rng);
  auto b = random_tensor<double>({5, 4}, rng);
  auto c = random_tensor<double>({4, 2}, rng);
  auto left = matmul(matmul(a, b), c);
  auto right = matmul(a, matmul(b, c));
  EXPECT_LE(max_abs_diff(left, right), 1e-12);
  EXPECT_LE(max_abs_diff(left, matmul_oracle(matmul_oracle(a, b), c)), 1e-12);
}

TEST(Matmul, ShapeMismatchThrows) {
  Tensor<float> a({2, 3});
  Tensor<float> b({2, 3});
  EXPECT_THROW(matmul(a, b), DimensionError);
}

TEST(BagSum, EmptyRowIsZero) {
  auto bon = SparseMatrix::from_entries(2, 3, {{1, 0, 1.0}});
  Tensor<float> table({3, 2}, {1, 2, 3, 4, 5, 6});
  auto out = bag_sum(bon, table);
  EXPECT_EQ(out(0, 0), 0.0f);
  EXPECT_EQ(out(0, 1), 0.0f);
}

TEST(BagSum, SingleEntry) {
  auto bon = SparseMatrix::from_entries(1, 3, {{0, 2, 3.0}});
  Tensor<double> table({3, 2}, {0, 0, 0, 0, 1, -1});
  EXPECT_EQ(bag_sum(bon, table), Tensor<double>({1, 2}, {3, -3}));
}

TEST(BagSum, MatchesDensifiedMatmul) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t rows = 1 + static_cast<int64_t>(rng.below(8));
    const int64_t cols = 1 + static_cast<int64_t>(rng.below(12));
    auto bon = random_sparse(rows, cols, 0.3, rng);
    auto table = random_tensor<double>({cols, 5}, rng);
    EXPECT_LE(max_abs_diff(bag_sum(bon, table), matmul_oracle(bon.densify<double>(), table)), 1e-6);
  }
}

TEST(BagSum, ColumnOutOfRangeRejected) {
  EXPECT_THROW(SparseMatrix::from_entries(1, 2, {{0, 2, 1.0}}), IndexError);
  auto bon = SparseMatrix::from_entries(1, 4, {{0, 3, 1.0}});
  Tensor<float> table({3, 2});
  EXPECT_THROW(bag_sum(bon, table), DimensionError);
}

TEST(SparseMatrix, RejectsDuplicatesAndNonPositive) {
  EXPECT_THROW(SparseMatrix::from_entries(1, 2, {{0, 1, 1.0}, {0, 1, 2.0}}), ContractError);
  EXPECT_THROW(SparseMatrix::from_entries(1, 2, {{0, 1, 0.0}}), ContractError);
}

TEST(Elementwise, TanhOfZero) {
  Tape<float> tape;
  auto y = tanh(tape, tape.constant(Tensor<float>({1, 1})));
  EXPECT_EQ(tape.value(y)[0], 0.0f);
}

TEST(Softmax, SingleElementIsOne) {
  Tape<double> tape;
  auto y = softmax_cols(tape, tape.constant(Tensor<double>({1, 1}, {3.7})));
  EXPECT_EQ(tape.value(y)[0], 1.0);
}

TEST(Softmax, LargeEqualLogitsDoNotOverflow) {
  Tape<float> tape(false);
  auto y = softmax_cols(tape, tape.constant(Tensor<float>({2, 1}, {1000.0f, 1000.0f})));
  EXPECT_FLOAT_EQ(tape.value(y)[0], 0.5f);
  EXPECT_FLOAT_EQ(tape.value(y)[1], 0.5f);
}

TEST(Softmax, ColumnsAreDistributions) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Tape<double> tape(false);
    auto x = random_tensor<double>({1 + static_cast<int64_t>(rng.below(9)), 4}, rng, -30, 30);
    const auto& y = tape.value(softmax_cols(tape, tape.constant(x)));
    for (int64_t j = 0; j < y.cols(); ++j) {
      double s = 0;
      for (int64_t i = 0; i < y.rows(); ++i) {
        EXPECT_GE(y(i, j), 0.0);
        s += y(i, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Tape, NonFiniteValueRaises) {
  kernel_settings().check_finite = true;
  Tape<double> tape;
  auto x = tape.constant(Tensor<double>({1, 1}, {std::numeric_limits<double>::infinity()}));
  EXPECT_THROW(tanh(tape, scale(tape, x, 0.0)), NumericError);
}

TEST(Backward, MatchesFiniteDifferencesForTanhOfProduct) {
  Rng rng(21);
  ParameterSet<double> ps;
  auto& w = ps.create_uniform("w", {3, 4}, 1.0, rng);
  const auto x = random_tensor<double>({4, 2}, rng);
  std::function<Var(Tape<double>&)> loss = [&](Tape<double>& t) {
    return sum(t, tanh(t, matmul(t, t.param(w), t.constant(x))));
  };
  auto report = finite_diff_check<double>(loss, ps.all());
  EXPECT_LT(report.max_rel_error, 1e-4);
}

TEST(Backward, UnusedParameterGetsExactlyZero) {
  ParameterSet<double> ps;
  auto& used = ps.create_constant("used", {2, 2}, 0.5);
  auto& unused = ps.create_constant("unused", {2, 2}, 0.5);
  Tape<double> tape;
  auto loss = sum(tape, tanh(tape, tape.param(used)));
  tape.backward(loss);
  for (double g : unused.grad.values()) EXPECT_EQ(g, 0.0);
  EXPECT_NE(used.grad[0], 0.0);
}

TEST(Backward, TwoPassesWithoutZeroingDouble) {
  Rng rng(4);
  ParameterSet<double> ps;
  auto& w = ps.create_uniform("w", {2, 3}, 1.0, rng);
  auto pass = [&] {
    Tape<double> tape;
    tape.backward(sum(tape, tanh(tape, tape.param(w))));
  };
  pass();
  const auto once = w.grad;
  pass();
  for (size_t i = 0; i < once.size(); ++i) EXPECT_EQ(w.grad[i], 2.0 * once[i]);
}

TEST(Backward, NonScalarLossIsContractError) {
  ParameterSet<double> ps;
  auto& w = ps.create_constant("w", {2, 2}, 1.0);
  Tape<double> tape;
  auto y = tanh(tape, tape.param(w));
  EXPECT_THROW(tape.backward(y), ContractError);
}

TEST(FiniteDiffCheck, QuadraticIsExact) {
  ParameterSet<double> ps;
  auto& w = ps.create("w", {1, 3});
  w.value = Tensor<double>({1, 3}, {0.5, -1.25, 2.0});
  // sum(w*w) via matmul(w, w^T); central differences are exact for quadratics.
  std::function<Var(Tape<double>&)> loss = [&](Tape<double>& t) {
    auto p = t.param(w);
    return sum(t, matmul(t, p, p, true));
  };
  auto report = finite_diff_check<double>(loss, ps.all(), {.step = 1e-3, .floor = 1e-12});
  EXPECT_LT(report.max_rel_error, 1e-9);
  EXPECT_DOUBLE_EQ(w.grad[1], -2.5);
}

TEST(FiniteDiffCheck, ConstantFunctionHasZeroGradients) {
  ParameterSet<double> ps;
  auto& w = ps.create_constant("w", {2, 2}, 1.0);
  std::function<Var(Tape<double>&)> loss = [&](Tape<double>& t) {
    t.param(w);
    return t.constant(Tensor<double>::scalar(3.0));
  };
  auto report = finite_diff_check<double>(loss, ps.all());
  EXPECT_EQ(report.max_rel_error, 0.0);
  for (double g : w.grad.values()) EXPECT_EQ(g, 0.0);
}

// Every differentiable op against central differences on randomized shapes.
TEST(OpGradients, RandomizedShapesProperty) {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int64_t m = 1 + static_cast<int64_t>(rng.below(4));
    const int64_t k = 2 + static_cast<int64_t>(rng.below(4));
    // layer_norm over two features is degenerate (output is +-gamma), so n >= 3
    const int64_t n = 3 + static_cast<int64_t>(rng.below(3));
    ParameterSet<double> ps;
    auto& a = ps.create_uniform("a", {m, k}, 1.0, rng);
    auto& b = ps.create_uniform("b", {n, k}, 1.0, rng);
    auto& bias = ps.create_uniform("bias", {n}, 1.0, rng);
    auto& gamma = ps.create_uniform("gamma", {n}, 1.0, rng);
    auto& beta = ps.create_uniform("beta", {n}, 1.0, rng);
    auto& table = ps.create_uniform("table", {5, k}, 1.0, rng);
    auto bon = random_sparse(m, 5, 0.5, rng);
    const auto weights = random_tensor<double>({m + 3, n}, rng);
    const std::vector<int64_t> ids = {4, 0, 4};
    const uint64_t drop_seed = rng.next();

    std::function<Var(Tape<double>&)> loss = [&](Tape<double>& t) {
      Rng drop(drop_seed);
      auto x = add(t, t.param(a), bag_sum(t, bon, t.param(table)));
      auto h = add_bias(t, matmul(t, x, t.param(b), true), t.param(bias));
      h = layer_norm(t, h, t.param(gamma), t.param(beta));
      h = concat_rows(t, tanh(t, h), relu(t, matmul(t, gather_rows(t, t.param(table), ids), t.param(b), true)));
      h = dropout(t, h, 0.25, drop);
      h = add(t, softmax_rows(t, h), scale(t, softmax_cols(t, h), 0.5));
      auto w = t.constant(weights);
      return sum(t, matmul(t, h, w, true));
    };
    auto report = finite_diff_check<double>(loss, ps.all());
    EXPECT_LT(report.max_rel_error, 1e-4) << "worst " << report.worst_param;
  }
}

TEST(OpGradients, AttentionAndCrossEntropy) {
  Rng rng(123);
  for (int trial = 0; trial < 6; ++trial) {
    const int64_t B = 2, Lq = 3, Lk = 4, d = 4, V = 5;
    ParameterSet<double> ps;
    auto& q = ps.create_uniform("q", {B * Lq, d}, 1.0, rng);
    auto& k = ps.create_uniform("k", {B * Lk, d}, 1.0, rng);
    auto& v = ps.create_uniform("v", {B * Lk, d}, 1.0, rng);
    auto& out = ps.create_uniform("out", {V, d}, 1.0, rng);
    AttentionSpec spec{.batch = B, .q_len = Lq, .k_len = Lk, .heads = 2, .causal = trial % 2 == 1,
                       .key_valid = {1, 1, 1, 0, 1, 1, 0, 0}};
    std::vector<int64_t> targets = {1, 0, 4, 2, -1, 3};
    const double eps = trial % 3 == 0 ? 0.0 : 0.1;
    std::function<Var(Tape<double>&)> loss = [&](Tape<double>& t) {
      auto h = attention(t, t.param(q), t.param(k), t.param(v), spec);
      return cross_entropy(t, matmul(t, h, t.param(out), true), targets, eps, int64_t{-1});
    };
    auto report = finite_diff_check<double>(loss, ps.all());
    EXPECT_LT(report.max_rel_error, 1e-4) << "worst " << report.worst_param;
  }
}

TEST(Attention, WeightsSumToOneAndRespectMask) {
  Rng rng(8);
  Tape<double> tape(false);
  auto q = tape.constant(random_tensor<double>({2 * 3, 4}, rng));
  auto k = tape.constant(random_tensor<double>({2 * 3, 4}, rng));
  AttentionSpec spec{.batch = 2, .q_len = 3, .k_len = 3, .heads = 2, .causal = true, .key_valid = {1, 1, 1, 1, 1, 0}};
  Tensor<double> probs;
  attention(tape, q, k, k, spec, &probs);
  for (int64_t r = 0; r < probs.rows(); ++r) {
    double s = 0;
    for (int64_t j = 0; j < probs.cols(); ++j) s += probs(r, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
    const int64_t i = r % 3;
    for (int64_t j = i + 1; j < 3; ++j) EXPECT_EQ(probs(r, j), 0.0);
  }
  // batch 1 key 2 is padding
  for (int64_t r = 6; r < 12; ++r) EXPECT_EQ(probs(r, 2), 0.0);
}

TEST(Dropout, SeededMaskIsReproducible) {
  auto run = [] {
    Tape<float> tape(false);
    Rng rng(42);
    auto x = tape.constant(Tensor<float>({4, 8}, 1.0f));
    return tape.value(dropout(tape, x, 0.3, rng));
  };
  EXPECT_EQ(run(), run());
}
