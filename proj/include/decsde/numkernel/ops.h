#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "decsde/common/random.h"
#include "decsde/numkernel/sparse_matrix.h"
#include "decsde/numkernel/tape.h"

namespace decsde::numkernel {

// a[m x k] * b[k x p], or a * b^T when trans_b.
template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b, bool trans_b = false);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

// x[m x n] + bias[n] broadcast over rows.
template <typename T>
Var add_bias(Tape<T>& tape, Var x, Var bias);

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);

template <typename T>
Var tanh(Tape<T>& tape, Var x);

template <typename T>
Var relu(Tape<T>& tape, Var x);

// Inverted dropout with a mask drawn from rng. p == 0 returns x itself.
template <typename T>
Var dropout(Tape<T>& tape, Var x, double p, Rng& rng);

template <typename T>
Var softmax_rows(Tape<T>& tape, Var x);

template <typename T>
Var softmax_cols(Tape<T>& tape, Var x);

// Normalizes each row, then applies gamma[n] and beta[n].
template <typename T>
Var layer_norm(Tape<T>& tape, Var x, Var gamma, Var beta, T eps = T(1e-5));

// out[i] = table[ids[i]].
template <typename T>
Var gather_rows(Tape<T>& tape, Var table, std::span<const int64_t> ids);

// Stacks a on top of b (equal column counts).
template <typename T>
Var concat_rows(Tape<T>& tape, Var a, Var b);

// Embedding bag: out[b] = sum_j bon(b, j) * table[j]. bon must outlive the tape.
template <typename T>
Var bag_sum(Tape<T>& tape, const SparseMatrix& bon, Var table);

// Same, keeping a temporary bon alive until the tape is gone.
template <typename T>
Var bag_sum(Tape<T>& tape, std::shared_ptr<const SparseMatrix> bon, Var table);

template <typename T>
Var sum(Tape<T>& tape, Var x);

struct AttentionSpec {
  int64_t batch = 1;
  int64_t q_len = 1;
  int64_t k_len = 1;
  int64_t heads = 1;
  bool causal = false;
  // batch * k_len flags, 1 = attendable. Empty means every key is valid.
  std::vector<uint8_t> key_valid;
};

// Multi-head scaled dot-product attention over packed [batch*len x d] rows.
// q/k/v are already projected; heads split d into equal slices. When
// probs_out is given it receives the [batch*heads*q_len x k_len] weights.
template <typename T>
Var attention(Tape<T>& tape, Var q, Var k, Var v, const AttentionSpec& spec, Tensor<T>* probs_out = nullptr);

// Mean over rows whose target != ignore_index of
//   (1 - smoothing) * -log p(target) + smoothing * mean_j(-log p(j)).
// Returns a scalar; zero when every row is ignored.
template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const int64_t> targets, T smoothing, int64_t ignore_index);

}  // namespace decsde::numkernel
