#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decsde/numkernel/tensor.h"

namespace decsde::numkernel {

struct SparseEntry {
  int64_t row;
  int64_t col;
  double weight;
};

// Row-compressed sparse matrix with strictly positive weights. Holds stacked
// bag-of-n-gram count vectors, one row per token.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int64_t rows, int64_t cols) : rows_(rows), cols_(cols), row_start_(static_cast<size_t>(rows) + 1, 0) {}

  // Entries may arrive in any order; they are sorted by (row, col).
  // Duplicates, out-of-range indices and non-positive weights are rejected.
  static SparseMatrix from_entries(int64_t rows, int64_t cols, std::vector<SparseEntry> entries);

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }
  size_t nnz() const { return col_.size(); }

  // Column ids / weights of one row, in increasing column order.
  std::span<const int64_t> row_cols(int64_t r) const;
  std::span<const double> row_weights(int64_t r) const;

  std::vector<SparseEntry> entries() const;

  // Stacks the selected rows into a new matrix with the same column count.
  SparseMatrix select_rows(std::span<const int64_t> rows) const;

  template <typename T>
  Tensor<T> densify() const;

  friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

 private:
  int64_t rows_ = 0;
  int64_t cols_ = 0;
  std::vector<size_t> row_start_{0};
  std::vector<int64_t> col_;
  std::vector<double> weight_;
};

// out[b] = sum_j weight(b, j) * table[j]. Rows with no entries give zeros.
template <typename T>
Tensor<T> bag_sum(const SparseMatrix& bon, const Tensor<T>& table);

// Adjoint of bag_sum with respect to the table: grad_table[j] += w(b,j) * grad_out[b].
template <typename T>
void bag_sum_backward(const SparseMatrix& bon, const Tensor<T>& grad_out, Tensor<T>& grad_table);

}  // namespace decsde::numkernel
