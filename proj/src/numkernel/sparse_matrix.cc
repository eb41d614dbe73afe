#include "decsde/numkernel/sparse_matrix.h"

#include <algorithm>

namespace decsde::numkernel {

SparseMatrix SparseMatrix::from_entries(int64_t rows, int64_t cols, std::vector<SparseEntry> entries) {
  if (rows < 0 || cols < 0) throw DimensionError("sparse matrix with negative dimension");
  std::sort(entries.begin(), entries.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  m.col_.reserve(entries.size());
  m.weight_.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
      throw IndexError("sparse entry (" + std::to_string(e.row) + "," + std::to_string(e.col) + ") outside " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (!(e.weight > 0)) throw ContractError("sparse entry weights must be positive");
    if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      throw ContractError("duplicate sparse entry (" + std::to_string(e.row) + "," + std::to_string(e.col) + ")");
    }
    m.col_.push_back(e.col);
    m.weight_.push_back(e.weight);
    m.row_start_[static_cast<size_t>(e.row) + 1]++;
  }
  for (size_t r = 0; r < static_cast<size_t>(rows); ++r) m.row_start_[r + 1] += m.row_start_[r];
  return m;
}

std::span<const int64_t> SparseMatrix::row_cols(int64_t r) const {
  const size_t b = row_start_.at(static_cast<size_t>(r)), e = row_start_.at(static_cast<size_t>(r) + 1);
  return {col_.data() + b, e - b};
}

std::span<const double> SparseMatrix::row_weights(int64_t r) const {
  const size_t b = row_start_.at(static_cast<size_t>(r)), e = row_start_.at(static_cast<size_t>(r) + 1);
  return {weight_.data() + b, e - b};
}

std::vector<SparseEntry> SparseMatrix::entries() const {
  std::vector<SparseEntry> out;
  out.reserve(nnz());
  for (int64_t r = 0; r < rows_; ++r) {
    auto c = row_cols(r);
    auto w = row_weights(r);
    for (size_t i = 0; i < c.size(); ++i) out.push_back({r, c[i], w[i]});
  }
  return out;
}

SparseMatrix SparseMatrix::select_rows(std::span<const int64_t> rows) const {
  SparseMatrix out(static_cast<int64_t>(rows.size()), cols_);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= rows_) throw IndexError("select_rows: row " + std::to_string(rows[i]));
    auto c = row_cols(rows[i]);
    auto w = row_weights(rows[i]);
    out.col_.insert(out.col_.end(), c.begin(), c.end());
    out.weight_.insert(out.weight_.end(), w.begin(), w.end());
    out.row_start_[i + 1] = out.col_.size();
  }
  return out;
}

template <typename T>
Tensor<T> SparseMatrix::densify() const {
  Tensor<T> out({rows_, cols_});
  for (int64_t r = 0; r < rows_; ++r) {
    auto c = row_cols(r);
    auto w = row_weights(r);
    for (size_t i = 0; i < c.size(); ++i) out(r, c[i]) = static_cast<T>(w[i]);
  }
  return out;
}

template <typename T>
Tensor<T> bag_sum(const SparseMatrix& bon, const Tensor<T>& table) {
  if (table.rank() != 2) throw DimensionError("bag_sum table must be rank-2, got " + shape_string(table.shape()));
  if (bon.cols() != table.rows()) {
    throw DimensionError("bag_sum: sparse cols " + std::to_string(bon.cols()) + " vs table rows " +
                         std::to_string(table.rows()));
  }
  const int64_t d = table.cols();
  Tensor<T> out({bon.rows(), d});
  for (int64_t b = 0; b < bon.rows(); ++b) {
    auto cols = bon.row_cols(b);
    auto w = bon.row_weights(b);
    T* dst = out.data() + b * d;
    for (size_t i = 0; i < cols.size(); ++i) {
      const T* src = table.data() + cols[i] * d;
      const T wi = static_cast<T>(w[i]);
      for (int64_t k = 0; k < d; ++k) dst[k] += wi * src[k];
    }
  }
  return out;
}

template <typename T>
void bag_sum_backward(const SparseMatrix& bon, const Tensor<T>& grad_out, Tensor<T>& grad_table) {
  const int64_t d = grad_table.cols();
  for (int64_t b = 0; b < bon.rows(); ++b) {
    auto cols = bon.row_cols(b);
    auto w = bon.row_weights(b);
    const T* g = grad_out.data() + b * d;
    for (size_t i = 0; i < cols.size(); ++i) {
      T* dst = grad_table.data() + cols[i] * d;
      const T wi = static_cast<T>(w[i]);
      for (int64_t k = 0; k < d; ++k) dst[k] += wi * g[k];
    }
  }
}

template Tensor<float> SparseMatrix::densify<float>() const;
template Tensor<double> SparseMatrix::densify<double>() const;
template Tensor<float> bag_sum(const SparseMatrix&, const Tensor<float>&);
template Tensor<double> bag_sum(const SparseMatrix&, const Tensor<double>&);
template void bag_sum_backward(const SparseMatrix&, const Tensor<float>&, Tensor<float>&);
template void bag_sum_backward(const SparseMatrix&, const Tensor<double>&, Tensor<double>&);

}  // namespace decsde::numkernel
