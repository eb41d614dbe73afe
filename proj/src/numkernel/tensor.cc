#include "decsde/numkernel/tensor.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace decsde::numkernel {

int64_t shape_size(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw DimensionError("negative dimension in shape " + shape_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + ": shape " + shape_string(a) + " vs " + shape_string(b));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(static_cast<size_t>(shape_size(shape_)), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<int64_t>(data_.size()) != shape_size(shape_)) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
  }
}

template <typename T>
void Tensor<T>::bad_rank(const char* what) const {
  throw DimensionError(std::string(what) + " on rank-" + std::to_string(shape_.size()) + " tensor");
}

template <typename T>
T Tensor<T>::item() const {
  if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (T v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  return Tensor(std::move(shape), data_);
}

namespace {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMajor<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMajor<T>>;

void product_shape(const Shape& a, const Shape& b, bool ta, bool tb, int64_t& m, int64_t& k, int64_t& p) {
  if (a.size() != 2 || b.size() != 2) {
    throw DimensionError("matmul needs rank-2 operands, got " + shape_string(a) + " and " + shape_string(b));
  }
  m = ta ? a[1] : a[0];
  k = ta ? a[0] : a[1];
  const int64_t kb = tb ? b[1] : b[0];
  p = tb ? b[0] : b[1];
  if (k != kb) {
    throw DimensionError("matmul inner dimensions differ: " + shape_string(a) + (ta ? "^T" : "") + " x " +
                         shape_string(b) + (tb ? "^T" : ""));
  }
}

}  // namespace

template <typename T>
void matmul_accumulate(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out, bool trans_a, bool trans_b, T alpha) {
  int64_t m, k, p;
  product_shape(a.shape(), b.shape(), trans_a, trans_b, m, k, p);
  if (out.shape() != Shape{m, p}) {
    throw DimensionError("matmul output shape " + shape_string(out.shape()) + " expected " + shape_string({m, p}));
  }
  if (m == 0 || p == 0 || k == 0) return;
  ConstMap<T> ma(a.data(), a.dim(0), a.dim(1));
  ConstMap<T> mb(b.data(), b.dim(0), b.dim(1));
  MutMap<T> mo(out.data(), m, p);
  if (!trans_a && !trans_b) {
    mo.noalias() += alpha * (ma * mb);
  } else if (!trans_a && trans_b) {
    mo.noalias() += alpha * (ma * mb.transpose());
  } else if (trans_a && !trans_b) {
    mo.noalias() += alpha * (ma.transpose() * mb);
  } else {
    mo.noalias() += alpha * (ma.transpose() * mb.transpose());
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a, bool trans_b) {
  int64_t m, k, p;
  product_shape(a.shape(), b.shape(), trans_a, trans_b, m, k, p);
  Tensor<T> out({m, p});
  matmul_accumulate(a, b, out, trans_a, trans_b, T(1));
  return out;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  const int64_t r = a.rows(), c = a.cols();
  Tensor<T> out({c, r});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) out(j, i) = a(i, j);
  return out;
}

template <typename T>
void softmax_rows_inplace(Tensor<T>& x) {
  const int64_t r = x.rows(), c = x.cols();
  for (int64_t i = 0; i < r; ++i) {
    T* row = x.data() + i * c;
    const T mx = *std::max_element(row, row + c);
    T sum = 0;
    for (int64_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const T inv = T(1) / sum;
    for (int64_t j = 0; j < c; ++j) row[j] *= inv;
  }
}

template <typename T>
void log_softmax_row(std::span<const T> logits, std::span<T> out) {
  const T mx = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (T v : logits) sum += std::exp(v - mx);
  const T lse = mx + std::log(sum);
  for (size_t j = 0; j < logits.size(); ++j) out[j] = logits[j] - lse;
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  T m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

#define DECSDE_INSTANTIATE(T)                                                                          \
  template class Tensor<T>;                                                                            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&, bool, bool);                           \
  template void matmul_accumulate(const Tensor<T>&, const Tensor<T>&, Tensor<T>&, bool, bool, T);      \
  template Tensor<T> transpose(const Tensor<T>&);                                                      \
  template void softmax_rows_inplace(Tensor<T>&);                                                      \
  template void log_softmax_row(std::span<const T>, std::span<T>);                                     \
  template T max_abs_diff(const Tensor<T>&, const Tensor<T>&);

DECSDE_INSTANTIATE(float)
DECSDE_INSTANTIATE(double)
#undef DECSDE_INSTANTIATE

}  // namespace decsde::numkernel
