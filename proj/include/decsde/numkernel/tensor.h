#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "decsde/common/error.h"

namespace decsde::numkernel {

using Shape = std::vector<int64_t>;

int64_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major tensor. The model works almost entirely with rank-2
// tensors; rank 0/1 appear for scalars and bias vectors.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> data);

  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  int64_t dim(size_t i) const { return shape_.at(i); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_scalar() const { return data_.size() == 1; }

  // Rank-2 view helpers. A rank-1 tensor is treated as a single row.
  int64_t rows() const {
    if (shape_.size() == 2) return shape_[0];
    if (shape_.size() <= 1) return 1;
    bad_rank("rows()");
  }
  int64_t cols() const {
    if (shape_.size() == 2) return shape_[1];
    if (shape_.size() == 1) return shape_[0];
    if (shape_.empty()) return 1;
    bad_rank("cols()");
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }
  T& operator()(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }
  const T& operator()(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols() + c)]; }

  std::span<T> row(int64_t r) { return {data_.data() + r * cols(), static_cast<size_t>(cols())}; }
  std::span<const T> row(int64_t r) const {
    return {data_.data() + r * cols(), static_cast<size_t>(cols())};
  }

  T item() const;
  void fill(T v);
  bool all_finite() const;

  // Same data, new shape with identical element count.
  Tensor reshaped(Shape shape) const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

 private:
  [[noreturn]] void bad_rank(const char* what) const;
  Shape shape_;
  std::vector<T> data_;
};

// Plain (non-recorded) kernels. The tape ops call these and so do the
// inference paths that never need gradients.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a = false, bool trans_b = false);

// out += alpha * op(a) * op(b); out must already have the product shape.
template <typename T>
void matmul_accumulate(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out, bool trans_a, bool trans_b,
                       T alpha = T(1));

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

// Softmax over each row (max-shifted).
template <typename T>
void softmax_rows_inplace(Tensor<T>& x);

// Log-softmax of one row into out (max-shifted).
template <typename T>
void log_softmax_row(std::span<const T> logits, std::span<T> out);

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace decsde::numkernel
