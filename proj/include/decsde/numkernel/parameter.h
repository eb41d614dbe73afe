#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "decsde/common/random.h"
#include "decsde/numkernel/tensor.h"

namespace decsde::numkernel {

template <typename T>
struct Parameter {
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  // Bumped whenever value changes (optimizer step, load, manual edit via
  // touch()). Derived caches such as embedding tables compare against it.
  uint64_t version = 0;

  void zero_grad() { grad.fill(T(0)); }
  void touch() { ++version; }
  int64_t count() const { return static_cast<int64_t>(value.size()); }
};

// Owns parameters with stable addresses, in creation order.
template <typename T>
class ParameterSet {
 public:
  Parameter<T>& create(std::string name, Shape shape);
  Parameter<T>& create_uniform(std::string name, Shape shape, double bound, Rng& rng);
  Parameter<T>& create_constant(std::string name, Shape shape, T value);

  const std::vector<Parameter<T>*>& all() const { return view_; }
  Parameter<T>* find(const std::string& name) const;
  Parameter<T>& get(const std::string& name) const;

  int64_t count() const;
  void zero_grad();
  uint64_t version_sum() const;

 private:
  std::vector<std::unique_ptr<Parameter<T>>> owned_;
  std::vector<Parameter<T>*> view_;
};

}  // namespace decsde::numkernel
