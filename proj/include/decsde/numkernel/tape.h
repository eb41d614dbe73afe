#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "decsde/numkernel/parameter.h"
#include "decsde/numkernel/tensor.h"

namespace decsde::numkernel {

struct KernelSettings {
#ifdef NDEBUG
  bool check_finite = false;
#else
  bool check_finite = true;
#endif
};

// Process-wide switches. check_finite makes every recorded op scan its output
// for NaN/Inf and throw NumericError; benchmarks turn it off.
KernelSettings& kernel_settings();

// Handle to a node on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Per-forward record of values and backward closures (reverse-mode AD).
// Node values are immutable once recorded.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, Var self)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor<T> value);
  // The parameter must outlive the tape; its value is read in place.
  Var param(Parameter<T>& p);

  // Appends an op result. inputs decide whether the node needs a gradient;
  // backward is dropped when none of them does.
  Var record(const char* op, Tensor<T> value, std::initializer_list<Var> inputs, Backward backward);

  const Tensor<T>& value(Var v) const;
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  // Gradient buffer of v, zero-allocated on first use.
  Tensor<T>& grad(Var v);

  // Accumulates d(loss)/d(param) into every Parameter::grad reachable from
  // loss. A tape supports one backward pass.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    Backward backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };
  const Node& node(Var v) const;
  Node& node(Var v);

  bool grad_enabled_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int32_t> param_nodes_;
};

}  // namespace decsde::numkernel
