#include "decsde/numkernel/tape.h"

namespace decsde::numkernel {

KernelSettings& kernel_settings() {
  static KernelSettings settings;
  return settings;
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) throw ContractError("invalid tape variable");
  return nodes_[static_cast<size_t>(v.id)];
}

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
  if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) throw ContractError("invalid tape variable");
  return nodes_[static_cast<size_t>(v.id)];
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

template <typename T>
Var Tape<T>::param(Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = grad_enabled_;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<int32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var{id};
}

template <typename T>
Var Tape<T>::record(const char* op, Tensor<T> value, std::initializer_list<Var> inputs, Backward backward) {
  if (kernel_settings().check_finite && !value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node n;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (Var in : inputs) n.requires_grad = n.requires_grad || node(in).requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = node(v);
  return n.external != nullptr ? *n.external : n.value;
}

template <typename T>
Tensor<T>& Tape<T>::grad(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) {
    const Tensor<T>& val = n.external != nullptr ? *n.external : n.value;
    n.grad = Tensor<T>(val.shape());
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (!grad_enabled_) throw ContractError("backward on a tape recorded without gradients");
  const Tensor<T>& lv = value(loss);
  if (!lv.is_scalar()) throw ContractError("backward needs a scalar loss, got shape " + shape_string(lv.shape()));
  if (backward_done_) throw ContractError("backward already ran on this tape");
  backward_done_ = true;
  if (!node(loss).requires_grad) return;
  grad(loss)[0] = T(1);
  for (int32_t i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, Var{i});
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    auto& g = n.param->grad;
    for (size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace decsde::numkernel
