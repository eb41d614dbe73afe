#include "decsde/numkernel/parameter.h"

namespace decsde::numkernel {

template <typename T>
Parameter<T>& ParameterSet<T>::create(std::string name, Shape shape) {
  if (find(name) != nullptr) throw ContractError("duplicate parameter name " + name);
  owned_.push_back(std::make_unique<Parameter<T>>(std::move(name), Tensor<T>(std::move(shape))));
  view_.push_back(owned_.back().get());
  return *owned_.back();
}

template <typename T>
Parameter<T>& ParameterSet<T>::create_uniform(std::string name, Shape shape, double bound, Rng& rng) {
  auto& p = create(std::move(name), std::move(shape));
  for (auto& v : p.value.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return p;
}

template <typename T>
Parameter<T>& ParameterSet<T>::create_constant(std::string name, Shape shape, T value) {
  auto& p = create(std::move(name), std::move(shape));
  p.value.fill(value);
  return p;
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  for (auto* p : view_)
    if (p->name == name) return p;
  return nullptr;
}

template <typename T>
Parameter<T>& ParameterSet<T>::get(const std::string& name) const {
  auto* p = find(name);
  if (p == nullptr) throw ContractError("no parameter named " + name);
  return *p;
}

template <typename T>
int64_t ParameterSet<T>::count() const {
  int64_t n = 0;
  for (auto* p : view_) n += p->count();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto* p : view_) p->zero_grad();
}

template <typename T>
uint64_t ParameterSet<T>::version_sum() const {
  uint64_t v = 0;
  for (auto* p : view_) v += p->version;
  return v;
}

template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace decsde::numkernel
