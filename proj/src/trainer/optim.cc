#include "decsde/trainer/optim.h"

#include <cmath>

#include "decsde/common/error.h"
#include "decsde/numkernel/ops.h"

namespace decsde::trainer {

double lr_schedule(int64_t step, int64_t warmup, double lr_peak) {
  if (warmup < 1) throw ConfigError("warmup_steps must be >= 1");
  if (step < 1) return 0.0;
  if (step <= warmup) return lr_peak * static_cast<double>(step) / static_cast<double>(warmup);
  return lr_peak * std::sqrt(static_cast<double>(warmup) / static_cast<double>(step));
}

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

template <typename T>
void Adam<T>::step(double lr) {
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  const T step_size = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(config_.eps);
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i];
    T* w = p.value.data();
    T* g = p.grad.data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    for (size_t k = 0; k < p.value.size(); ++k) {
      m[k] = tb1 * m[k] + (T(1) - tb1) * g[k];
      v[k] = tb2 * v[k] + (T(1) - tb2) * g[k] * g[k];
      w[k] -= step_size * m[k] / (std::sqrt(v[k] * inv_c2) + eps);
      g[k] = T(0);
    }
    p.touch();
  }
}

template <typename T>
numkernel::Var label_smoothed_nll(numkernel::Tape<T>& tape, numkernel::Var logits, std::span<const int64_t> targets,
                                  T eps, int64_t ignore_index) {
  if (!(eps >= T(0) && eps < T(1))) throw ConfigError("label smoothing must be in [0, 1)");
  return numkernel::cross_entropy(tape, logits, targets, eps, ignore_index);
}

template <typename T>
T label_smoothed_nll(const Tensor<T>& logits, std::span<const int64_t> targets, T eps, int64_t ignore_index) {
  numkernel::Tape<T> tape(false);
  return tape.value(label_smoothed_nll(tape, tape.constant(logits), targets, eps, ignore_index)).item();
}

template class Adam<float>;
template class Adam<double>;
template numkernel::Var label_smoothed_nll(numkernel::Tape<float>&, numkernel::Var, std::span<const int64_t>, float,
                                           int64_t);
template numkernel::Var label_smoothed_nll(numkernel::Tape<double>&, numkernel::Var, std::span<const int64_t>, double,
                                           int64_t);
template float label_smoothed_nll(const Tensor<float>&, std::span<const int64_t>, float, int64_t);
template double label_smoothed_nll(const Tensor<double>&, std::span<const int64_t>, double, int64_t);

}  // namespace decsde::trainer
