#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decsde/numkernel/parameter.h"
#include "decsde/numkernel/tape.h"

namespace decsde::trainer {

using numkernel::Parameter;
using numkernel::Tensor;

// Linear warmup to lr_peak at step == warmup, then lr_peak * sqrt(warmup / step).
// Steps count from 1.
double lr_schedule(int64_t step, int64_t warmup, double lr_peak);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moments are kept per parameter, in the order the
// parameters were given at construction.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig config = {});

  // One update with learning rate lr; clears the gradients afterwards and
  // bumps each parameter's version.
  void step(double lr);

  int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Parameter<T>*>& params() const { return params_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  void set_steps(int64_t steps) { steps_ = steps; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig config_;
  std::vector<Tensor<T>> m_, v_;
  int64_t steps_ = 0;
};

// Label-smoothed cross entropy averaged over targets != ignore_index:
//   (1 - eps) * -log p(y) + eps * mean_j -log p(j)
template <typename T>
numkernel::Var label_smoothed_nll(numkernel::Tape<T>& tape, numkernel::Var logits, std::span<const int64_t> targets,
                                  T eps, int64_t ignore_index);
template <typename T>
T label_smoothed_nll(const Tensor<T>& logits, std::span<const int64_t> targets, T eps, int64_t ignore_index);

}  // namespace decsde::trainer
