#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "decsde/numkernel/tape.h"

namespace decsde::numkernel {

struct GradCheckOptions {
  double step = 1e-5;
  // Entries sampled per parameter tensor; <= 0 checks every entry.
  int64_t max_entries_per_param = 0;
  // Denominator floor for the relative error so exact-zero gradients do not
  // divide by zero: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  uint64_t seed = 7;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int64_t entries_checked = 0;
  std::vector<std::pair<std::string, double>> per_param;
};

// Compares reverse-mode gradients of a scalar loss against central finite
// differences. loss_fn builds the loss on the tape it is given and must be a
// pure function of the parameter values (seed any dropout inside it).
// Parameter grads are zeroed before and left holding the analytic gradient.
template <typename T>
GradCheckReport finite_diff_check(const std::function<Var(Tape<T>&)>& loss_fn,
                                  std::span<Parameter<T>* const> params, const GradCheckOptions& options = {});

}  // namespace decsde::numkernel
