#include "decsde/numkernel/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "decsde/common/random.h"

namespace decsde::numkernel {
namespace {

template <typename T>
double eval_loss(const std::function<Var(Tape<T>&)>& loss_fn) {
  Tape<T> tape(false);
  Var loss = loss_fn(tape);
  return static_cast<double>(tape.value(loss).item());
}

}  // namespace

template <typename T>
GradCheckReport finite_diff_check(const std::function<Var(Tape<T>&)>& loss_fn,
                                  std::span<Parameter<T>* const> params, const GradCheckOptions& options) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<T> tape(true);
    Var loss = loss_fn(tape);
    tape.backward(loss);
  }

  GradCheckReport report;
  Rng rng(options.seed);
  for (auto* p : params) {
    std::vector<size_t> idx(p->value.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    if (options.max_entries_per_param > 0 && static_cast<int64_t>(idx.size()) > options.max_entries_per_param) {
      rng.shuffle(idx.begin(), idx.end());
      idx.resize(static_cast<size_t>(options.max_entries_per_param));
    }
    double worst = 0.0;
    for (size_t i : idx) {
      const T saved = p->value[i];
      p->value[i] = saved + static_cast<T>(options.step);
      const double up = eval_loss(loss_fn);
      p->value[i] = saved - static_cast<T>(options.step);
      const double down = eval_loss(loss_fn);
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = static_cast<double>(p->grad[i]);
      const double denom = std::max({std::abs(numeric), std::abs(analytic), options.floor});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
      ++report.entries_checked;
    }
    report.per_param.emplace_back(p->name, worst);
    if (worst >= report.max_rel_error) {
      report.max_rel_error = worst;
      report.worst_param = p->name;
    }
  }
  return report;
}

template GradCheckReport finite_diff_check<float>(const std::function<Var(Tape<float>&)>&,
                                                  std::span<Parameter<float>* const>, const GradCheckOptions&);
template GradCheckReport finite_diff_check<double>(const std::function<Var(Tape<double>&)>&,
                                                   std::span<Parameter<double>* const>, const GradCheckOptions&);

}  // namespace decsde::numkernel
