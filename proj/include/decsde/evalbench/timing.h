#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

#include "decsde/common/error.h"

namespace decsde::evalbench {

struct Timing {
  std::vector<double> seconds;  // one entry per measured run

  double median() const {
    auto s = seconds;
    std::sort(s.begin(), s.end());
    const size_t n = s.size();
    if (n == 0) return 0;
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
  }
  double min() const { return seconds.empty() ? 0 : *std::min_element(seconds.begin(), seconds.end()); }
  double max() const { return seconds.empty() ? 0 : *std::max_element(seconds.begin(), seconds.end()); }
};

// Wall-clock timing of fn: `warmup` unmeasured calls, then `runs` measured ones.
template <typename Fn>
Timing time_runs(Fn&& fn, int runs = 3, int warmup = 1) {
  if (runs < 1) throw ConfigError("time_runs: need at least one run");
  for (int i = 0; i < warmup; ++i) fn();
  Timing t;
  for (int i = 0; i < runs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  return t;
}

}  // namespace decsde::evalbench
