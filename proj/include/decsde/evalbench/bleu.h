#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace decsde::evalbench {

struct BleuReport {
  double score = 0;                    // 0..100
  std::array<double, 4> precisions{};  // percent, after smoothing
  std::array<int64_t, 4> matches{};
  std::array<int64_t, 4> totals{};
  double brevity_penalty = 0;
  int64_t hyp_len = 0;
  int64_t ref_len = 0;

  // e.g. "BLEU = 59.46 75.0/66.7/50.0/50.0 (BP = 1.000 ratio = 1.000 hyp_len = 4 ref_len = 4)"
  std::string to_string() const;
};

// The mteval-v13a tokenizer as used by SacreBLEU's default "13a" setting.
std::vector<std::string> tokenize_13a(std::string_view line);

// Corpus BLEU-4 against a single reference per sentence. Zero match counts are
// smoothed exponentially: the k-th zero precision becomes 1 / (2^k * total).
// An empty hypothesis corpus scores 0.
BleuReport bleu_corpus(std::span<const std::string> hyps, std::span<const std::string> refs);

}  // namespace decsde::evalbench
