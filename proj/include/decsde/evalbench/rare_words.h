#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace decsde::evalbench {

using WordFrequencies = std::unordered_map<std::string, int64_t>;

// Whitespace-token counts over a corpus.
WordFrequencies word_frequencies(std::span<const std::string> corpus);

// Bucket [lo, hi) of training frequency: [0,1), [1,2), [2,4), [4,8), ...
struct F1Bucket {
  int64_t lo;
  int64_t hi;
  int64_t ref_words = 0;
  int64_t hyp_words = 0;
  int64_t matches = 0;  // per-sentence clipped
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Word F1 bucketed by the training frequency of each word. Matches are clipped
// per sentence: min(count in hyp, count in ref). Empty buckets are omitted.
std::vector<F1Bucket> rare_word_f1(std::span<const std::string> hyps, std::span<const std::string> refs,
                                   const WordFrequencies& train_freq);

}  // namespace decsde::evalbench
