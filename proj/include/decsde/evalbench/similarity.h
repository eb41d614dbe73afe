#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decsde/numkernel/tensor.h"

namespace decsde::evalbench {

// Levenshtein distance over unicode scalars.
int64_t edit_distance(std::string_view a, std::string_view b);

struct WordPair {
  std::string hrl;
  std::string lrl;
  int64_t distance;

  friend bool operator==(const WordPair&, const WordPair&) = default;
};

// Cross-language pairs with edit distance in [1, max_distance]. Inputs are
// word lists in descending frequency; pairs come out in (lrl rank, hrl rank)
// order and each distance bucket keeps at most cap_per_bucket pairs (0 = all).
std::vector<WordPair> extract_word_pairs(std::span<const std::string> hrl_words,
                                         std::span<const std::string> lrl_words, int64_t max_distance = 4,
                                         int64_t cap_per_bucket = 0);

// For query q, the rank of candidate gold[q] among all candidates by cosine
// similarity: 1 + number of candidates strictly more similar. Returns 1/rank.
template <typename T>
std::vector<double> reciprocal_ranks(const numkernel::Tensor<T>& queries, const numkernel::Tensor<T>& candidates,
                                     std::span<const int64_t> gold);

struct MrrBucket {
  int64_t distance;
  int64_t pairs;
  double mrr;
};

// Mean reciprocal rank per edit distance, ascending; empty buckets omitted.
std::vector<MrrBucket> mrr_by_distance(std::span<const WordPair> pairs, std::span<const double> rr);

struct MrrGain {
  int64_t distance;
  int64_t pairs;
  double model;
  double baseline;
  double gain;
};

// Buckets present in both; gain = model - baseline.
std::vector<MrrGain> mrr_gain(std::span<const MrrBucket> model, std::span<const MrrBucket> baseline);

// Cosine similarity of two equal-length vectors; 0 when either is zero.
double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace decsde::evalbench
