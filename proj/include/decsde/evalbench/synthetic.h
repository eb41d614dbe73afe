#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace decsde::evalbench {

// A toy source language translated into a high-resource target (HRL) and a
// closely related low-resource one (LRL). Both targets share roots; LRL words
// are HRL words with accent-like character substitutions.
struct SyntheticConfig {
  uint64_t seed = 1;
  int64_t root_vocab_size = 800;
  // Mean number of substituted characters per LRL word, in [0, 2]. Every word
  // gets floor or ceil of the rate, so corrupted words differ by 1 or 2.
  double corruption_rate = 1.0;
  int64_t hrl_pairs = 5000;
  int64_t lrl_pairs = 400;  // 5-10% of hrl_pairs
  int64_t dev_pairs = 100;
  int64_t test_pairs = 200;
  int64_t min_words = 3;
  int64_t max_words = 9;
  double zipf_exponent = 1.0;

  void validate() const;
};

struct ParallelText {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
};

struct SyntheticPair {
  // Lexicons aligned by root index.
  std::vector<std::string> source_words;
  std::vector<std::string> hrl_words;
  std::vector<std::string> lrl_words;
  ParallelText hrl_train;
  ParallelText hrl_dev;
  ParallelText lrl_train;
  ParallelText lrl_dev;
  ParallelText lrl_test;
};

SyntheticPair make_synthetic_pair(const SyntheticConfig& cfg);

// Mean edit distance between aligned HRL and LRL lexicon entries.
double mean_lexicon_distance(const SyntheticPair& pair);

// Writes <dir>/{hrl,lrl}.{train,dev,test}.{src,tgt} (lines) and lexicon.tsv.
void write_synthetic_pair(const SyntheticPair& pair, const std::filesystem::path& dir);

}  // namespace decsde::evalbench
