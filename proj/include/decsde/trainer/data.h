#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "decsde/nmt/batch.h"

namespace decsde::trainer {

// Sentence pairs whose targets are in one language.
struct ParallelCorpus {
  std::string lang;
  std::vector<nmt::SentencePair> pairs;
};

// One batch: rows of corpora[corpus].
struct BatchRef {
  int32_t corpus = 0;
  std::vector<size_t> rows;
};

// Splits every corpus into single-language batches of at most batch_tokens
// padded target tokens (at least one sentence each), similar lengths grouped,
// then interleaves the languages. temperature == 1 draws the next language in
// proportion to its remaining batches, so each batch is used exactly once;
// otherwise languages are drawn with weight size^(1/temperature) and small
// corpora cycle. The order depends only on (seed, epoch).
std::vector<BatchRef> plan_epoch(std::span<const ParallelCorpus> corpora, int64_t batch_tokens, uint64_t seed,
                                 int64_t epoch, double temperature = 1.0);

// Fixed length-sorted batches for evaluation.
std::vector<BatchRef> plan_eval(std::span<const ParallelCorpus> corpora, int64_t batch_tokens);

}  // namespace decsde::trainer
